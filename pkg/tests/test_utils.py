import csv
import io
import time

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from mirm import utils
from mirm.errors import ConfigError


@given(st.floats(allow_nan=False, allow_infinity=False))
def test_reals_round_trip_exactly(value):
    assert float(utils.format_value(value)) == value
    assert float(utils.format_value(np.float64(value))) == value


def test_format_value_kinds():
    assert utils.format_value(True) == "true"
    assert utils.format_value(np.bool_(False)) == "false"
    assert utils.format_value(np.int64(7)) == "7"
    assert utils.format_value("rho") == "rho"


def test_header_only_csv(tmp_path):
    path = tmp_path / "empty.csv"
    utils.emit_csv(["a", "b"], [], path)
    assert path.read_text() == "a,b\n"


def test_csv_preserves_row_order():
    fh = io.StringIO()
    rows = [[i, i / 7] for i in range(10_000)]
    utils.write_csv(["i", "x"], rows, fh)
    parsed = list(csv.reader(io.StringIO(fh.getvalue())))[1:]
    assert [int(row[0]) for row in parsed] == list(range(10_000))
    assert all(float(row[1]) == i / 7 for i, row in enumerate(parsed))


def test_csv_rejects_ragged_rows():
    with pytest.raises(ConfigError):
        utils.write_csv(["a", "b"], [[1]], io.StringIO())


def test_emit_csv_to_stdout(capsys):
    utils.emit_csv(["a"], [[0.1]])
    assert capsys.readouterr().out == "a\n0.1\n"


def test_format_rows_elides_the_middle():
    text = utils.format_rows([[i] for i in range(100)], max_lines=4)
    assert text.splitlines() == ["0", "1", "[...]", "98", "99"]


def test_child_rngs_are_reproducible():
    first = [rng.standard_normal() for rng in utils.child_rngs(5, 3)]
    again = [rng.standard_normal() for rng in utils.child_rngs(5, 3)]
    assert first == again
    assert len(set(first)) == 3
    # a longer spawn extends a shorter one
    assert [rng.standard_normal() for rng in utils.child_rngs(5, 4)][:3] == first


def test_ordered_map_keeps_order():
    assert utils.ordered_map(lambda x: x * x, list(range(20)), workers=4) == [x * x for x in range(20)]
    assert utils.ordered_map(str, [], workers=4) == []


def test_batch_means_standard_error():
    assert utils.batch_means_se(np.ones(100), 10) == 0.0
    samples = np.random.default_rng(0).standard_normal(100_000)
    assert utils.batch_means_se(samples, 20) == pytest.approx(1 / np.sqrt(100_000), rel=0.5)


def test_timed():
    with utils.Timed() as timer:
        time.sleep(0.01)
    assert timer.elapsed >= 0.01
