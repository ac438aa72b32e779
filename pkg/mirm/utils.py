from __future__ import annotations

import csv
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Iterable, Sequence, TextIO, TypeVar

import numpy as np

from mirm import config
from mirm.errors import ConfigError

T = TypeVar("T")
R = TypeVar("R")


def format_value(value: Any) -> str:
    # repr of a Python float is the shortest string that parses back exactly
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return str(value)


def write_csv(header: Sequence[str], rows: Iterable[Sequence[Any]], fh: TextIO) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        if len(row) != len(header):
            raise ConfigError(f"row {list(row)!r} does not match header {list(header)!r}")
        writer.writerow([format_value(value) for value in row])


def emit_csv(header: Sequence[str], rows: Iterable[Sequence[Any]], path: str | Path = "-") -> None:
    """Header first, one line per row, reals in shortest round-trip form; "-" is stdout."""
    if str(path) == "-":
        write_csv(header, rows, sys.stdout)
        return
    try:
        with open(path, "w", newline="") as fh:
            write_csv(header, rows, fh)
    except OSError as e:
        raise ConfigError(f"cannot write {path}: {e}") from e


def format_rows(rows: Sequence[Sequence[Any]], *, max_lines: int = 10) -> str:
    lines = [",".join(format_value(value) for value in row) for row in rows]
    if len(lines) > max_lines:
        lines = lines[: max_lines // 2] + ["[...]"] + lines[-max_lines // 2 :]
    return "\n".join(lines)


def child_rngs(seed: int, count: int) -> list[np.random.Generator]:
    """Independent generators for `count` trials/batches, fixed by `seed` alone."""
    sequences = np.random.SeedSequence(seed).spawn(count)
    return [np.random.default_rng(sequence) for sequence in sequences]


def ordered_map(fn: Callable[[T], R], items: Sequence[T], *, workers: int | None = None) -> list[R]:
    workers = min(workers or config.MIRM_THREADS, max(len(items), 1))
    if workers <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def batch_means_se(samples: np.ndarray, n_batches: int) -> float:
    """Standard error of the sample mean from contiguous batch means."""
    n_batches = max(2, min(n_batches, samples.shape[0]))
    means = np.array([batch.mean() for batch in np.array_split(samples, n_batches)])
    return float(means.std(ddof=1) / np.sqrt(n_batches))


@dataclass
class Timed:
    elapsed: float | None = field(init=False, default=None)
    _start_time: float | None = field(init=False, default=None, repr=False)

    def __enter__(self) -> Timed:
        self._start_time = time.monotonic()
        return self

    def __exit__(self, *args):
        self.elapsed = time.monotonic() - self._start_time
