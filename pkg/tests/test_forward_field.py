import math

import numpy as np
import pytest

from mirm import forward_field as ff
from mirm.core_risk import Claim
from mirm.errors import ConfigError, ModelError, StructuralError


@pytest.fixture(scope="module")
def tilted_spec():
    return ff.CoefficientSpec(phi=0.3)


def test_zero_coefficients_leave_z_and_y_flat():
    spec = ff.CoefficientSpec(gamma=2.0)
    bundle = ff.simulate(spec, 1000, seed=1)
    np.testing.assert_array_equal(bundle.Z, 1.0)
    np.testing.assert_allclose(bundle.Y, 0.5)
    assert bundle.A[0, spec.step_index(1.0)] == pytest.approx(0.04, abs=1e-14)
    assert np.all(bundle.A == bundle.A[0])


def test_simulation_is_seeded(field_spec):
    a = ff.simulate(field_spec, 5000, seed=3)
    b = ff.simulate(field_spec, 5000, seed=3)
    c = ff.simulate(field_spec, 5000, seed=4)
    np.testing.assert_array_equal(a.S, b.S)
    assert not np.array_equal(a.S, c.S)
    # batches are seeded independently of how many there are
    np.testing.assert_array_equal(ff.simulate(field_spec, 100, seed=3).S, a.S[:100])


def test_u_at_time_zero(field_bundle):
    for x in (-1.0, 0.0, 2.5):
        np.testing.assert_allclose(ff.U_eval(field_bundle, 0.0, x), -math.exp(-x))


def test_u_increases_to_zero(field_bundle):
    values = [ff.U_eval(field_bundle, 1.0, x)[:10] for x in (0.0, 5.0, 50.0)]
    assert np.all(values[0] < values[1]) and np.all(values[1] < values[2])
    assert np.all(values[2] < 0) and np.all(values[2] > -1e-20)


def test_off_grid_times_are_rejected(field_spec, field_bundle):
    with pytest.raises(StructuralError):
        field_spec.step_index(0.33)
    with pytest.raises(StructuralError):
        ff.U_eval(field_bundle, 1.5, 0.0)


def test_zero_strategy_value(field_bundle):
    values = ff.U_eval(field_bundle, 1.0, 0.0)
    assert values.mean() == pytest.approx(-math.exp(0.02), abs=1e-12)
    assert values.mean() < -1.0


def test_strategies_are_supermartingales(field_spec, field_bundle):
    report = ff.supermartingale_probe(field_spec, ff.StrategyFamily(), 1.0, 0, 7, bundle=field_bundle)
    assert report.passed
    assert report.u0 == -1.0
    assert len(report.estimates) + report.rejected == 100
    assert report.best.agrees_with(report.u0)


@pytest.mark.slow
def test_strategies_are_supermartingales_at_full_size(field_spec):
    report = ff.supermartingale_probe(field_spec, ff.StrategyFamily(), 1.0, 100_000, seed=0, x=0.5)
    assert report.passed


def test_ferm_of_cash(field_spec, field_bundle):
    estimate = ff.ferm_mc(field_spec, ff.constant_claim(0.3), 1.0, bundle=field_bundle)
    assert estimate.agrees_with(-0.3)
    assert estimate.n_paths == 20_000 and estimate.seed == 7


def test_ferm_does_not_depend_on_the_evaluation_time(field_spec, field_bundle):
    claim = ff.capped_call(1.0, 0.5, 0.5)
    at_maturity = ff.ferm_mc(field_spec, claim, 0.5, bundle=field_bundle)
    later = ff.ferm_mc(field_spec, claim, 0.75, bundle=field_bundle)
    assert at_maturity.agrees_with(later)
    assert at_maturity.estimate < 0


def test_ferm_of_traded_gains(field_spec, field_bundle):
    family = ff.StrategyFamily()
    claim = family.gains_claim([0.5, -0.5, 0.0, 0.0], 0.5)
    assert ff.ferm_mc(field_spec, claim, 0.5, family, bundle=field_bundle).agrees_with(0.0)


def test_ferm_of_an_unhedgeable_digital(field_spec, field_bundle):
    # W² is independent of the stock, so hedging cannot help
    claim = ff.factor_digital(0.0, 1.0)
    estimate = ff.ferm_mc(field_spec, claim, 1.0, bundle=field_bundle)
    assert estimate.agrees_with(math.log((1 + math.exp(-1)) / 2))


def test_ferm_rejects_early_evaluation(field_spec, field_bundle):
    with pytest.raises(StructuralError):
        ff.ferm_mc(field_spec, ff.capped_call(1.0, 0.5, 0.5), 0.25, bundle=field_bundle)


@pytest.mark.slow
def test_ferm_acceptance_size(field_spec):
    bundle = ff.simulate(field_spec, 100_000, seed=0)
    assert ff.ferm_mc(field_spec, ff.constant_claim(1.0), 1.0, bundle=bundle).agrees_with(-1.0)
    claim = ff.capped_call(1.0, 0.5, 0.5)
    first = ff.ferm_mc(field_spec, claim, 0.5, bundle=bundle)
    assert first.agrees_with(ff.ferm_mc(field_spec, claim, 0.75, bundle=bundle))


def test_indifference_is_wealth_independent(field_spec, field_bundle):
    claim = ff.capped_call(1.0, 0.5, 0.5)
    poor = ff.ferm_indifference_mc(field_spec, claim, 0.5, x=0.0, bundle=field_bundle)
    rich = ff.ferm_indifference_mc(field_spec, claim, 0.5, x=2.0, bundle=field_bundle)
    assert poor.estimate == pytest.approx(rich.estimate, abs=1e-7)
    assert poor.agrees_with(ff.ferm_mc(field_spec, claim, 0.5, bundle=field_bundle))


def test_case_a_consistency(field_spec):
    zero = ff.entropic_consistency_case_a(field_spec, ff.constant_claim(0.0), 1.0, n_paths=20_000, seed=3)
    assert zero.lhs.agrees_with(0.0) and zero.rhs.agrees_with(0.0)
    assert zero.parts["H_t"] == pytest.approx(0.02, abs=5e-3)
    assert zero.parts["A_t"] == pytest.approx(0.04)

    cash = ff.entropic_consistency_case_a(field_spec, ff.constant_claim(0.5), 1.0, n_paths=20_000, seed=3)
    assert cash.lhs.agrees_with(-0.5) and cash.rhs.agrees_with(-0.5)

    call = ff.entropic_consistency_case_a(field_spec, ff.capped_call(1.0, 0.5, 0.5), 0.5, n_paths=20_000, seed=3)
    assert call.passed
    assert [row[0] for row in call.rows()] == ["lhs", "rhs", "diff"]


def test_case_a_needs_plain_coefficients(tilted_spec):
    with pytest.raises(ModelError):
        ff.entropic_consistency_case_a(tilted_spec, ff.constant_claim(0.0), 1.0, n_paths=10, seed=0)


def test_case_b_consistency(tilted_spec):
    report = ff.entropic_consistency_case_b(tilted_spec, ff.capped_call(1.0, 0.5, 0.5), 0.5, n_paths=20_000, seed=5)
    assert report.passed
    assert report.rhs.seed == 6
    with pytest.raises(ModelError):
        ff.entropic_consistency_case_b(ff.CoefficientSpec(delta=0.1), ff.constant_claim(0.0), 0.5, n_paths=10, seed=0)


def test_density_is_a_martingale(tilted_spec):
    test = ff.z_martingale_test(ff.simulate(tilted_spec, 20_000, seed=11))
    assert test.statistics.shape == (20,)
    # twenty simultaneous statistics
    assert test.passed(sigmas=4.5)


def test_strategy_family(field_bundle):
    family = ff.StrategyFamily()
    matrix = family.cell_matrix(20)
    assert matrix.shape == (20, 4)
    np.testing.assert_array_equal(matrix.sum(axis=1), 1.0)
    np.testing.assert_array_equal(matrix.sum(axis=0), 5.0)
    theta = np.array([1.0, -2.0, 0.5, 0.0])
    expected = (field_bundle.returns * (matrix @ theta)).sum(axis=1)
    np.testing.assert_allclose(family.gains(field_bundle, theta, 20), expected)
    assert family.admissible(field_bundle, theta)
    assert not ff.StrategyFamily(gains_bound=1e-6).admissible(field_bundle, theta)
    with pytest.raises(ConfigError):
        ff.StrategyFamily(cells=0)


def test_coefficient_spec_validation():
    with pytest.raises(ModelError):
        ff.CoefficientSpec(gamma=0.0)
    with pytest.raises(ModelError):
        ff.CoefficientSpec(sigma=0.0)
    with pytest.raises(ConfigError):
        ff.CoefficientSpec.from_dict({"kappa": 1.0})
    with pytest.raises(ConfigError):
        ff.CoefficientSpec.from_dict({"lambda": [0.1, 0.2], "n_steps": 3})
    spec = ff.CoefficientSpec.from_dict({"lambda": 0.3, "n_steps": 10, "dt": 0.1})
    np.testing.assert_array_equal(spec.lam, 0.3)
    assert spec.horizon == pytest.approx(1.0)


def test_path_claims(field_bundle, write_json):
    claim = ff.load_path_claim(
        write_json("call.json", {"kind": "capped_call", "strike": 1.0, "cap": 0.5, "maturity": 0.5})
    )
    values = ff._claim_values(field_bundle, claim)
    assert values.min() >= 0 and values.max() <= 0.5
    gains = ff.path_claim_from_dict({"kind": "gains", "theta": [1, 0, 0, 0], "maturity": 0.25})
    assert isinstance(gains, Claim) and gains.depth == 0.25
    with pytest.raises(ConfigError):
        ff.path_claim_from_dict({"kind": "lottery"})
    with pytest.raises(ConfigError):
        ff.path_claim_from_dict({"kind": "capped_call", "strike": 1.0})


def test_u_is_increasing_and_concave(field_bundle):
    xs = np.linspace(-2.0, 2.0, 9)
    values = np.stack([ff.U_eval(field_bundle, 1.0, x)[:200] for x in xs])
    steps = np.diff(values, axis=0)
    assert np.all(steps > 0)
    assert np.all(np.diff(steps, axis=0) < 0)


def test_martingale_threshold_defaults_to_three_standard_errors():
    assert ff.MartingaleTest(np.array([0.5, -2.9])).passed()
    wide = ff.MartingaleTest(np.array([0.5, -3.5]))
    assert not wide.passed()
    assert wide.passed(sigmas=4.5)
