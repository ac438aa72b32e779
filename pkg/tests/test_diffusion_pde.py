import math
from dataclasses import replace

import numpy as np
import pytest

from mirm import diffusion_pde as dp
from mirm.errors import ConfigError, GridWarning, ModelError, StructuralError

SAMPLE_POINTS = [(0.0, -1.0), (0.0, 0.0), (0.1, 1.5), (0.25, -0.5), (0.4, 2.0)]


@pytest.fixture(scope="module")
def flat_spec():
    return dp.SVModelSpec(lam_const=0.5)


@pytest.fixture(scope="module")
def default_grid():
    return dp.Grid1D()


def _f_closed_form(spec, t, lam=0.5):
    return math.exp(spec.sign * spec.a * lam**2 * (spec.T - t) / 2)


def test_terminal_slice_is_one(sv_spec, coarse_grid):
    f = dp.solve_linear_f(sv_spec, sv_spec.T, coarse_grid)
    np.testing.assert_array_equal(f.at(sv_spec.T), 1.0)
    assert f.which == "f"
    assert f.times[0] == pytest.approx(0.0) and f.times[-1] == sv_spec.T
    assert dp.solve_linear_f(sv_spec, sv_spec.T_bar, coarse_grid).which == "f_bar"


@pytest.mark.parametrize("fk_sign", ["paper_pde", "paper_fk"])
def test_constant_lambda_f(flat_spec, default_grid, fk_sign):
    spec = replace(flat_spec, fk_sign=fk_sign)
    f = dp.solve_linear_f(spec, spec.T, default_grid)
    expected = np.array([_f_closed_form(spec, t) for t in f.times])
    assert np.max(np.abs(f.values - expected[:, None])) <= 1e-8


@pytest.mark.parametrize("method", ["transform", "lagged"])
def test_constant_lambda_p(flat_spec, default_grid, method):
    f = dp.solve_linear_f(flat_spec, flat_spec.T, default_grid)
    p = dp.solve_quasilinear_p(flat_spec, f, method=method)
    drift = flat_spec.a / 2 - flat_spec.rho * 0.5
    expected = default_grid.y[None, :] + drift * (flat_spec.T - p.times)[:, None]
    assert np.max(np.abs(p.values - expected)) <= 1e-6
    np.testing.assert_allclose(p.at(flat_spec.T), default_grid.y)


def test_transform_and_lagged_solves_agree(sv_spec, default_grid):
    f = dp.solve_linear_f(sv_spec, sv_spec.T, default_grid)
    transform = dp.solve_quasilinear_p(sv_spec, f)
    lagged = dp.solve_quasilinear_p(sv_spec, f, method="lagged")
    window = default_grid.window()
    assert np.max(np.abs(transform.values - lagged.values)[:, window]) <= 1e-4
    assert lagged.meta["iterations"] < 50


def test_residual_shrinks_under_refinement(sv_spec, coarse_grid):
    residuals = []
    for grid in (coarse_grid, coarse_grid.refined()):
        f = dp.solve_linear_f(sv_spec, sv_spec.T, grid)
        p = dp.solve_quasilinear_p(sv_spec, f)
        residuals.append(dp.quasilinear_residual(sv_spec, f, p, half_width=2.0))
    assert residuals[1] < residuals[0]


def test_g_is_the_derivative_of_f(sv_spec, default_grid):
    f_bar = dp.solve_linear_f(sv_spec, sv_spec.T_bar, default_grid)
    g_bar = dp.compute_g(sv_spec, f_bar)
    assert g_bar.which == "g_bar"
    np.testing.assert_array_equal(g_bar.at(sv_spec.T_bar), 0.0)
    window = default_grid.window()
    assert np.max(np.abs(g_bar.values - g_bar.central_difference)[:, window]) <= 1e-3
    at_T = g_bar.at(sv_spec.T)[window]
    assert np.all(at_T != 0) and len(set(np.sign(at_T))) == 1


def test_g_needs_the_same_grid(sv_spec, coarse_grid):
    f = dp.solve_linear_f(sv_spec, sv_spec.T, coarse_grid)
    with pytest.raises(StructuralError):
        dp.compute_g(sv_spec, f, coarse_grid.refined())
    with pytest.raises(StructuralError):
        dp.solve_quasilinear_p(sv_spec, f, coarse_grid.refined())


def test_fk_constant_lambda_is_deterministic(flat_spec):
    estimate = dp.fk_oracle(flat_spec, "f", 0.2, 0.3, n_paths=1000, seed=0)
    assert estimate.estimate == pytest.approx(_f_closed_form(flat_spec, 0.2), abs=1e-12)
    assert estimate.std_error == pytest.approx(0.0, abs=1e-15)


def test_fk_matches_finite_differences(sv_spec, default_grid):
    f = dp.solve_linear_f(sv_spec, sv_spec.T, default_grid)
    t, y = SAMPLE_POINTS[1]
    fd = float(np.interp(y, default_grid.y, f.at(t)))
    estimate = dp.fk_oracle(sv_spec, "f", t, y, n_paths=20_000, seed=1)
    assert estimate.agrees_with(fd)
    assert estimate.n_paths == 20_000 and estimate.seed == 1


@pytest.mark.slow
def test_fk_matches_finite_differences_at_every_sample_point(sv_spec, default_grid):
    f = dp.solve_linear_f(sv_spec, sv_spec.T, default_grid)
    for k, (t, y) in enumerate(SAMPLE_POINTS):
        fd = float(np.interp(y, default_grid.y, f.at(t)))
        assert dp.fk_oracle(sv_spec, "f", t, y, n_paths=100_000, seed=k).agrees_with(fd)


@pytest.mark.slow
def test_fk_g_bar_is_sign_definite(sv_spec, default_grid):
    f_bar = dp.solve_linear_f(sv_spec, sv_spec.T_bar, default_grid)
    fd = dp.compute_g(sv_spec, f_bar).at(sv_spec.T)
    signs = set()
    for k, y in enumerate((-2.0, 0.0, 2.0)):
        estimate = dp.fk_oracle(sv_spec, "g_bar", sv_spec.T, y, n_paths=20_000, seed=k, f_bar=f_bar)
        assert abs(estimate.estimate) > 3 * estimate.std_error
        assert np.sign(estimate.estimate) == np.sign(np.interp(y, default_grid.y, fd))
        signs.add(np.sign(estimate.estimate))
    assert len(signs) == 1


def test_fk_arguments(sv_spec):
    with pytest.raises(ConfigError):
        dp.fk_oracle(sv_spec, "f", 0.0, 0.0, n_paths=0)
    with pytest.raises(StructuralError):
        dp.fk_oracle(sv_spec, "f", 0.75, 0.0, n_paths=10)
    with pytest.raises(ConfigError):
        dp.fk_oracle(sv_spec, "p", 0.0, 0.0, n_paths=10)


def test_gap_on_a_coarse_grid(sv_spec, coarse_grid):
    report = dp.noncompliance_gap(sv_spec, coarse_grid, refine=False)
    assert report.gap > 0
    assert report.f_y_terminal <= 1e-12
    assert report.gbar_min > 0 and report.gbar_sign != 0
    assert report.gap_delta is None and not report.passed
    assert 0 <= report.argmax_t < sv_spec.T
    assert abs(report.argmax_y) <= coarse_grid.L / 2


@pytest.mark.slow
def test_gap_is_refinement_stable(sv_spec, default_grid):
    report = dp.noncompliance_gap(sv_spec, default_grid)
    assert report.gbar_stable
    assert report.gap > 10 * report.gap_delta
    assert report.passed
    rows = dict((row[0], row[1]) for row in report.rows())
    assert rows["passed"] is True and rows["fk_sign"] == "paper_pde"


@pytest.mark.slow
def test_gap_under_the_other_sign_convention(sv_spec, default_grid):
    report = dp.noncompliance_gap(replace(sv_spec, fk_sign="paper_fk"), default_grid)
    assert report.passed


def test_no_gap_when_horizons_coincide(coarse_grid):
    spec = dp.SVModelSpec(T=0.5, T_bar=0.5)
    assert dp.noncompliance_gap(spec, coarse_grid, refine=False).gap <= 1e-12


def test_no_gap_for_constant_lambda(flat_spec, coarse_grid):
    assert dp.noncompliance_gap(flat_spec, coarse_grid, refine=False).gap <= 1e-8


def test_coarse_time_steps_warn(sv_spec):
    grid = dp.Grid1D(n_y=401, steps_per_unit=2)
    with pytest.warns(GridWarning):
        dp.solve_linear_f(sv_spec, sv_spec.T, grid)


def test_solution_slices(sv_spec, coarse_grid):
    f = dp.solve_linear_f(sv_spec, sv_spec.T, coarse_grid)
    head = f.until(0.25)
    assert head.times[-1] == pytest.approx(0.25)
    with pytest.raises(StructuralError):
        f.at(0.123)
    rows = dp.solution_rows(f, t_stride=10, y_stride=20)
    assert len(rows) == len(range(0, f.times.size, 10)) * len(range(0, coarse_grid.n_y, 20))
    assert rows[0] == [0.0, -coarse_grid.L, float(f.values[0, 0])]


def test_model_validation():
    with pytest.raises(ModelError):
        dp.SVModelSpec(rho=1.0)
    with pytest.raises(ModelError):
        dp.SVModelSpec(eps=1.0, M=0.5)
    with pytest.raises(ModelError):
        dp.SVModelSpec(T=2.0, T_bar=1.0)
    with pytest.raises(ModelError):
        dp.SVModelSpec(fk_sign="other")
    with pytest.raises(ConfigError):
        dp.Grid1D(n_y=3)
    with pytest.raises(ConfigError):
        dp.Grid1D(theta=2.0)
    with pytest.raises(StructuralError):
        dp.Grid1D(steps_per_unit=3).steps(0.5)


def test_model_files(write_json):
    spec, grid = dp.load_sv_spec(write_json("sv.json", {"rho": 0.3, "lambda": 0.4, "n_y": 201, "fk_sign": "paper_fk"}))
    assert spec.rho == 0.3 and spec.lam_const == 0.4 and spec.fk_sign == "paper_fk"
    assert grid.n_y == 201
    with pytest.raises(ConfigError):
        dp.sv_spec_from_dict({"sigma": 1.0})
    with pytest.raises(ConfigError):
        dp.sv_spec_from_dict({"rho": "high"})


@pytest.mark.parametrize("fk_sign", ["paper_pde", "paper_fk"])
def test_f_within_constant_lambda_envelopes(sv_spec, default_grid, fk_sign):
    spec = replace(sv_spec, fk_sign=fk_sign)
    f = dp.solve_linear_f(spec, spec.T, default_grid)
    tau = (spec.T - f.times)[:, None]
    edges = [np.exp(spec.sign * 0.5 * spec.a * lam**2 * tau) for lam in (spec.eps, spec.M)]
    lower, upper = np.minimum(*edges), np.maximum(*edges)
    assert np.all(f.values >= lower - 1e-6)
    assert np.all(f.values <= upper + 1e-6)


@pytest.mark.parametrize("fk_sign, longer_is_lower", [("paper_pde", True), ("paper_fk", False)])
def test_f_is_monotone_in_the_horizon(sv_spec, coarse_grid, fk_sign, longer_is_lower):
    spec = replace(sv_spec, fk_sign=fk_sign)
    f = dp.solve_linear_f(spec, spec.T, coarse_grid)
    head = dp.solve_linear_f(spec, spec.T_bar, coarse_grid).until(spec.T)
    np.testing.assert_allclose(head.times, f.times, atol=1e-12)
    if longer_is_lower:
        assert np.all(head.values <= f.values + 1e-12)
    else:
        assert np.all(head.values >= f.values - 1e-12)


def test_gap_gate_tolerates_roundoff_in_f_y():
    # the one-sided edge stencil leaves a few ulps on a flat terminal row
    report = dp.GapReport(
        gap=0.0206,
        argmax_t=0.1,
        argmax_y=0.0,
        gbar_min=0.05,
        gbar_sign=1.0,
        f_y_terminal=3.552713678800501e-15,
        gap_delta=6.7e-7,
        gbar_min_delta=1e-4,
    )
    assert report.passed
    assert not replace(report, f_y_terminal=1e-6).passed
    assert not replace(report, gap_delta=0.01).passed
