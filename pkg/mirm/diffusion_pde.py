"""Finite-difference solves for the stochastic-volatility entropic example.

Every equation here is a backward problem of the form

    u_t + ½ u_yy + b(t, y) u_y + c(t, y) u + s(t, y) = 0,   u(T, y) given,

solved by a θ-scheme with tridiagonal (banded) systems. Boundary values
at ±L come from linear extrapolation, which is eliminated into the first
and last interior rows. The quasilinear price equation is linearized by
the exponential distortion v = exp((1 − ρ²)(p − y)).
"""

from __future__ import annotations

import json
import logging
import math
import warnings
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Callable, Literal

import numpy as np
from scipy import interpolate, linalg, special

from mirm import consts, utils
from mirm.core_risk import Estimate
from mirm.errors import ConfigError, GridWarning, ModelError, NumericalError, StructuralError

logger = logging.getLogger(__name__)

FkSign = Literal["paper_pde", "paper_fk"]
Which = Literal["f", "f_bar", "g", "g_bar", "p", "p_bar"]

# sign of the zeroth-order term ±½(1 − ρ²)λ² in the f-equation
_ZEROTH_ORDER_SIGN = {"paper_pde": -1.0, "paper_fk": 1.0}


@dataclass(frozen=True)
class SVModelSpec:
    rho: float = 0.5
    eps: float = 0.1
    M: float = 1.0
    T: float = 0.5
    T_bar: float = 1.0
    lam_const: float | None = None
    fk_sign: FkSign = consts.DEFAULT_FK_SIGN

    def __post_init__(self):
        if not 0 < self.rho < 1:
            raise ModelError(f"correlation must lie in (0, 1), got {self.rho}")
        if not 0 < self.eps < self.M < math.inf:
            raise ModelError(f"need 0 < eps < M < inf, got eps={self.eps}, M={self.M}")
        if not 0 < self.T <= self.T_bar:
            raise ModelError(f"need 0 < T <= T_bar, got T={self.T}, T_bar={self.T_bar}")
        if self.fk_sign not in _ZEROTH_ORDER_SIGN:
            raise ModelError(f"fk_sign must be one of {consts.FK_SIGNS}, got {self.fk_sign!r}")
        if self.lam_const is not None and self.lam_const <= 0:
            raise ModelError(f"a constant market price of risk must be positive, got {self.lam_const}")

    @property
    def a(self) -> float:
        return 1.0 - self.rho**2

    @property
    def sign(self) -> float:
        return _ZEROTH_ORDER_SIGN[self.fk_sign]

    def lam(self, y: np.ndarray) -> np.ndarray:
        if self.lam_const is not None:
            return np.full_like(np.asarray(y, dtype=float), self.lam_const)
        return self.eps + (self.M - self.eps) * special.expit(y)

    def dlam(self, y: np.ndarray) -> np.ndarray:
        if self.lam_const is not None:
            return np.zeros_like(np.asarray(y, dtype=float))
        s = special.expit(y)
        return (self.M - self.eps) * s * (1 - s)

    def zeroth_order(self, y: np.ndarray) -> np.ndarray:
        """c in the f-equation: ∓½(1 − ρ²)λ²."""
        return self.sign * 0.5 * self.a * self.lam(y) ** 2

    def A(self, y: np.ndarray) -> np.ndarray:
        return self.rho * self.dlam(y) - self.zeroth_order(y)

    def B(self, y: np.ndarray, f: np.ndarray) -> np.ndarray:
        return -self.sign * self.a * self.lam(y) * self.dlam(y) * f

    def check_on(self, grid: Grid1D) -> None:
        if self.lam_const is not None:
            return
        values = self.lam(grid.y)
        if np.any(np.diff(values) <= 0):
            raise ModelError("the market price of risk must be strictly increasing on the grid")
        if np.any(values <= self.eps) or np.any(values >= self.M):
            raise ModelError(f"the market price of risk leaves ({self.eps}, {self.M}) on the grid")


@dataclass(frozen=True)
class Grid1D:
    L: float = consts.DEFAULT_L
    n_y: int = consts.DEFAULT_N_Y
    steps_per_unit: int = consts.DEFAULT_STEPS_PER_UNIT
    theta: float = 0.5
    rannacher_steps: int = consts.DEFAULT_RANNACHER_STEPS

    def __post_init__(self):
        # four points leave two interior rows after eliminating both boundaries
        if self.n_y < 4 or self.L <= 0 or self.steps_per_unit < 1:
            raise ConfigError(f"need n_y >= 4, L > 0, steps_per_unit >= 1; got {self}")
        if not 0 <= self.theta <= 1:
            raise ConfigError(f"theta must lie in [0, 1], got {self.theta}")

    @property
    def y(self) -> np.ndarray:
        return np.linspace(-self.L, self.L, self.n_y)

    @property
    def dy(self) -> float:
        return 2 * self.L / (self.n_y - 1)

    @property
    def dt(self) -> float:
        return 1.0 / self.steps_per_unit

    def steps(self, duration: float) -> int:
        n = int(round(duration * self.steps_per_unit))
        if abs(n * self.dt - duration) > 1e-9:
            raise StructuralError(f"duration {duration} is not a multiple of dt={self.dt}")
        return n

    def refined(self) -> Grid1D:
        return replace(self, n_y=2 * self.n_y - 1, steps_per_unit=2 * self.steps_per_unit)

    def window(self, half_width: float | None = None) -> np.ndarray:
        half_width = self.L / 2 if half_width is None else half_width
        return np.abs(self.y) <= half_width + 1e-12


@dataclass(frozen=True)
class PDESolution:
    """values[i] is the slice at times[i]; times ascend and end at the horizon."""

    which: Which
    horizon: float
    times: np.ndarray
    grid: Grid1D
    values: np.ndarray
    meta: dict[str, Any] = field(default_factory=dict)
    central_difference: np.ndarray | None = field(default=None, repr=False)

    def index(self, t: float) -> int:
        i = int(round((t - self.times[0]) / self.grid.dt))
        if not 0 <= i < self.times.size or abs(self.times[i] - t) > 1e-9:
            raise StructuralError(f"time {t} is not on the {self.which} solution grid")
        return i

    def at(self, t: float) -> np.ndarray:
        return self.values[self.index(t)]

    def derivative(self) -> np.ndarray:
        return np.gradient(self.values, self.grid.dy, axis=1, edge_order=2)

    def until(self, t: float) -> PDESolution:
        """The slices with time <= t."""
        i = self.index(t)
        return replace(self, times=self.times[: i + 1], values=self.values[: i + 1])


Coefficients = Callable[[float], tuple[np.ndarray, np.ndarray, np.ndarray]]


def _operator(grid: Grid1D, b: np.ndarray, c: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Tridiagonal rows of ½∂yy + b∂y + c on the interior, boundaries eliminated."""
    h = grid.dy
    lo = (0.5 / h**2 - b / (2 * h))[1:-1].copy()
    di = (-1.0 / h**2 + c)[1:-1].copy()
    up = (0.5 / h**2 + b / (2 * h))[1:-1].copy()
    # u_0 = 2u_1 − u_2 and u_{n-1} = 2u_{n-2} − u_{n-3}
    di[0] += 2 * lo[0]
    up[0] -= lo[0]
    di[-1] += 2 * up[-1]
    lo[-1] -= up[-1]
    lo[0] = 0.0
    up[-1] = 0.0
    return lo, di, up


def _apply(rows: tuple[np.ndarray, np.ndarray, np.ndarray], u: np.ndarray) -> np.ndarray:
    lo, di, up = rows
    out = di * u
    out[1:] += lo[1:] * u[:-1]
    out[:-1] += up[:-1] * u[1:]
    return out


def _extend(interior: np.ndarray) -> np.ndarray:
    return np.concatenate([[2 * interior[0] - interior[1]], interior, [2 * interior[-1] - interior[-2]]])


def _theta_step(grid: Grid1D, u: np.ndarray, coeffs: Coefficients, level: float, dt: float, theta: float) -> np.ndarray:
    """One step from backward level `level` to `level + dt / grid.dt`; u is the interior."""
    b0, c0, s0 = coeffs(level)
    b1, c1, s1 = coeffs(level + dt / grid.dt)
    explicit = _operator(grid, b0, c0)
    implicit = _operator(grid, b1, c1)
    rhs = u + (1 - theta) * dt * _apply(explicit, u) + dt * (theta * s1[1:-1] + (1 - theta) * s0[1:-1])
    lo, di, up = implicit
    banded = np.zeros((3, u.size))
    banded[0, 1:] = -theta * dt * up[:-1]
    banded[1] = 1.0 - theta * dt * di
    banded[2, :-1] = -theta * dt * lo[1:]
    try:
        return linalg.solve_banded((1, 1), banded, rhs)
    except (linalg.LinAlgError, ValueError) as e:
        raise NumericalError(f"singular tridiagonal system ({e}); refine the grid") from e


def _solve_backward(
    grid: Grid1D,
    n_steps: int,
    terminal: np.ndarray,
    coeffs: Coefficients,
    *,
    rannacher: int = 0,
) -> np.ndarray:
    """Backward march; row n of the result is the slice n steps before the horizon."""
    _check_monotone(grid, coeffs)
    out = np.empty((n_steps + 1, grid.n_y))
    out[0] = terminal
    u = terminal[1:-1].copy()
    for n in range(n_steps):
        if n < rannacher:
            # two implicit half-steps damp the start-up oscillations
            u = _theta_step(grid, u, coeffs, n, grid.dt / 2, 1.0)
            u = _theta_step(grid, u, coeffs, n + 0.5, grid.dt / 2, 1.0)
        else:
            u = _theta_step(grid, u, coeffs, n, grid.dt, grid.theta)
        out[n + 1] = _extend(u)
    return out


def _check_monotone(grid: Grid1D, coeffs: Coefficients) -> None:
    b, _, _ = coeffs(0)
    ratio = grid.dt * float(np.max(np.abs(b))) / grid.dy
    if ratio > 1:
        logger.warning("dt*max|b|/dy = %.3g exceeds 1", ratio)
        warnings.warn(f"dt*max|b|/dy = {ratio:.3g} > 1; the scheme may not be monotone", GridWarning, stacklevel=3)


def _interpolated(levels: np.ndarray) -> Callable[[float], np.ndarray]:
    """Linear interpolation in the (fractional) backward level."""

    def at(level: float) -> np.ndarray:
        i = min(int(math.floor(level)), levels.shape[0] - 1)
        w = level - i
        if w == 0 or i + 1 >= levels.shape[0]:
            return levels[i]
        return (1 - w) * levels[i] + w * levels[i + 1]

    return at


def _solution(which: Which, horizon: float, grid: Grid1D, backward: np.ndarray, **meta: Any) -> PDESolution:
    n = backward.shape[0] - 1
    times = horizon - np.arange(n, -1, -1) * grid.dt
    meta = {"theta": grid.theta, "boundary": "linear_extrapolation", **meta}
    return PDESolution(which=which, horizon=horizon, times=times, grid=grid, values=backward[::-1].copy(), meta=meta)


def solve_linear_f(spec: SVModelSpec, horizon: float, grid: Grid1D | None = None) -> PDESolution:
    """f_t + ½f_yy − ρλf_y ∓ ½(1 − ρ²)λ²f = 0 on [0, horizon], f(horizon, ·) = 1."""
    grid = grid or Grid1D()
    spec.check_on(grid)
    y = grid.y
    b, c, s = -spec.rho * spec.lam(y), spec.zeroth_order(y), np.zeros_like(y)
    backward = _solve_backward(grid, grid.steps(horizon), np.ones_like(y), lambda level: (b, c, s))
    if np.any(backward <= 0):
        raise NumericalError("f lost positivity; refine the grid")
    which: Which = "f_bar" if horizon > spec.T else "f"
    logger.debug("solved %s on %d x %d", which, backward.shape[0], grid.n_y)
    return _solution(which, horizon, grid, backward, fk_sign=spec.fk_sign)


def compute_g(spec: SVModelSpec, f_solution: PDESolution, grid: Grid1D | None = None) -> PDESolution:
    """g = f_y from the differentiated equation g_t + ½g_yy − ρλg_y − Ag − B = 0, g(horizon, ·) = 0."""
    grid = grid or f_solution.grid
    if grid != f_solution.grid:
        raise StructuralError("g must be solved on the grid of its f")
    y = grid.y
    b, c = -spec.rho * spec.lam(y), -spec.A(y)
    f_backward = _interpolated(f_solution.values[::-1])

    def coeffs(level: float):
        return b, c, -spec.B(y, f_backward(level))

    backward = _solve_backward(grid, f_solution.times.size - 1, np.zeros_like(y), coeffs)
    which: Which = "g_bar" if f_solution.which == "f_bar" else "g"
    solution = _solution(which, f_solution.horizon, grid, backward, fk_sign=spec.fk_sign)
    return replace(solution, central_difference=f_solution.derivative())


def _drift_ratio(spec: SVModelSpec, f_solution: PDESolution, T: float) -> np.ndarray:
    """β = f_y / f − ρλ on [0, T], backward levels from T."""
    f = f_solution.until(T)
    if np.any(f.values <= 0):
        raise NumericalError("f must be positive to build the price drift")
    beta = f.derivative() / f.values - spec.rho * spec.lam(f_solution.grid.y)
    return beta[::-1]


def solve_quasilinear_p(
    spec: SVModelSpec,
    f_solution: PDESolution,
    grid: Grid1D | None = None,
    T: float | None = None,
    *,
    method: Literal["transform", "lagged"] = "transform",
    max_iterations: int = 50,
    tol: float = 1e-10,
) -> PDESolution:
    """p_t + ½p_yy + (f_y/f − ρλ)p_y + ½(1 − ρ²)p_y² = 0, p(T, y) = y."""
    grid = grid or f_solution.grid
    if grid != f_solution.grid:
        raise StructuralError("p must be solved on the grid of its f")
    T = spec.T if T is None else T
    y, a = grid.y, spec.a
    beta = _drift_ratio(spec, f_solution, T)
    beta_at = _interpolated(beta)
    n_steps = grid.steps(T)
    which: Which = "p_bar" if f_solution.which == "f_bar" else "p"

    if method == "transform":
        zero = np.zeros_like(y)

        def coeffs(level: float):
            b = beta_at(level)
            return a + b, a * a / 2 + a * b, zero

        v = _solve_backward(grid, n_steps, np.ones_like(y), coeffs, rannacher=grid.rannacher_steps)
        if np.any(v <= 0):
            raise NumericalError(
                "distortion variable became nonpositive; increase steps_per_unit or n_y"
            )
        backward = y + np.log(v) / a
        backward[0] = y
        return _solution(which, T, grid, backward, method="transform", fk_sign=spec.fk_sign)

    if method != "lagged":
        raise ConfigError(f"unknown method {method!r}")
    # Picard iteration on the quadratic gradient term
    backward = np.broadcast_to(y, (n_steps + 1, y.size)).copy()
    for iteration in range(1, max_iterations + 1):
        slope = np.gradient(backward, grid.dy, axis=1, edge_order=2)
        source = _interpolated(0.5 * a * slope**2)
        updated = _solve_backward(grid, n_steps, y.copy(), lambda level: (beta_at(level), np.zeros_like(y), source(level)))
        change = float(np.max(np.abs(updated - backward)))
        backward = updated
        if change < tol:
            break
    else:
        raise NumericalError(f"lagged quasilinear solve did not settle after {max_iterations} iterations")
    logger.debug("lagged p solve settled after %d iterations", iteration)
    return _solution(which, T, grid, backward, method="lagged", iterations=iteration, fk_sign=spec.fk_sign)


def quasilinear_residual(spec: SVModelSpec, f_solution: PDESolution, p_solution: PDESolution, half_width: float | None = None) -> float:
    """Max |discrete residual| of the p-equation on the window, using centred differences at mid-steps."""
    grid = p_solution.grid
    beta = _drift_ratio(spec, f_solution, p_solution.horizon)[::-1]
    p = p_solution.values
    mid = (p[1:] + p[:-1]) / 2
    p_t = (p[1:] - p[:-1]) / grid.dt
    p_y = np.gradient(mid, grid.dy, axis=1)
    p_yy = np.zeros_like(mid)
    p_yy[:, 1:-1] = (mid[:, 2:] - 2 * mid[:, 1:-1] + mid[:, :-2]) / grid.dy**2
    b = (beta[1:] + beta[:-1]) / 2
    residual = p_t + 0.5 * p_yy + b * p_y + 0.5 * spec.a * p_y**2
    window = grid.window(half_width)
    return float(np.max(np.abs(residual[:, window])))


def _fk_paths(spec: SVModelSpec, t: float, y: float, horizon: float, n_paths: int, seed: int, steps_per_unit: int):
    """Euler paths of dY = −ρλ(Y)ds + dB from (t, y), yielded per batch."""
    n_steps = max(1, int(round((horizon - t) * steps_per_unit)))
    ds = (horizon - t) / n_steps
    sizes = [consts.DEFAULT_BATCH_SIZE] * (n_paths // consts.DEFAULT_BATCH_SIZE)
    if n_paths % consts.DEFAULT_BATCH_SIZE:
        sizes.append(n_paths % consts.DEFAULT_BATCH_SIZE)

    def batch(job):
        rng, m = job
        paths = np.empty((m, n_steps + 1))
        paths[:, 0] = y
        shocks = rng.standard_normal((m, n_steps)) * math.sqrt(ds)
        for k in range(n_steps):
            paths[:, k + 1] = paths[:, k] - spec.rho * spec.lam(paths[:, k]) * ds + shocks[:, k]
        return paths

    return utils.ordered_map(batch, list(zip(utils.child_rngs(seed, len(sizes)), sizes))), ds


def fk_oracle(
    spec: SVModelSpec,
    kind: Literal["f", "g_bar"],
    t: float,
    y: float,
    n_paths: int = 100_000,
    seed: int = 0,
    *,
    f_bar: PDESolution | None = None,
    steps_per_unit: int = consts.FK_STEPS_PER_UNIT,
) -> Estimate:
    """Feynman-Kac estimates of f(t, y) or of ḡ(T, y) = f̄_y(T, y).

    kind="f": E[exp(∫_t^T c(Y_s) ds)] with c the f-equation's zeroth-order term.
    kind="g_bar": E[∫_T^T̄ −B(s, Y_s) exp(∫_T^s −A(Y_u) du) ds] from Y_T = y,
    with f̄ along the path interpolated from a PDE solution.
    """
    if n_paths < 1:
        raise ConfigError(f"n_paths must be >= 1, got {n_paths}")
    if kind == "f":
        if not 0 <= t <= spec.T:
            raise StructuralError(f"t={t} outside [0, {spec.T}]")
        batches, ds = _fk_paths(spec, t, y, spec.T, n_paths, seed, steps_per_unit)
        samples = []
        for paths in batches:
            c = spec.zeroth_order(paths)
            samples.append(np.exp(ds * (c[:, 1:] + c[:, :-1]).sum(axis=1) / 2))
    elif kind == "g_bar":
        if f_bar is None:
            f_bar = solve_linear_f(spec, spec.T_bar)
        start = spec.T
        batches, ds = _fk_paths(spec, start, y, spec.T_bar, n_paths, seed, steps_per_unit)
        lookup = interpolate.RegularGridInterpolator((f_bar.times, f_bar.grid.y), f_bar.values)
        samples = []
        for paths in batches:
            n_steps = paths.shape[1] - 1
            times = start + np.arange(n_steps + 1) * ds
            clipped = np.clip(paths, -f_bar.grid.L, f_bar.grid.L)
            points = np.stack([np.broadcast_to(np.minimum(times, f_bar.times[-1]), paths.shape), clipped], axis=-1)
            f_vals = lookup(points.reshape(-1, 2)).reshape(paths.shape)
            decay = -spec.A(paths)
            weight = np.concatenate(
                [np.zeros((paths.shape[0], 1)), np.cumsum(ds * (decay[:, 1:] + decay[:, :-1]) / 2, axis=1)], axis=1
            )
            integrand = -spec.B(paths, f_vals) * np.exp(weight)
            samples.append(ds * (integrand[:, 1:] + integrand[:, :-1]).sum(axis=1) / 2)
    else:
        raise ConfigError(f"unknown Feynman-Kac kind {kind!r}")
    values = np.concatenate(samples)
    return Estimate(
        quantity=f"fk_{kind}(t={t:g},y={y:g})",
        estimate=float(values.mean()),
        std_error=utils.batch_means_se(values, consts.SE_BATCHES),
        n_paths=n_paths,
        seed=seed,
    )


@dataclass(frozen=True)
class GapReport:
    gap: float
    argmax_t: float
    argmax_y: float
    gbar_min: float
    gbar_sign: float
    f_y_terminal: float
    gap_delta: float | None = None
    gbar_min_delta: float | None = None
    fk_sign: FkSign = consts.DEFAULT_FK_SIGN

    @property
    def gbar_stable(self) -> bool:
        return self.gbar_min_delta is not None and self.gbar_min_delta < 0.1 * self.gbar_min

    @property
    def passed(self) -> bool:
        return (
            self.f_y_terminal <= consts.ROUNDOFF_TOLERANCE
            and self.gbar_min > 0
            and self.gbar_stable
            and self.gap_delta is not None
            and self.gap > 10 * self.gap_delta
        )

    def rows(self) -> list[list[Any]]:
        rows = [
            ["max_abs_p_minus_p_bar", self.gap],
            ["argmax_t", self.argmax_t],
            ["argmax_y", self.argmax_y],
            ["min_abs_g_bar_T", self.gbar_min],
            ["sign_g_bar_T", self.gbar_sign],
            ["max_abs_f_y_T", self.f_y_terminal],
        ]
        if self.gap_delta is not None:
            rows += [["gap_refinement_delta", self.gap_delta], ["g_bar_refinement_delta", self.gbar_min_delta]]
        rows += [["fk_sign", self.fk_sign], ["passed", self.passed]]
        return rows


def _gap_on(spec: SVModelSpec, grid: Grid1D) -> tuple[float, float, float, float, float, float]:
    f = solve_linear_f(spec, spec.T, grid)
    f_bar = solve_linear_f(spec, spec.T_bar, grid)
    p = solve_quasilinear_p(spec, f, grid)
    p_bar = solve_quasilinear_p(spec, f_bar, grid)
    window = grid.window()
    diff = np.abs(p.values[:-1] - p_bar.values[:-1])[:, window]
    i, j = np.unravel_index(int(np.argmax(diff)), diff.shape)
    g_bar_T = compute_g(spec, f_bar, grid).at(spec.T)[window]
    signs = np.sign(g_bar_T)
    f_y_T = float(np.max(np.abs(f.derivative()[-1])))
    return (
        float(diff[i, j]),
        float(p.times[i]),
        float(grid.y[window][j]),
        float(np.min(np.abs(g_bar_T))),
        float(signs[0]) if np.all(signs == signs[0]) else 0.0,
        f_y_T,
    )


def noncompliance_gap(spec: SVModelSpec, grid: Grid1D | None = None, *, refine: bool = True) -> GapReport:
    """max |p − p̄| over [0, T) × [−L/2, L/2], with ḡ(T, ·) and one refinement step."""
    grid = grid or Grid1D()
    gap, t_star, y_star, gbar_min, gbar_sign, f_y_T = _gap_on(spec, grid)
    report = GapReport(gap, t_star, y_star, gbar_min, gbar_sign, f_y_T, fk_sign=spec.fk_sign)
    if refine:
        fine = _gap_on(spec, grid.refined())
        report = replace(report, gap_delta=abs(fine[0] - gap), gbar_min_delta=abs(fine[3] - gbar_min))
    logger.info("p gap %.6g at (t=%g, y=%g); min |g_bar(T)| %.6g", gap, t_star, y_star, gbar_min)
    return report


def solution_rows(solution: PDESolution, *, t_stride: int = 1, y_stride: int = 1) -> list[list[float]]:
    """Long-format (t, y, value) rows, time-major."""
    rows = []
    y = solution.grid.y
    for i in range(0, solution.times.size, t_stride):
        for j in range(0, y.size, y_stride):
            rows.append([float(solution.times[i]), float(y[j]), float(solution.values[i, j])])
    return rows


def sv_spec_from_dict(doc: dict[str, Any]) -> tuple[SVModelSpec, Grid1D]:
    known = {"rho", "eps", "M", "lambda", "T", "T_bar", "L", "n_y", "steps_per_unit", "fk_sign", "theta"}
    unknown = set(doc) - known
    if unknown:
        raise ConfigError(f"unknown model keys {sorted(unknown)}")
    try:
        lam = doc.get("lambda", "sigmoid")
        spec = SVModelSpec(
            rho=float(doc.get("rho", 0.5)),
            eps=float(doc.get("eps", 0.1)),
            M=float(doc.get("M", 1.0)),
            T=float(doc.get("T", 0.5)),
            T_bar=float(doc.get("T_bar", 1.0)),
            lam_const=None if lam == "sigmoid" else float(lam),
            fk_sign=doc.get("fk_sign", "paper_pde"),
        )
        grid = Grid1D(
            L=float(doc.get("L", consts.DEFAULT_L)),
            n_y=int(doc.get("n_y", consts.DEFAULT_N_Y)),
            steps_per_unit=int(doc.get("steps_per_unit", consts.DEFAULT_STEPS_PER_UNIT)),
            theta=float(doc.get("theta", 0.5)),
        )
    except (TypeError, ValueError) as e:
        raise ConfigError(f"malformed model spec: {e}") from e
    return spec, grid


def load_sv_spec(path: str | Path) -> tuple[SVModelSpec, Grid1D]:
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as e:
        raise ConfigError(f"cannot read model file {path}: {e}") from e
    return sv_spec_from_dict(doc)
