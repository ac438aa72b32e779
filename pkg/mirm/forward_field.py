"""Forward exponential performance on simulated Itô paths.

One traded asset driven by W¹ and a non-traded factor W². The benchmark
Y, the density process Z and the drift correction A combine into

    U_t(x) = −Z_t exp(−x / Y_t + A_t / 2),

and the forward entropic risk of a claim C with maturity t_C is

    ρ(C) = inf_π (1/γ) ln E[−U_t(C + ∫π dS)]   for any t ≥ t_C.

Coefficients are deterministic and piecewise constant on the grid, so each
log-Euler step is exact in distribution.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Callable

import numpy as np
from scipy import optimize, special

from mirm import consts, utils
from mirm.core_risk import Claim, Estimate
from mirm.errors import ConfigError, ModelError, NumericalError, StructuralError

logger = logging.getLogger(__name__)

_COEFFICIENTS = ("lam", "delta", "phi", "sigma")


@dataclass(frozen=True)
class CoefficientSpec:
    gamma: float = 1.0
    lam: np.ndarray | float = 0.2
    delta: np.ndarray | float = 0.0
    phi: np.ndarray | float = 0.0
    sigma: np.ndarray | float = 0.3
    n_steps: int = 20
    dt: float = 0.05

    def __post_init__(self):
        if self.gamma <= 0 or not math.isfinite(self.gamma):
            raise ModelError(f"gamma must be positive and finite, got {self.gamma}")
        if self.n_steps < 1 or self.dt <= 0:
            raise ModelError(f"need n_steps >= 1 and dt > 0, got {self.n_steps}, {self.dt}")
        for name in _COEFFICIENTS:
            values = np.broadcast_to(np.asarray(getattr(self, name), dtype=float), (self.n_steps,)).copy()
            if not np.all(np.isfinite(values)):
                raise ModelError(f"coefficient {name} must be bounded")
            values.setflags(write=False)
            object.__setattr__(self, name, values)
        if np.any(self.sigma <= 0):
            raise ModelError("the stock volatility must be positive")

    @property
    def mu(self) -> np.ndarray:
        return self.lam * self.sigma

    @property
    def horizon(self) -> float:
        return self.n_steps * self.dt

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.n_steps + 1) * self.dt

    def step_index(self, t: float) -> int:
        k = int(round(t / self.dt))
        if not 0 <= k <= self.n_steps or abs(k * self.dt - t) > 1e-9 * max(1.0, abs(t)):
            raise StructuralError(f"time {t} is not on the grid dt={self.dt}, n_steps={self.n_steps}")
        return k

    def drift_correction(self) -> np.ndarray:
        """A on the grid: left-endpoint quadrature of (λ + φ − δ)²."""
        return np.concatenate([[0.0], np.cumsum((self.lam + self.phi - self.delta) ** 2 * self.dt)])

    @classmethod
    def from_dict(cls, doc: dict[str, Any]) -> CoefficientSpec:
        known = {"gamma", "lambda", "delta", "phi", "sigma", "n_steps", "dt"}
        unknown = set(doc) - known
        if unknown:
            raise ConfigError(f"unknown coefficient keys {sorted(unknown)}")
        kwargs = {("lam" if key == "lambda" else key): value for key, value in doc.items()}
        try:
            if "n_steps" in kwargs:
                kwargs["n_steps"] = int(kwargs["n_steps"])
            return cls(**kwargs)
        except (TypeError, ValueError) as e:
            raise ConfigError(f"malformed coefficient spec: {e}") from e


def load_coefficient_spec(path: str | Path) -> CoefficientSpec:
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as e:
        raise ConfigError(f"cannot read coefficient file {path}: {e}") from e
    return CoefficientSpec.from_dict(doc)


@dataclass(frozen=True)
class PathBundle:
    """Trajectories on the grid, one row per path. `A` is shared by all paths."""

    spec: CoefficientSpec
    W1: np.ndarray
    W2: np.ndarray
    S: np.ndarray
    Y: np.ndarray
    Z: np.ndarray
    A: np.ndarray
    seed: int
    tilted: bool = False

    @property
    def n_paths(self) -> int:
        return self.S.shape[0]

    @property
    def n_steps(self) -> int:
        return self.spec.n_steps

    @property
    def returns(self) -> np.ndarray:
        return self.S[:, 1:] / self.S[:, :-1] - 1.0


def _simulate_batch(spec: CoefficientSpec, rng: np.random.Generator, n: int, tilted: bool) -> tuple[np.ndarray, ...]:
    dt = spec.dt
    dw1 = rng.standard_normal((n, spec.n_steps)) * math.sqrt(dt)
    dw2 = rng.standard_normal((n, spec.n_steps)) * math.sqrt(dt)
    if tilted:
        # W¹ gains drift φ under the measure with density Z
        dw1 = dw1 + spec.phi * dt
    log_s = (spec.mu - spec.sigma**2 / 2) * dt + spec.sigma * dw1
    log_y = (spec.delta * spec.lam - spec.delta**2 / 2) * dt + spec.delta * dw1
    log_z = np.zeros_like(dw1) if tilted else -(spec.phi**2) / 2 * dt + spec.phi * dw1

    def path(increments: np.ndarray, start: float = 0.0) -> np.ndarray:
        out = np.empty((n, spec.n_steps + 1))
        out[:, 0] = start
        out[:, 1:] = start + np.cumsum(increments, axis=1)
        return out

    return (
        path(dw1),
        path(dw2),
        np.exp(path(log_s)),
        np.exp(path(log_y, -math.log(spec.gamma))),
        np.exp(path(log_z)),
    )


def simulate(spec: CoefficientSpec, n_paths: int, seed: int, *, tilted: bool = False) -> PathBundle:
    """Paths in fixed-size batches, each with its own spawned seed, so the
    result does not depend on how batches are scheduled."""
    if n_paths < 1:
        raise ConfigError(f"n_paths must be >= 1, got {n_paths}")
    sizes = [consts.DEFAULT_BATCH_SIZE] * (n_paths // consts.DEFAULT_BATCH_SIZE)
    if n_paths % consts.DEFAULT_BATCH_SIZE:
        sizes.append(n_paths % consts.DEFAULT_BATCH_SIZE)
    rngs = utils.child_rngs(seed, len(sizes))
    batches = utils.ordered_map(lambda job: _simulate_batch(spec, job[0], job[1], tilted), list(zip(rngs, sizes)))
    W1, W2, S, Y, Z = (np.concatenate(parts) for parts in zip(*batches))
    A = np.broadcast_to(spec.drift_correction(), S.shape)
    logger.debug("simulated %d paths over %d steps (seed %d)", n_paths, spec.n_steps, seed)
    return PathBundle(spec=spec, W1=W1, W2=W2, S=S, Y=Y, Z=Z, A=A, seed=seed, tilted=tilted)


def U_eval(bundle: PathBundle, t: float, x: float | np.ndarray) -> np.ndarray:
    """−Z_t exp(−x / Y_t + A_t / 2) per path."""
    k = bundle.spec.step_index(t)
    return -bundle.Z[:, k] * np.exp(-np.asarray(x) / bundle.Y[:, k] + bundle.A[:, k] / 2)


@dataclass(frozen=True)
class StrategyFamily:
    """Piecewise-constant amounts θ_c held in the stock over `cells` equal time cells."""

    cells: int = consts.DEFAULT_CELLS
    bound: float = consts.DEFAULT_STRATEGY_BOUND
    gains_bound: float = consts.DEFAULT_GAINS_BOUND

    def __post_init__(self):
        if self.cells < 1 or self.bound <= 0 or self.gains_bound <= 0:
            raise ConfigError("a strategy family needs cells >= 1 and positive bounds")

    def cell_matrix(self, n_steps: int) -> np.ndarray:
        """(n_steps, cells) indicator of which cell each grid step belongs to."""
        cells = min(self.cells, n_steps)
        owner = np.arange(n_steps) * cells // n_steps
        matrix = np.zeros((n_steps, self.cells))
        matrix[np.arange(n_steps), owner] = 1.0
        return matrix

    def exposures(self, bundle: PathBundle, k: int) -> np.ndarray:
        """Per-path, per-cell sums of returns up to step k; gains = exposures @ θ."""
        return bundle.returns[:, :k] @ self.cell_matrix(bundle.n_steps)[:k]

    def gains(self, bundle: PathBundle, theta: np.ndarray, k: int) -> np.ndarray:
        return self.exposures(bundle, k) @ np.asarray(theta, dtype=float)

    def admissible(self, bundle: PathBundle, theta: np.ndarray, k: int | None = None) -> bool:
        k = bundle.n_steps if k is None else k
        per_step = self.cell_matrix(bundle.n_steps)[:k] @ np.asarray(theta, dtype=float)
        running = np.cumsum(bundle.returns[:, :k] * per_step, axis=1)
        return bool(np.max(np.abs(running), initial=0.0) <= self.gains_bound)

    def sample(self, bundle: PathBundle, rng: np.random.Generator, k: int | None = None) -> np.ndarray | None:
        for _ in range(100):
            theta = rng.uniform(-self.bound, self.bound, self.cells)
            if self.admissible(bundle, theta, k):
                return theta
        logger.warning("no admissible strategy after 100 draws (gains bound %g)", self.gains_bound)
        return None

    def gains_claim(self, theta: np.ndarray, maturity: float) -> Claim:
        theta = np.asarray(theta, dtype=float)
        return Claim.on_paths(lambda bundle, k: self.gains(bundle, theta, k), maturity)


@dataclass(frozen=True)
class _ExpProblem:
    """ln of the sample mean of exp(log_weights − exposures @ θ), convex in θ."""

    log_weights: np.ndarray
    exposures: np.ndarray

    def value(self, theta: np.ndarray) -> float:
        return _log_mean_exp(self.log_weights - self.exposures @ theta)

    def std_error(self, theta: np.ndarray) -> float:
        """Standard error of value(θ) by batch means (delta method)."""
        exponent = self.log_weights - self.exposures @ theta
        w = np.exp(exponent - exponent.max())
        return utils.batch_means_se(w, consts.SE_BATCHES) / w.mean()


def _log_mean_exp(exponent: np.ndarray) -> float:
    return float(special.logsumexp(exponent) - math.log(exponent.shape[0]))


@dataclass(frozen=True)
class Optimum:
    theta: np.ndarray
    value: float
    std_error: float
    sweeps: int
    admissible: bool = True


def _minimize(
    problem: _ExpProblem,
    bound: float,
    start: np.ndarray | None = None,
    *,
    max_sweeps: int = 50,
    tol: float = 1e-8,
) -> Optimum:
    """Coordinate descent over the cells, each coordinate a bounded scalar minimization."""
    cells = problem.exposures.shape[1]
    theta = np.zeros(cells) if start is None else np.array(start, dtype=float)
    active = np.flatnonzero(np.any(problem.exposures != 0, axis=0))
    theta[np.setdiff1d(np.arange(cells), active)] = 0.0
    exponent = problem.log_weights - problem.exposures @ theta
    for sweep in range(1, max_sweeps + 1):
        moved = 0.0
        for c in active:
            column = problem.exposures[:, c]
            rest = exponent + column * theta[c]
            res = optimize.minimize_scalar(
                lambda v: _log_mean_exp(rest - column * v),
                bounds=(-bound, bound),
                method="bounded",
                options={"xatol": 1e-10},
            )
            if not res.success:
                raise NumericalError(f"coordinate minimization failed: {res.message}")
            moved = max(moved, abs(res.x - theta[c]))
            theta[c] = res.x
            exponent = rest - column * theta[c]
        if moved < tol:
            break
    else:
        logger.warning("coordinate descent stopped after %d sweeps (last move %.2e)", max_sweeps, moved)
    if np.any(np.isclose(np.abs(theta[active]), bound)):
        logger.warning("optimal strategy sits on the amount bound %g", bound)
    return Optimum(theta=theta, value=problem.value(theta), std_error=problem.std_error(theta), sweeps=sweep)


def _claim_values(bundle: PathBundle, claim: Claim) -> np.ndarray:
    if claim.kind != "path":
        raise StructuralError(f"expected a path claim, got a {claim.kind} claim")
    values = np.asarray(claim.functional(bundle, bundle.spec.step_index(claim.depth)), dtype=float)
    if values.shape != (bundle.n_paths,):
        raise StructuralError(f"claim functional returned shape {values.shape}, expected ({bundle.n_paths},)")
    if not np.all(np.isfinite(values)):
        raise NumericalError("claim produced non-finite payoffs; it must be bounded")
    return values


def _ferm_problem(bundle: PathBundle, claim: Claim, t: float, family: StrategyFamily, x: float = 0.0) -> _ExpProblem:
    k = bundle.spec.step_index(t)
    if t < claim.depth - 1e-12:
        raise StructuralError(f"evaluation time {t} precedes the claim maturity {claim.depth}")
    c = _claim_values(bundle, claim)
    y = bundle.Y[:, k]
    return _ExpProblem(
        log_weights=np.log(bundle.Z[:, k]) + bundle.A[:, k] / 2 - (x + c) / y,
        exposures=family.exposures(bundle, k) / y[:, None],
    )


def _optimum(problem: _ExpProblem, family: StrategyFamily, bundle: PathBundle, k: int, start=None) -> Optimum:
    best = _minimize(problem, family.bound, start)
    return replace(best, admissible=family.admissible(bundle, best.theta, k))


def ferm_mc(
    spec: CoefficientSpec,
    claim: Claim,
    t: float,
    family: StrategyFamily | None = None,
    n_paths: int = 100_000,
    seed: int = 0,
    *,
    bundle: PathBundle | None = None,
) -> Estimate:
    """inf over the family of (1/γ) ln E[−U_t(C + gains)]."""
    family = family or StrategyFamily()
    bundle = bundle or simulate(spec, n_paths, seed)
    problem = _ferm_problem(bundle, claim, t, family)
    best = _optimum(problem, family, bundle, spec.step_index(t))
    if not best.admissible:
        logger.warning("optimized strategy leaves the gains bound %g", family.gains_bound)
    return Estimate(
        quantity=f"ferm(t={t:g})",
        estimate=best.value / spec.gamma,
        std_error=best.std_error / spec.gamma,
        n_paths=bundle.n_paths,
        seed=bundle.seed,
    )


def ferm_indifference_mc(
    spec: CoefficientSpec,
    claim: Claim,
    t: float,
    family: StrategyFamily | None = None,
    n_paths: int = 100_000,
    seed: int = 0,
    *,
    x: float = 0.0,
    bundle: PathBundle | None = None,
) -> Estimate:
    """Solve sup E[U_t(x + G)] = sup E[U_t(x + ρ + C + G)] for ρ at wealth x."""
    family = family or StrategyFamily()
    bundle = bundle or simulate(spec, n_paths, seed)
    k = spec.step_index(t)
    free = _optimum(_ferm_problem(bundle, Claim.on_paths(lambda b, j: np.zeros(b.n_paths), 0.0), t, family, x), family, bundle, k)
    warm = {"theta": free.theta}

    def excess(r: float) -> float:
        problem = _ferm_problem(bundle, claim, t, family, x + r)
        best = _minimize(problem, family.bound, warm["theta"])
        warm["theta"] = best.theta
        return best.value - free.value

    guess = ferm_mc(spec, claim, t, family, bundle=bundle).estimate
    lo, hi = guess - 1.0, guess + 1.0
    for _ in range(60):
        if excess(lo) > 0 > excess(hi):
            break
        lo, hi = lo - (hi - lo), hi + (hi - lo)
    else:
        raise NumericalError("could not bracket the indifference value")
    rho = optimize.brentq(excess, lo, hi, xtol=1e-10)
    problem = _ferm_problem(bundle, claim, t, family, x + rho)
    se = problem.std_error(warm["theta"])
    return Estimate(f"ferm_indifference(x={x:g})", float(rho), se / spec.gamma, bundle.n_paths, bundle.seed)


@dataclass(frozen=True)
class ProbeReport:
    t: float
    x: float
    u0: float
    estimates: tuple[Estimate, ...]
    best_theta: np.ndarray
    best: Estimate
    rejected: int = 0

    @property
    def max_excess(self) -> float:
        return max(e.estimate - self.u0 for e in self.estimates)

    @property
    def passed(self) -> bool:
        return all(e.estimate - self.u0 <= consts.MC_SIGMAS * e.std_error for e in self.estimates)

    @property
    def best_gap(self) -> float:
        return self.best.estimate - self.u0


def supermartingale_probe(
    spec: CoefficientSpec,
    family: StrategyFamily,
    t: float,
    n_paths: int,
    seed: int,
    *,
    x: float = 0.0,
    n_strategies: int = 100,
    bundle: PathBundle | None = None,
) -> ProbeReport:
    """E[U_t(x + gains)] for sampled strategies and for the best one found, against U_0(x)."""
    bundle = bundle or simulate(spec, n_paths, seed)
    k = spec.step_index(t)
    rng = np.random.default_rng((seed, 1))
    u0 = -math.exp(-spec.gamma * x)

    estimates, rejected = [], 0
    for i in range(n_strategies):
        theta = family.sample(bundle, rng, k)
        if theta is None:
            rejected += 1
            continue
        values = U_eval(bundle, t, x + family.gains(bundle, theta, k))
        estimates.append(
            Estimate(f"strategy_{i}", float(values.mean()), utils.batch_means_se(values, consts.SE_BATCHES), bundle.n_paths, seed)
        )
    if not estimates:
        raise NumericalError("every sampled strategy violated the gains bound")

    zero = Claim.on_paths(lambda b, j: np.zeros(b.n_paths), 0.0)
    problem = _ferm_problem(bundle, zero, t, family, x)
    best = _optimum(problem, family, bundle, k)
    value = -math.exp(best.value)
    report = ProbeReport(
        t=t,
        x=x,
        u0=u0,
        estimates=tuple(estimates),
        best_theta=best.theta,
        best=Estimate("best_strategy", value, abs(value) * best.std_error, bundle.n_paths, seed),
        rejected=rejected,
    )
    logger.info("probe: max excess %.3e, best gap %.3e", report.max_excess, report.best_gap)
    return report


@dataclass(frozen=True)
class ConsistencyReport:
    lhs: Estimate
    rhs: Estimate
    parts: dict[str, float] = field(default_factory=dict)

    @property
    def diff(self) -> float:
        return self.lhs.estimate - self.rhs.estimate

    @property
    def passed(self) -> bool:
        return self.lhs.agrees_with(self.rhs)

    def rows(self) -> list[list[Any]]:
        diff = Estimate("diff", self.diff, math.hypot(self.lhs.std_error, self.rhs.std_error), self.lhs.n_paths, self.lhs.seed)
        return [self.lhs.row(), self.rhs.row(), diff.row()]


def entropic_consistency_case_a(
    spec: CoefficientSpec,
    claim: Claim,
    t: float,
    family: StrategyFamily | None = None,
    n_paths: int = 100_000,
    seed: int = 0,
) -> ConsistencyReport:
    """ρ(C) against −ν(C − A_t/(2γ); t) − H_t/γ when δ = φ = 0."""
    if np.any(spec.delta != 0) or np.any(spec.phi != 0):
        raise ModelError("case a needs delta = phi = 0")
    family = family or StrategyFamily()
    bundle = simulate(spec, n_paths, seed)
    gamma, k = spec.gamma, spec.step_index(t)
    shift = bundle.A[0, k] / (2 * gamma)
    exposures = family.exposures(bundle, k)
    c = _claim_values(bundle, claim)

    # classical exponential problems, no forward correction
    free = _optimum(_ExpProblem(np.zeros(bundle.n_paths), gamma * exposures), family, bundle, k)
    shifted = _optimum(_ExpProblem(-gamma * (c - shift), gamma * exposures), family, bundle, k)
    h_t = -free.value
    nu = -(shifted.value - free.value) / gamma
    rhs = Estimate(
        "rhs", -nu - h_t / gamma, math.hypot(shifted.std_error, free.std_error) / gamma, bundle.n_paths, seed
    )
    lhs = replace(ferm_mc(spec, claim, t, family, bundle=bundle), quantity="lhs")
    return ConsistencyReport(lhs=lhs, rhs=rhs, parts={"nu": nu, "H_t": h_t, "A_t": float(bundle.A[0, k])})


def entropic_consistency_case_b(
    spec: CoefficientSpec,
    claim: Claim,
    t: float,
    family: StrategyFamily | None = None,
    n_paths: int = 100_000,
    seed: int = 0,
) -> ConsistencyReport:
    """ρ(C) with the Z factor against the Z-free computation on paths sampled under Z·P (δ = 0)."""
    if np.any(spec.delta != 0):
        raise ModelError("case b needs delta = 0")
    family = family or StrategyFamily()
    lhs = replace(ferm_mc(spec, claim, t, family, n_paths, seed), quantity="lhs")
    tilted = simulate(spec, n_paths, seed + 1, tilted=True)
    rhs = replace(ferm_mc(spec, claim, t, family, bundle=tilted), quantity="rhs", seed=seed + 1)
    return ConsistencyReport(lhs=lhs, rhs=rhs)


@dataclass(frozen=True)
class MartingaleTest:
    statistics: np.ndarray

    @property
    def max_abs(self) -> float:
        return float(np.max(np.abs(self.statistics)))

    def passed(self, sigmas: float = consts.MC_SIGMAS) -> bool:
        return self.max_abs <= sigmas


def z_martingale_test(bundle: PathBundle) -> MartingaleTest:
    """Per-step statistic (mean(Z_{k+1}/Z_k) − 1) / SE."""
    ratios = bundle.Z[:, 1:] / bundle.Z[:, :-1]
    stats = np.empty(bundle.n_steps)
    for k in range(bundle.n_steps):
        se = utils.batch_means_se(ratios[:, k], consts.SE_BATCHES)
        stats[k] = 0.0 if se == 0 else (ratios[:, k].mean() - 1.0) / se
    return MartingaleTest(stats)


def constant_claim(c: float, maturity: float = 0.0) -> Claim:
    return Claim.on_paths(lambda bundle, k: np.full(bundle.n_paths, float(c)), maturity)


def capped_call(strike: float, cap: float, maturity: float) -> Claim:
    return Claim.on_paths(lambda bundle, k: np.clip(bundle.S[:, k] - strike, 0.0, cap), maturity)


def factor_digital(level: float, maturity: float, amount: float = 1.0) -> Claim:
    """Pays `amount` when the non-traded factor W² ends above `level`."""
    return Claim.on_paths(lambda bundle, k: amount * (bundle.W2[:, k] > level), maturity)


PATH_CLAIMS: dict[str, Callable[..., Claim]] = {
    "constant": constant_claim,
    "capped_call": capped_call,
    "factor_digital": factor_digital,
}


def path_claim_from_dict(doc: dict[str, Any], family: StrategyFamily | None = None) -> Claim:
    """`{"kind": "capped_call", "strike": 1.0, "cap": 0.5, "maturity": 0.5}`; kind "gains" takes "theta"."""
    params = dict(doc)
    kind = params.pop("kind", None)
    try:
        if kind == "gains":
            return (family or StrategyFamily()).gains_claim(params["theta"], float(params["maturity"]))
        if kind not in PATH_CLAIMS:
            raise ConfigError(f"unknown path claim {kind!r}, expected one of {sorted([*PATH_CLAIMS, 'gains'])}")
        return PATH_CLAIMS[kind](**params)
    except (KeyError, TypeError) as e:
        raise ConfigError(f"bad parameters for {kind} claim: {e}") from e


def load_path_claim(path: str | Path, family: StrategyFamily | None = None) -> Claim:
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as e:
        raise ConfigError(f"cannot read claim file {path}: {e}") from e
    return path_claim_from_dict(doc, family)
