"""Claims, earliest maturity and the axiom harness shared by every evaluator."""

from __future__ import annotations

import logging
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, field, replace
from typing import Any, Callable, Literal, Protocol

import numpy as np
from scipy import optimize, special

from mirm import consts, utils
from mirm.errors import AxiomTrialError, ConfigError, ModelError, NumericalError, StructuralError

logger = logging.getLogger(__name__)

ClaimKind = Literal["tree", "lattice", "path"]
Axiom = Literal[
    "anti_positivity",
    "convexity",
    "cash_translativity",
    "replication_maturity_independence",
]

_MAX_WITNESSES = 5
_MAX_REJECTIONS = 100


class InformationTree(Protocol):
    """What the harness needs from a tree-like model: node partitions and prices."""

    @property
    def horizon(self) -> int:
        ...

    def node_count(self, depth: int) -> int:
        ...

    def ancestors(self, depth: int, level: int) -> np.ndarray:
        ...

    def prices(self, depth: int) -> np.ndarray:
        ...


@dataclass(frozen=True)
class Claim:
    kind: ClaimKind
    depth: float
    values: np.ndarray | None = None
    functional: Callable[..., np.ndarray] | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.depth < 0:
            raise StructuralError(f"claim depth must be nonnegative, got {self.depth}")
        if self.kind == "path":
            if self.functional is None:
                raise StructuralError("a path claim needs a payoff functional")
            return
        if self.values is None:
            raise StructuralError(f"a {self.kind} claim needs node payoffs")
        values = np.array(self.values, dtype=float).reshape(-1)
        if not np.all(np.isfinite(values)):
            raise StructuralError("claim payoffs must be finite")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "depth", int(self.depth))

    @classmethod
    def on_nodes(cls, values: Any, depth: int, kind: ClaimKind = "tree") -> Claim:
        return cls(kind=kind, depth=depth, values=np.asarray(values, dtype=float))

    @classmethod
    def on_paths(cls, functional: Callable[..., np.ndarray], maturity: float) -> Claim:
        return cls(kind="path", depth=float(maturity), functional=functional)

    def with_values(self, values: np.ndarray, depth: int | None = None) -> Claim:
        return replace(self, values=values, depth=self.depth if depth is None else depth)

    def lifted(self, model: InformationTree, t: int) -> np.ndarray:
        """Payoffs seen as a function of the depth-`t` nodes (t >= depth)."""
        check_claim(self, model)
        if t < self.depth:
            raise StructuralError(f"cannot read a depth-{self.depth} claim at depth {t}")
        if t == self.depth:
            return np.array(self.values)
        return self.values[model.ancestors(t, int(self.depth))]


def check_claim(claim: Claim, model: InformationTree) -> None:
    if claim.kind == "path":
        return
    depth = int(claim.depth)
    if depth > model.horizon:
        raise StructuralError(f"claim depth {depth} exceeds model horizon {model.horizon}")
    expected = model.node_count(depth)
    if claim.values.shape[0] != expected:
        raise StructuralError(
            f"claim has {claim.values.shape[0]} payoffs, model has {expected} nodes at depth {depth}"
        )


def earliest_maturity(claim: Claim, model: InformationTree | None = None, *, atol: float = 0.0) -> float:
    """Smallest depth whose partition the claim is measurable with respect to."""
    if claim.kind == "path" or model is None:
        return claim.depth
    check_claim(claim, model)
    depth = int(claim.depth)
    for level in range(depth + 1):
        groups = model.ancestors(depth, level)
        count = model.node_count(level)
        lo = np.full(count, np.inf)
        hi = np.full(count, -np.inf)
        np.minimum.at(lo, groups, claim.values)
        np.maximum.at(hi, groups, claim.values)
        if np.all(hi - lo <= atol):
            return level
    return depth


def reduce_claim(claim: Claim, model: InformationTree) -> Claim:
    """Re-express the claim on the nodes of its earliest maturity."""
    if claim.kind == "path":
        return claim
    level = int(earliest_maturity(claim, model))
    if level == claim.depth:
        return claim
    reduced = np.empty(model.node_count(level))
    reduced[model.ancestors(int(claim.depth), level)] = claim.values
    return claim.with_values(reduced, depth=level)


def min_log_expectation(log_values: np.ndarray, probs: np.ndarray, moves: np.ndarray, gamma: float = 1.0) -> float:
    """min over α of ln Σ p exp(log_values − γ α ΔS) for one node.

    The objective is convex in α; its minimizer is the root of the
    first-order condition, bracketed by doubling and refined with brentq.
    """
    live = probs > 0
    log_values, probs, moves = log_values[live], probs[live], moves[live]
    scale = np.max(np.abs(moves), initial=0.0)
    if scale == 0:
        return float(special.logsumexp(log_values, b=probs))
    if not (moves.max() > 0 > moves.min()):
        raise ModelError("a trading node needs children on both sides of its price")

    def slope(alpha: float) -> float:
        exponent = log_values - gamma * alpha * moves
        weights = probs * np.exp(exponent - exponent.max())
        return float(weights @ moves / weights.sum())

    lo, hi = -1.0 / scale, 1.0 / scale
    for _ in range(200):
        if slope(lo) > 0 > slope(hi):
            break
        lo, hi = 2 * lo, 2 * hi
    else:
        raise ModelError("could not bracket the optimal holding")
    alpha = optimize.brentq(slope, lo, hi, xtol=consts.HOLDING_XTOL, rtol=4 * np.finfo(float).eps)
    return float(special.logsumexp(log_values - gamma * alpha * moves, b=probs))


class RiskEvaluator(ABC):
    """ρ(·;t) bound to a model; calling it evaluates ρ(C) = ρ(C; t_C)."""

    name: str = "risk"
    claim_kind: ClaimKind = "tree"
    exact: bool = True

    def __init__(self, model: InformationTree):
        self.model = model

    @abstractmethod
    def evaluate(self, claim: Claim, t: int) -> float:
        ...

    def __call__(self, claim: Claim) -> float:
        reduced = reduce_claim(claim, self.model)
        return self.evaluate(reduced, int(reduced.depth))


@dataclass(frozen=True)
class Estimate:
    """A Monte-Carlo result row; the seed travels with every estimate."""

    quantity: str
    estimate: float
    std_error: float
    n_paths: int
    seed: int

    def row(self) -> list[Any]:
        return [self.quantity, self.estimate, self.std_error, self.n_paths, self.seed]

    def agrees_with(self, other: Estimate | float, sigmas: float = consts.MC_SIGMAS) -> bool:
        if isinstance(other, Estimate):
            return abs(self.estimate - other.estimate) <= sigmas * math.hypot(self.std_error, other.std_error)
        return abs(self.estimate - other) <= sigmas * self.std_error


@dataclass(frozen=True)
class Witness:
    summary: str
    violation: float


@dataclass(frozen=True)
class AxiomReport:
    axiom: Axiom
    trials: int
    max_violation: float
    witnesses: tuple[Witness, ...] = ()
    tolerance: float = consts.EXACT_TOLERANCE

    def __post_init__(self):
        if self.trials <= 0:
            raise ConfigError("an axiom report needs at least one trial")

    @property
    def passed(self) -> bool:
        return self.max_violation <= self.tolerance

    @classmethod
    def from_witnesses(cls, axiom: Axiom, witnesses: list[Witness], tolerance: float) -> AxiomReport:
        kept = tuple(sorted(witnesses, key=lambda w: (-w.violation, w.summary))[:_MAX_WITNESSES])
        return cls(
            axiom=axiom,
            trials=len(witnesses),
            max_violation=max(w.violation for w in witnesses),
            witnesses=kept,
            tolerance=tolerance,
        )

    def merge(self, other: AxiomReport) -> AxiomReport:
        if other.axiom != self.axiom:
            raise ConfigError(f"cannot merge {self.axiom} with {other.axiom}")
        merged = self.from_witnesses(self.axiom, [*self.witnesses, *other.witnesses], self.tolerance)
        return replace(merged, trials=self.trials + other.trials)


def _summary(values: np.ndarray) -> str:
    shown = ", ".join(f"{v:.4f}" for v in values[:6])
    return f"[{shown}{', ...' if values.shape[0] > 6 else ''}]"


def random_gains(
    model: InformationTree,
    t: int,
    rng: np.random.Generator,
    *,
    bound: float,
) -> np.ndarray:
    """Terminal gains Σ α ΔS of a random strategy with holdings in [-1, 1]."""
    for _ in range(_MAX_REJECTIONS):
        gains = np.zeros(model.node_count(t))
        for k in range(t):
            holdings = rng.uniform(-1.0, 1.0, model.node_count(k))
            here = model.ancestors(t, k)
            step = model.prices(k + 1)[model.ancestors(t, k + 1)] - model.prices(k)[here]
            gains += holdings[here] * step
        if np.max(np.abs(gains), initial=0.0) <= bound:
            return gains
    raise NumericalError(f"no strategy with |gains| <= {bound} after {_MAX_REJECTIONS} draws")


def _trial(
    evaluator: RiskEvaluator,
    model: InformationTree,
    axiom: Axiom,
    rng: np.random.Generator,
    gains_bound: float,
) -> Witness:
    depth = int(rng.integers(0, model.horizon + 1))
    n = model.node_count(depth)
    kind = evaluator.claim_kind
    offending: dict[str, Any] = {"axiom": axiom, "depth": depth}

    def rho(values: np.ndarray, at: int, t: int) -> float:
        claim = Claim.on_nodes(values, at, kind)
        offending["claim"] = values.tolist()
        try:
            value = evaluator.evaluate(claim, t)
        except Exception as e:
            raise AxiomTrialError(f"{evaluator.name} failed on a {axiom} trial: {e}", offending) from e
        if not np.isfinite(value):
            raise AxiomTrialError(f"{evaluator.name} returned {value} on a {axiom} trial", offending)
        return value

    if axiom == "anti_positivity":
        f = rng.uniform(0.0, 1.0, n)
        return Witness(f"f={_summary(f)}", max(rho(f, depth, depth), 0.0))

    if axiom == "convexity":
        f, g = rng.uniform(-1.0, 1.0, (2, n))
        lam = float(rng.uniform())
        mixed = rho(lam * f + (1 - lam) * g, depth, depth)
        gap = mixed - lam * rho(f, depth, depth) - (1 - lam) * rho(g, depth, depth)
        return Witness(f"lambda={lam:.4f} f={_summary(f)} g={_summary(g)}", max(gap, 0.0))

    if axiom == "cash_translativity":
        f = rng.uniform(-1.0, 1.0, n)
        m = float(rng.uniform(-2.0, 2.0))
        gap = abs(rho(f - m, depth, depth) - rho(f, depth, depth) - m)
        return Witness(f"m={m:.4f} f={_summary(f)}", gap)

    f = rng.uniform(-1.0, 1.0, n)
    claim = Claim.on_nodes(f, depth, kind)
    reduced = reduce_claim(claim, model)
    t_c = int(reduced.depth)
    t = int(rng.integers(t_c, model.horizon + 1))
    gains = random_gains(model, t, rng, bound=gains_bound)
    anchored = rho(reduced.values, t_c, t_c)
    traded = rho(claim.lifted(model, t) + gains, t, t)
    return Witness(f"t_C={t_c} t={t} f={_summary(f)}", abs(traded - anchored))


def axiom_check(
    evaluator: RiskEvaluator,
    axiom: Axiom,
    trials: int,
    seed: int,
    *,
    model: InformationTree | None = None,
    tolerance: float = consts.EXACT_TOLERANCE,
    gains_bound: float = 10.0,
    workers: int | None = None,
) -> AxiomReport:
    if trials < 1:
        raise ConfigError(f"trials must be >= 1, got {trials}")
    if axiom not in consts.AXIOMS:
        raise ConfigError(f"unknown axiom {axiom!r}")
    model = model or evaluator.model
    if model is not evaluator.model:
        raise ConfigError(f"{evaluator.name} is bound to a different model")

    rngs = utils.child_rngs(seed, trials)
    witnesses = utils.ordered_map(
        lambda rng: _trial(evaluator, model, axiom, rng, gains_bound),
        rngs,
        workers=workers,
    )
    report = AxiomReport.from_witnesses(axiom, witnesses, tolerance)
    logger.debug("%s on %s: max violation %.3e over %d trials", axiom, evaluator.name, report.max_violation, trials)
    return report
