"""Forward entropic risk on an incomplete binomial market with a non-traded factor.

Each period the stock moves by ξ ∈ {ξ_up, ξ_down} and the factor by
η ∈ {η_up, η_down}. Nodes at depth t are indexed by the base-4 path integer
with moves (uu, ud, du, dd) = (0, 1, 2, 3), ξ first, so child m of node j is
4j + m and the depth-l ancestor of node j at depth t is j // 4**(t - l).
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Sequence

import numpy as np
from scipy import special

from mirm import consts
from mirm.core_risk import Claim, RiskEvaluator, check_claim, min_log_expectation, reduce_claim
from mirm.errors import ConfigError, DomainError, ModelError, StructuralError

logger = logging.getLogger(__name__)

# which of the four moves carry ξ_up / η_up
_XI_UP = np.array([True, True, False, False])
_ETA_UP = np.array([True, False, True, False])


@dataclass(frozen=True)
class PeriodSpec:
    xi_up: float
    xi_down: float
    eta_up: float
    eta_down: float
    joint: np.ndarray

    def __post_init__(self):
        if not 0 < self.xi_down < 1 < self.xi_up:
            raise ModelError(f"need 0 < xi_down < 1 < xi_up, got xi_down={self.xi_down}, xi_up={self.xi_up}")
        if not 0 < self.eta_down <= self.eta_up:
            raise ModelError(f"need 0 < eta_down <= eta_up, got eta_down={self.eta_down}, eta_up={self.eta_up}")
        joint = np.array(self.joint, dtype=float)
        if joint.shape[-1] != 4 or joint.ndim > 2:
            raise ModelError(f"a joint law has four entries (uu, ud, du, dd), got shape {joint.shape}")
        if np.any(joint < 0) or np.any(np.abs(joint.sum(axis=-1) - 1.0) > 1e-12):
            raise ModelError("joint law entries must be nonnegative and sum to 1")
        p_up = joint[..., _XI_UP].sum(axis=-1)
        if np.any(p_up <= 0) or np.any(p_up >= 1):
            raise ModelError("the conditional xi-up probability must lie strictly in (0, 1)")
        joint.setflags(write=False)
        object.__setattr__(self, "joint", joint)

    @property
    def q(self) -> float:
        return (1 - self.xi_down) / (self.xi_up - self.xi_down)

    @property
    def xi(self) -> np.ndarray:
        return np.where(_XI_UP, self.xi_up, self.xi_down)

    @property
    def eta(self) -> np.ndarray:
        return np.where(_ETA_UP, self.eta_up, self.eta_down)

    def laws(self, n_nodes: int) -> np.ndarray:
        """Physical joint law at each of the `n_nodes` parent nodes, shape (n_nodes, 4)."""
        if self.joint.ndim == 1:
            return np.broadcast_to(self.joint, (n_nodes, 4))
        if self.joint.shape[0] != n_nodes:
            raise ModelError(f"node-dependent joint law lists {self.joint.shape[0]} nodes, expected {n_nodes}")
        return self.joint


@dataclass(frozen=True)
class FactorModelSpec:
    horizon: int
    periods: tuple[PeriodSpec, ...]

    def __post_init__(self):
        if not 1 <= self.horizon <= consts.MAX_LATTICE_HORIZON:
            raise ModelError(f"horizon must be in [1, {consts.MAX_LATTICE_HORIZON}], got {self.horizon}")
        if len(self.periods) != self.horizon:
            raise ModelError(f"{len(self.periods)} periods given for horizon {self.horizon}")

    @classmethod
    def uniform(
        cls,
        horizon: int,
        *,
        xi_up: float = 1.2,
        xi_down: float = 0.9,
        eta_up: float = 1.1,
        eta_down: float = 0.95,
        joint: Sequence[float] = (0.3, 0.2, 0.2, 0.3),
    ) -> FactorModelSpec:
        period = PeriodSpec(xi_up, xi_down, eta_up, eta_down, np.asarray(joint, dtype=float))
        return cls(horizon=horizon, periods=(period,) * horizon)

    @classmethod
    def from_dict(cls, doc: dict[str, Any]) -> FactorModelSpec:
        try:
            horizon = int(doc["horizon"])
            periods = [
                PeriodSpec(
                    float(p["xi_up"]),
                    float(p["xi_down"]),
                    float(p["eta_up"]),
                    float(p["eta_down"]),
                    np.asarray(p["joint"], dtype=float),
                )
                for p in doc["periods"]
            ]
        except (KeyError, TypeError, ValueError) as e:
            raise ConfigError(f"malformed binomial model spec: {e}") from e
        if len(periods) == 1:
            periods = periods * horizon
        return cls(horizon=horizon, periods=tuple(periods))


def load_model_spec(path: str | Path) -> FactorModelSpec:
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as e:
        raise ConfigError(f"cannot read model file {path}: {e}") from e
    return FactorModelSpec.from_dict(doc)


@dataclass(frozen=True)
class FactorLattice:
    """Non-recombining quadtree. Per-depth arrays are indexed by node.

    `physical[d]`/`minimal[d]` are the joint laws of the step leaving depth d,
    `h[d]` the entropy increment of that step and `cum_h[d]` the sum of the
    increments along the path to a depth-d node.
    """

    spec: FactorModelSpec
    S: tuple[np.ndarray, ...]
    Y: tuple[np.ndarray, ...]
    physical: tuple[np.ndarray, ...]
    minimal: tuple[np.ndarray, ...]
    q: tuple[float, ...]
    h: tuple[np.ndarray, ...]
    cum_h: tuple[np.ndarray, ...]

    @property
    def horizon(self) -> int:
        return self.spec.horizon

    def node_count(self, depth: int) -> int:
        return 4**depth

    def ancestors(self, depth: int, level: int) -> np.ndarray:
        return np.arange(4**depth) // 4 ** (depth - level)

    def prices(self, depth: int) -> np.ndarray:
        return self.S[depth]


def _relative_entropy(q: float, p: np.ndarray) -> np.ndarray:
    return special.rel_entr(q, p) + special.rel_entr(1 - q, 1 - p)


def build_lattice(spec: FactorModelSpec) -> FactorLattice:
    S, Y, cum_h = [np.ones(1)], [np.ones(1)], [np.zeros(1)]
    physical, minimal, qs, hs = [], [], [], []
    for d, period in enumerate(spec.periods):
        n = 4**d
        law = np.array(period.laws(n))
        q = period.q
        if not 0 < q < 1:
            raise ModelError(f"period {d + 1} admits arbitrage (q={q})")
        p_up = law[:, _XI_UP].sum(axis=1)
        # rescale the ξ-marginal to q, keep the law of η given ξ
        scale = np.where(_XI_UP, q / p_up[:, None], (1 - q) / (1 - p_up[:, None]))
        h = _relative_entropy(q, p_up)

        physical.append(law)
        minimal.append(law * scale)
        qs.append(q)
        hs.append(h)
        S.append(np.repeat(S[-1], 4) * np.tile(period.xi, n))
        Y.append(np.repeat(Y[-1], 4) * np.tile(period.eta, n))
        cum_h.append(np.repeat(cum_h[-1] + h, 4))
    logger.debug("binomial lattice with %d terminal nodes", S[-1].size)
    return FactorLattice(
        spec=spec,
        S=tuple(S),
        Y=tuple(Y),
        physical=tuple(physical),
        minimal=tuple(minimal),
        q=tuple(qs),
        h=tuple(hs),
        cum_h=tuple(cum_h),
    )


def _nodes(lattice: FactorLattice, t: int, node: int | np.ndarray | None) -> np.ndarray | slice:
    if not 0 <= t <= lattice.horizon:
        raise StructuralError(f"depth {t} outside [0, {lattice.horizon}]")
    return slice(None) if node is None else node


def forward_U(lattice: FactorLattice, t: int, x: float | np.ndarray, node: int | np.ndarray | None = None):
    """U_t(x) = −exp(−x + Σ_{k≤t} h_k) at the given node(s)."""
    return -np.exp(-np.asarray(x) + lattice.cum_h[t][_nodes(lattice, t, node)])


def forward_U_inv(lattice: FactorLattice, t: int, y: float | np.ndarray, node: int | np.ndarray | None = None):
    y = np.asarray(y, dtype=float)
    if np.any(y >= 0):
        raise DomainError("the forward exponential performance only takes negative values")
    return -np.log(-y) + lattice.cum_h[t][_nodes(lattice, t, node)]


def step_price(lattice: FactorLattice, values: np.ndarray, t: int, node: int | None = None):
    """E^{(t,t+1)} of a depth-(t+1) claim, at one node or all depth-t nodes.

    Averages U_{t+1}(−C) over η given each ξ-branch, maps back through
    −U_{t+1}^{-1} and averages over ξ with weights (q, 1 − q). The Σh terms
    of U and its inverse cancel, so the computation runs in log space.
    """
    values = np.asarray(values, dtype=float)
    if not 0 <= t < lattice.horizon:
        raise StructuralError(f"no step leaves depth {t} on a horizon-{lattice.horizon} lattice")
    if values.shape != (4 ** (t + 1),):
        raise StructuralError(f"expected {4 ** (t + 1)} child values, got shape {values.shape}")
    children = values.reshape(-1, 4)
    law = lattice.minimal[t]
    q = lattice.q[t]
    up = special.logsumexp(children[:, _XI_UP], b=law[:, _XI_UP] / q, axis=1)
    down = special.logsumexp(children[:, ~_XI_UP], b=law[:, ~_XI_UP] / (1 - q), axis=1)
    prices = q * up + (1 - q) * down
    return prices if node is None else float(prices[node])


def multi_step_price(lattice: FactorLattice, values: np.ndarray, t_prime: int, t: int = 0) -> np.ndarray:
    """E^{(t,t')}: step_price composed backward from depth t' to depth t."""
    if not 0 <= t <= t_prime <= lattice.horizon:
        raise StructuralError(f"need 0 <= t <= t' <= {lattice.horizon}, got t={t}, t'={t_prime}")
    prices = np.asarray(values, dtype=float)
    for d in range(t_prime - 1, t - 1, -1):
        prices = step_price(lattice, prices, d)
    return prices


def ferm_at(lattice: FactorLattice, claim: Claim, t: int) -> float:
    """E^{(0,t)}(−C) for t at or after the claim's depth."""
    return float(multi_step_price(lattice, -claim.lifted(lattice, t), t, 0)[0])


def ferm_binomial(lattice: FactorLattice, claim: Claim) -> float:
    """ρ(C) = E^{(0,t_C)}(−C), with t_C the earliest maturity of C."""
    reduced = reduce_claim(claim, lattice)
    return ferm_at(lattice, reduced, int(reduced.depth))


def _log_value(lattice: FactorLattice, log_values: np.ndarray, t: int) -> float:
    """ln inf E^P[exp(log_values − gains)] over per-node holdings, by backward induction."""
    for d in range(t - 1, -1, -1):
        children = log_values.reshape(-1, 4)
        law = lattice.physical[d]
        moves = lattice.S[d + 1].reshape(-1, 4) - lattice.S[d][:, None]
        log_values = np.array(
            [min_log_expectation(children[j], law[j], moves[j]) for j in range(children.shape[0])]
        )
    return float(log_values[0])


def indifference_oracle(lattice: FactorLattice, claim: Claim, t: int, x0: float = 0.0) -> float:
    """Cash amount equating sup E[U_t(x0 + C + G)] with sup E[U_t(x0 + G)], as a risk value.

    Solves both optimal investment problems under the physical law, one
    concave maximization per node, and returns ln of the ratio of optima.
    """
    check_claim(claim, lattice)
    if t < claim.depth or t > lattice.horizon:
        raise StructuralError(f"need {claim.depth} <= t <= {lattice.horizon}, got {t}")
    c = claim.lifted(lattice, t)
    base = -x0 + lattice.cum_h[t]
    return _log_value(lattice, base - c, t) - _log_value(lattice, base, t)


def self_generation_gap(lattice: FactorLattice, t: int, x: float = 0.0) -> float:
    """sup E[U_t(x + G)] − U_0(x); zero for a forward performance."""
    best = -np.exp(_log_value(lattice, -x + lattice.cum_h[t], t))
    return float(best - forward_U(lattice, 0, x, 0))


def gains_claim(lattice: FactorLattice, holdings: Sequence[np.ndarray], m: float = 0.0) -> Claim:
    """m + Σ α_k (S_{k+1} − S_k) at depth len(holdings); holdings[k] has one entry per depth-k node."""
    t = len(holdings)
    if t > lattice.horizon:
        raise StructuralError(f"{t} trading periods exceed the horizon {lattice.horizon}")
    values = np.full(4**t, float(m))
    for k, alpha in enumerate(holdings):
        alpha = np.asarray(alpha, dtype=float)
        if alpha.shape != (4**k,):
            raise StructuralError(f"holdings at depth {k} need {4**k} entries, got {alpha.shape}")
        here = lattice.ancestors(t, k)
        step = lattice.S[k + 1][lattice.ancestors(t, k + 1)] - lattice.S[k][here]
        values += alpha[here] * step
    return Claim.on_nodes(values, t, "lattice")


def invariance_table(lattice: FactorLattice, claim: Claim) -> list[tuple[int, float]]:
    """(t, E^{(0,t)}(−C)) for every t from the earliest maturity to the horizon."""
    reduced = reduce_claim(claim, lattice)
    return [(t, ferm_at(lattice, reduced, t)) for t in range(int(reduced.depth), lattice.horizon + 1)]


def _path_index(key: str) -> int:
    if len(key) % 2:
        raise ConfigError(f"path key {key!r} must be a sequence of two-letter moves")
    index = 0
    for k in range(0, len(key), 2):
        move = key[k : k + 2]
        if move not in consts.LATTICE_MOVES:
            raise ConfigError(f"unknown move {move!r} in path key {key!r}")
        index = 4 * index + consts.LATTICE_MOVES.index(move)
    return index


def load_lattice_claim(path: str | Path, lattice: FactorLattice) -> Claim:
    """`{"depth": t, "payoffs": [...] | {"uudu": value, ...}}`, list entries in path order."""
    try:
        doc = json.loads(Path(path).read_text())
        depth = int(doc["depth"])
        payoffs = doc["payoffs"]
    except (OSError, json.JSONDecodeError, KeyError, TypeError, ValueError) as e:
        raise ConfigError(f"cannot read claim file {path}: {e}") from e
    if not 0 <= depth <= lattice.horizon:
        raise ConfigError(f"claim depth {depth} outside [0, {lattice.horizon}]")
    if isinstance(payoffs, dict):
        values = np.full(4**depth, np.nan)
        for key, value in payoffs.items():
            if len(key) != 2 * depth:
                raise ConfigError(f"path key {key!r} does not have depth {depth}")
            values[_path_index(key)] = float(value)
        if np.any(np.isnan(values)):
            raise ConfigError(f"claim file leaves {int(np.isnan(values).sum())} depth-{depth} nodes without a payoff")
        payoffs = values
    return Claim.on_nodes(payoffs, depth, "lattice")


class FermEvaluator(RiskEvaluator):
    """ρ(·;t) = E^{(0,t)}(−·) on the lattice."""

    name = "ferm"
    claim_kind = "lattice"

    def evaluate(self, claim: Claim, t: int) -> float:
        return ferm_at(self.model, claim, t)
