"""Exact risk measures on finite information trees.

The market is a rooted tree with conditional (per-parent) physical
probabilities and one risky price per node; the bond is identically 1.
Martingale measures are charted by an affine map per branching node, so
a parameter vector fixes every conditional law and, through products along
paths, the law of the atoms at any depth.
"""

from __future__ import annotations

import json
import logging
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Literal, Sequence

import numpy as np
from scipy import linalg, optimize, special

from mirm import consts
from mirm.core_risk import Claim, RiskEvaluator, min_log_expectation
from mirm.errors import ConfigError, DomainError, ModelError, NumericalError, StructuralError

logger = logging.getLogger(__name__)

EntropyForm = Literal["standard", "printed"]
EntropicPenalty = Literal["normalized", "raw"]
Penalty = Callable[[np.ndarray], np.ndarray]

_PROB_TOL = 1e-12


@dataclass(frozen=True)
class FiniteTreeMarket:
    ids: tuple[str, ...]
    parent: np.ndarray
    edge_prob: np.ndarray
    price: np.ndarray
    depth_of: np.ndarray
    levels: tuple[np.ndarray, ...] = field(repr=False)
    position: np.ndarray = field(repr=False)
    children: tuple[np.ndarray, ...] = field(repr=False)

    def __post_init__(self):
        for name in ("parent", "edge_prob", "price", "depth_of", "position"):
            getattr(self, name).setflags(write=False)
        if self.horizon > consts.MAX_TREE_DEPTH:
            raise ModelError(f"tree depth {self.horizon} exceeds {consts.MAX_TREE_DEPTH}")
        for node, kids in enumerate(self.children):
            if kids.size == 0:
                if self.depth_of[node] != self.horizon:
                    raise ModelError(
                        f"leaf {self.ids[node]!r} sits at depth {self.depth_of[node]}, "
                        f"all leaves must sit at depth {self.horizon}"
                    )
                continue
            probs = self.edge_prob[kids]
            if np.any(probs <= 0) or abs(probs.sum() - 1.0) > _PROB_TOL:
                raise ModelError(f"edge probabilities below {self.ids[node]!r} must be positive and sum to 1")
            x, s = self.price[kids], self.price[node]
            if np.ptp(x) == 0:
                if x[0] != s:
                    raise ModelError(f"arbitrage at {self.ids[node]!r}: every child moves the price")
            elif not (x.min() < s < x.max()):
                raise ModelError(f"arbitrage at {self.ids[node]!r}: price {s} outside ({x.min()}, {x.max()})")

    @classmethod
    def from_nodes(cls, nodes: Sequence[dict[str, Any]]) -> FiniteTreeMarket:
        try:
            by_id = {str(n["id"]): n for n in nodes}
            roots = [i for i, n in by_id.items() if n.get("parent") is None]
            if len(roots) != 1:
                raise ConfigError(f"expected exactly one root node, found {len(roots)}")
            kids: dict[str, list[str]] = {i: [] for i in by_id}
            for i, n in by_id.items():
                if n.get("parent") is not None:
                    kids[str(n["parent"])].append(i)

            order, depth_of = [roots[0]], [0]
            cursor = 0
            while cursor < len(order):
                for child in kids[order[cursor]]:
                    order.append(child)
                    depth_of.append(depth_of[cursor] + 1)
                cursor += 1
            if len(order) != len(by_id):
                raise ConfigError("node list is not a single connected tree")

            index = {i: k for k, i in enumerate(order)}
            parent = np.array([-1 if by_id[i].get("parent") is None else index[str(by_id[i]["parent"])] for i in order])
            edge_prob = np.array([1.0 if k == 0 else float(by_id[i]["prob"]) for k, i in enumerate(order)])
            price = np.array([float(by_id[i]["price"]) for i in order])
        except (KeyError, TypeError, ValueError) as e:
            raise ConfigError(f"malformed market node list: {e}") from e

        depth_arr = np.array(depth_of)
        levels = tuple(np.flatnonzero(depth_arr == d) for d in range(depth_arr.max() + 1))
        position = np.empty(len(order), dtype=int)
        for level in levels:
            position[level] = np.arange(level.size)
        children = tuple(np.flatnonzero(parent == k) for k in range(len(order)))
        return cls(
            ids=tuple(order),
            parent=parent,
            edge_prob=edge_prob,
            price=price,
            depth_of=depth_arr,
            levels=levels,
            position=position,
            children=children,
        )

    @property
    def horizon(self) -> int:
        return len(self.levels) - 1

    def node_count(self, depth: int) -> int:
        return int(self.levels[depth].size)

    def ancestors(self, depth: int, level: int) -> np.ndarray:
        nodes = self.levels[depth]
        for _ in range(depth - level):
            nodes = self.parent[nodes]
        return self.position[nodes]

    def prices(self, depth: int) -> np.ndarray:
        return self.price[self.levels[depth]]

    def atom_probabilities(self, level: int) -> np.ndarray:
        probs = np.ones(1)
        for d in range(1, level + 1):
            nodes = self.levels[d]
            probs = probs[self.position[self.parent[nodes]]] * self.edge_prob[nodes]
        return probs


def build_example_market() -> FiniteTreeMarket:
    """Two-period tree: three equally likely branches, the last one splitting 1/3 : 2/3."""
    return FiniteTreeMarket.from_nodes(
        [
            {"id": "S0", "parent": None, "prob": 1.0, "price": 4.0},
            {"id": "S1", "parent": "S0", "prob": 1 / 3, "price": 6.0},
            {"id": "S2", "parent": "S0", "prob": 1 / 3, "price": 4.0},
            {"id": "S3", "parent": "S0", "prob": 1 / 3, "price": 2.0},
            {"id": "w1", "parent": "S1", "prob": 1.0, "price": 6.0},
            {"id": "w2", "parent": "S2", "prob": 1.0, "price": 4.0},
            {"id": "w3", "parent": "S3", "prob": 1 / 3, "price": 3.0},
            {"id": "w4", "parent": "S3", "prob": 2 / 3, "price": 1.0},
        ]
    )


def market_from_dict(doc: dict[str, Any]) -> FiniteTreeMarket:
    if "nodes" not in doc:
        raise ConfigError("market description needs a 'nodes' list")
    return FiniteTreeMarket.from_nodes(doc["nodes"])


def load_market(path: str | Path) -> FiniteTreeMarket:
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as e:
        raise ConfigError(f"cannot read market file {path}: {e}") from e
    return market_from_dict(doc)


def load_tree_claim(path: str | Path, market: FiniteTreeMarket) -> Claim:
    """`{"depth": t, "payoffs": [...] | {node_id: value}}`."""
    try:
        doc = json.loads(Path(path).read_text())
        depth = int(doc["depth"])
        payoffs = doc["payoffs"]
    except (OSError, json.JSONDecodeError, KeyError, TypeError, ValueError) as e:
        raise ConfigError(f"cannot read claim file {path}: {e}") from e
    if depth > market.horizon:
        raise ConfigError(f"claim depth {depth} exceeds the tree depth {market.horizon}")
    if isinstance(payoffs, dict):
        names = [market.ids[k] for k in market.levels[depth]]
        missing = [n for n in names if n not in payoffs]
        if missing:
            raise ConfigError(f"claim file misses payoffs for {missing}")
        payoffs = [payoffs[n] for n in names]
    return Claim.on_nodes(payoffs, depth, "tree")


@dataclass(frozen=True)
class NodeChart:
    node: int
    children: np.ndarray
    base: np.ndarray
    directions: np.ndarray
    offset: int

    @property
    def dim(self) -> int:
        return self.directions.shape[1]


@dataclass(frozen=True)
class MartingaleMeasureFamily:
    market: FiniteTreeMarket
    charts: tuple[NodeChart, ...]
    dim: int

    def edge_probabilities(self, thetas: np.ndarray) -> np.ndarray:
        thetas = np.atleast_2d(np.asarray(thetas, dtype=float))
        out = np.ones((thetas.shape[0], len(self.market.ids)))
        for chart in self.charts:
            local = thetas[:, chart.offset : chart.offset + chart.dim]
            out[:, chart.children] = chart.base + local @ chart.directions.T
        return out

    def atom_probabilities(self, thetas: np.ndarray, level: int) -> np.ndarray:
        edges = self.edge_probabilities(thetas)
        market = self.market
        probs = np.ones((edges.shape[0], 1))
        for d in range(1, level + 1):
            nodes = market.levels[d]
            probs = probs[:, market.position[market.parent[nodes]]] * edges[:, nodes]
        return probs

    def constraints(self) -> tuple[np.ndarray, np.ndarray]:
        """(G, h) with G θ + h = edge probabilities of the charted children."""
        rows, offsets = [], []
        for chart in self.charts:
            block = np.zeros((chart.children.size, self.dim))
            block[:, chart.offset : chart.offset + chart.dim] = chart.directions
            rows.append(block)
            offsets.append(chart.base)
        if not rows:
            return np.zeros((0, self.dim)), np.zeros(0)
        return np.vstack(rows), np.concatenate(offsets)

    def interval(self) -> tuple[float, float]:
        if self.dim != 1:
            raise DomainError(f"interval() needs a one-parameter family, this one has {self.dim}")
        g, h = self.constraints()
        g = g[:, 0]
        lo = max((-h[i] / g[i] for i in range(g.size) if g[i] > 0), default=-np.inf)
        hi = min((-h[i] / g[i] for i in range(g.size) if g[i] < 0), default=np.inf)
        return float(lo), float(hi)

    def contains(self, theta: np.ndarray | float, *, closed: bool = False) -> bool:
        g, h = self.constraints()
        probs = g @ np.atleast_1d(np.asarray(theta, dtype=float)) + h
        return bool(np.all(probs >= -_PROB_TOL) if closed else np.all(probs > 0))

    def martingale_defect(self, thetas: np.ndarray) -> float:
        """Largest |E[child price] - parent price| over nodes and parameters."""
        edges = self.edge_probabilities(thetas)
        defect = 0.0
        for chart in self.charts:
            q = edges[:, chart.children]
            mean = q @ self.market.price[chart.children]
            defect = max(defect, float(np.max(np.abs(mean - self.market.price[chart.node]))))
            defect = max(defect, float(np.max(np.abs(q.sum(axis=1) - 1.0))))
        return defect


def _node_chart(market: FiniteTreeMarket, node: int, offset: int) -> NodeChart:
    kids = market.children[node]
    x = market.price[kids]
    a = np.vstack([np.ones(kids.size), x])
    b = np.array([1.0, market.price[node]])
    p = market.edge_prob[kids]
    base = p - np.linalg.pinv(a) @ (a @ p - b)
    if base.min() <= _PROB_TOL:
        # Chebyshev-style interior point: maximize the smallest probability
        k = kids.size
        res = optimize.linprog(
            c=np.r_[np.zeros(k), -1.0],
            A_ub=np.c_[-np.eye(k), np.ones(k)],
            b_ub=np.zeros(k),
            A_eq=np.c_[a, np.zeros(2)],
            b_eq=b,
            bounds=[(0, None)] * k + [(None, 1.0)],
            method="highs",
        )
        if not res.success or res.x[-1] <= _PROB_TOL:
            raise ModelError(f"no equivalent martingale measure below {market.ids[node]!r}")
        base = res.x[:k]
    directions = linalg.null_space(a)
    for j in range(directions.shape[1]):
        col = directions[:, j]
        directions[:, j] = col * (2.0 / col[np.argmax(np.abs(col))])
    return NodeChart(node=node, children=kids, base=base, directions=directions, offset=offset)


def emm_family(market: FiniteTreeMarket) -> MartingaleMeasureFamily:
    charts, offset = [], 0
    for node in range(len(market.ids)):
        if market.children[node].size == 0:
            continue
        chart = _node_chart(market, node, offset)
        charts.append(chart)
        offset += chart.dim
    family = MartingaleMeasureFamily(market=market, charts=tuple(charts), dim=offset)
    defect = family.martingale_defect(np.zeros((1, offset)))
    if defect > _PROB_TOL:
        raise ModelError(f"martingale chart is off by {defect:.3e}")
    logger.debug("martingale family with %d parameter(s)", offset)
    return family


def _entropy(family: MartingaleMeasureFamily, thetas: np.ndarray, level: int, form: EntropyForm) -> np.ndarray:
    q = np.clip(family.atom_probabilities(thetas, level), 0.0, None)
    p = family.market.atom_probabilities(level)
    terms = special.rel_entr(q, p)
    if form == "printed" and level >= 2:
        terms = terms / p
    return terms.sum(axis=1)


def relative_entropy(
    market: FiniteTreeMarket,
    family: MartingaleMeasureFamily,
    nu: float | np.ndarray,
    level: int,
    *,
    form: EntropyForm = "standard",
) -> float:
    """H(Q^ν | P) on the depth-`level` atoms; boundary parameters use 0 ln 0 = 0."""
    theta = np.atleast_1d(np.asarray(nu, dtype=float))
    if theta.shape != (family.dim,):
        raise DomainError(f"expected {family.dim} parameter(s), got {theta.shape}")
    if not family.contains(theta, closed=True):
        raise DomainError(f"parameter {theta.tolist()} lies outside the martingale domain")
    return float(_entropy(family, theta[None, :], level, form)[0])


@dataclass(frozen=True)
class Supremum:
    value: float
    argmax: np.ndarray
    evaluations: int


def maximize_over_family(
    family: MartingaleMeasureFamily,
    objective: Callable[[np.ndarray], np.ndarray],
) -> Supremum:
    """sup of a concave objective over the closed martingale domain.

    `objective` maps an (n, dim) array of parameters to n values. One
    parameter: grid plus a bounded golden-section/Brent refinement around
    the best grid cell. Several parameters: SLSQP from the chart base point.
    """
    if family.dim == 0:
        theta = np.zeros(0)
        return Supremum(float(objective(theta[None, :])[0]), theta, 1)

    if family.dim == 1:
        lo, hi = family.interval()
        if not (np.isfinite(lo) and np.isfinite(hi)):
            raise DomainError("unbounded one-parameter martingale domain")
        grid = np.linspace(lo, hi, consts.DUAL_GRID_POINTS)
        values = objective(grid[:, None])
        if not np.any(np.isfinite(values)):
            raise ConfigError("objective is -inf on the whole martingale domain")
        i = int(np.nanargmax(np.where(np.isfinite(values), values, -np.inf)))
        left, right = grid[max(i - 1, 0)], grid[min(i + 1, grid.size - 1)]
        res = optimize.minimize_scalar(
            lambda x: -float(objective(np.array([[x]]))[0]),
            bounds=(left, right),
            method="bounded",
            options={"xatol": consts.DUAL_XTOL * max(1.0, hi - lo), "maxiter": consts.MAX_OPTIMIZER_EVALUATIONS},
        )
        if not res.success:
            raise NumericalError(f"one-dimensional maximization did not converge: {res.message}")
        evaluations = grid.size + int(res.nfev)
        if -res.fun >= values[i]:
            return Supremum(float(-res.fun), np.array([res.x]), evaluations)
        return Supremum(float(values[i]), np.array([grid[i]]), evaluations)

    g, h = family.constraints()
    start = np.zeros(family.dim)
    res = optimize.minimize(
        lambda th: -float(objective(th[None, :])[0]),
        start,
        method="SLSQP",
        constraints=[{"type": "ineq", "fun": lambda th: g @ th + h, "jac": lambda th: g}],
        options={"maxiter": 1000, "ftol": 1e-14},
    )
    # status 8: no descent direction left at ftol, the iterate is optimal to working precision
    if (not res.success and res.status != 8) or res.nfev > consts.MAX_OPTIMIZER_EVALUATIONS:
        raise NumericalError(f"SLSQP over the martingale domain failed: {res.message}")
    return Supremum(float(-res.fun), np.asarray(res.x), int(res.nfev))


@dataclass(frozen=True)
class EntropyCurve:
    family: MartingaleMeasureFamily
    level: int
    minimum: float
    argmin: np.ndarray
    form: EntropyForm = "standard"

    def raw(self, thetas: np.ndarray) -> np.ndarray:
        return _entropy(self.family, np.atleast_2d(thetas), self.level, self.form)

    def normalized(self, thetas: np.ndarray) -> np.ndarray:
        return self.raw(thetas) - self.minimum

    def conjugate(self, slope: float) -> float:
        """sup over the domain of slope·ν − h(ν) (one-parameter families)."""
        return maximize_over_family(
            self.family, lambda th: slope * th[:, 0] - self.normalized(th)
        ).value

    def check(self, points: int = 4097) -> tuple[float, float]:
        """(min of normalized values, worst midpoint-convexity defect) on a grid."""
        lo, hi = self.family.interval()
        grid = np.linspace(lo, hi, points)
        values = self.normalized(grid[:, None])
        midpoints = self.normalized(((grid[:-2] + grid[2:]) / 2)[:, None])
        defect = float(np.max(midpoints - (values[:-2] + values[2:]) / 2, initial=0.0))
        return float(values.min()), max(defect, 0.0)


def entropy_curve(
    market: FiniteTreeMarket,
    family: MartingaleMeasureFamily,
    level: int,
    *,
    form: EntropyForm = "standard",
) -> EntropyCurve:
    best = maximize_over_family(family, lambda th: -_entropy(family, th, level, form))
    return EntropyCurve(family=family, level=level, minimum=-best.value, argmin=best.argmax, form=form)


def _payoffs(market: FiniteTreeMarket, claim: Claim, t: int) -> np.ndarray:
    if claim.kind != "tree":
        raise StructuralError(f"expected a tree claim, got a {claim.kind} claim")
    if not 0 <= t <= market.horizon:
        raise StructuralError(f"maturity {t} outside [0, {market.horizon}]")
    return claim.lifted(market, t)


def penalty_rho(
    market: FiniteTreeMarket,
    claim: Claim,
    t: int,
    penalty: Penalty,
    *,
    family: MartingaleMeasureFamily | None = None,
) -> float:
    """sup over the martingale domain of E^Q[−f] − penalty(θ); `penalty` is vectorized over rows."""
    family = family or emm_family(market)
    f = _payoffs(market, claim, t)

    def objective(thetas: np.ndarray) -> np.ndarray:
        return -family.atom_probabilities(thetas, t) @ f - penalty(thetas)

    return maximize_over_family(family, objective).value


def entropic_rho_dual(
    market: FiniteTreeMarket,
    claim: Claim,
    t: int,
    gamma: float = 1.0,
    *,
    family: MartingaleMeasureFamily | None = None,
    curve: EntropyCurve | None = None,
    form: EntropyForm = "standard",
    penalty: EntropicPenalty = "normalized",
) -> float:
    """sup of E^Q[−f] − h/γ. The raw penalty is H itself; the normalized one subtracts
    its minimum, so the two differ by exactly that constant over γ."""
    if gamma <= 0:
        raise DomainError(f"risk aversion must be positive, got {gamma}")
    family = family or emm_family(market)
    curve = curve or entropy_curve(market, family, t, form=form)
    if curve.level != t:
        raise StructuralError(f"entropy curve is for depth {curve.level}, not {t}")
    if penalty not in consts.ENTROPIC_PENALTIES:
        raise ConfigError(f"penalty must be one of {consts.ENTROPIC_PENALTIES}, got {penalty!r}")
    h = curve.normalized if penalty == "normalized" else curve.raw
    return penalty_rho(market, claim, t, lambda th: h(th) / gamma, family=family)


def _log_min_exponential(market: FiniteTreeMarket, f: np.ndarray, t: int, gamma: float) -> float:
    """ln inf over strategies of E[exp(−γ(f + gains))] by backward induction."""
    log_values = -gamma * f
    for d in range(t - 1, -1, -1):
        nodes = market.levels[d]
        out = np.empty(nodes.size)
        for j, node in enumerate(nodes):
            kids = market.children[node]
            out[j] = min_log_expectation(
                log_values[market.position[kids]],
                market.edge_prob[kids],
                market.price[kids] - market.price[node],
                gamma,
            )
        log_values = out
    return float(log_values[0])


def entropic_rho_primal(market: FiniteTreeMarket, claim: Claim, t: int, gamma: float = 1.0) -> float:
    """Solve the indifference equation; ρ = (1/γ) ln(optimum with claim / optimum without)."""
    if gamma <= 0:
        raise DomainError(f"risk aversion must be positive, got {gamma}")
    f = _payoffs(market, claim, t)
    with_claim = _log_min_exponential(market, f, t, gamma)
    without = _log_min_exponential(market, np.zeros_like(f), t, gamma)
    return (with_claim - without) / gamma


def superhedge_rho(market: FiniteTreeMarket, claim: Claim, t: int) -> float:
    """sup over the closed martingale polytope of E^Q[−f], by node-wise linear programs."""
    values = -_payoffs(market, claim, t)
    for d in range(t - 1, -1, -1):
        nodes = market.levels[d]
        out = np.empty(nodes.size)
        for j, node in enumerate(nodes):
            kids = market.children[node]
            child_values = values[market.position[kids]]
            if kids.size == 1:
                out[j] = child_values[0]
                continue
            res = optimize.linprog(
                c=-child_values,
                A_eq=np.vstack([np.ones(kids.size), market.price[kids]]),
                b_eq=np.array([1.0, market.price[node]]),
                bounds=[(0, None)] * kids.size,
                method="highs",
            )
            if not res.success:
                raise NumericalError(f"super-hedging LP failed at {market.ids[node]!r}: {res.message}")
            out[j] = -res.fun
        values = out
    return float(values[0])


def example_claim(market: FiniteTreeMarket, a: float, shape: np.ndarray | None = None) -> Claim:
    """f_a: pays `a` on the depth-1 nodes whose subtrees branch, 0 elsewhere."""
    if shape is None:
        leaves = market.ancestors(market.horizon, 1)
        shape = (np.bincount(leaves, minlength=market.node_count(1)) > 1).astype(float)
    if not np.any(shape):
        raise ConfigError("no depth-1 node branches; the scan needs an incomplete subtree")
    return Claim.on_nodes(a * np.asarray(shape, dtype=float), 1, "tree")


@dataclass(frozen=True)
class ScanRow:
    a: float
    rho_t1: float
    rho_t2: float

    @property
    def gap(self) -> float:
        return abs(self.rho_t1 - self.rho_t2)


@dataclass(frozen=True)
class ScanResult:
    rows: tuple[ScanRow, ...]
    gamma: float

    @property
    def max_gap(self) -> float:
        return max(row.gap for row in self.rows)

    @property
    def argmax_a(self) -> float:
        return max(self.rows, key=lambda row: row.gap).a

    def csv_rows(self) -> list[list[float]]:
        return [[row.a, row.rho_t1, row.rho_t2, row.gap] for row in self.rows]


def noncompliance_scan(
    market: FiniteTreeMarket,
    gamma: float,
    a_values: Sequence[float],
    *,
    shape: np.ndarray | None = None,
) -> ScanResult:
    """ρ(f_a; 1) against ρ(f_a; 2) for each a; the gap shows maturity dependence."""
    if not a_values or any(a <= 0 for a in a_values):
        raise ConfigError("a_values must be a nonempty list of positive numbers")
    if market.horizon < 2:
        raise ConfigError("the scan compares depths 1 and 2; the tree is too shallow")
    family = emm_family(market)
    curves = {t: entropy_curve(market, family, t) for t in (1, 2)}
    rows = []
    for a in a_values:
        claim = example_claim(market, a, shape)
        rho = [entropic_rho_dual(market, claim, t, gamma, family=family, curve=curves[t]) for t in (1, 2)]
        rows.append(ScanRow(a=float(a), rho_t1=rho[0], rho_t2=rho[1]))
    result = ScanResult(rows=tuple(rows), gamma=gamma)
    logger.info("max gap %.6g at a=%g", result.max_gap, result.argmax_a)
    return result


class EntropicEvaluator(RiskEvaluator):
    """Classical entropic ρ(·; t) anchored at the maturity it is asked for."""

    name = "entropic"

    def __init__(
        self,
        market: FiniteTreeMarket,
        gamma: float = 1.0,
        *,
        method: Literal["dual", "primal"] = "dual",
        form: EntropyForm = "standard",
    ):
        super().__init__(market)
        self.gamma = gamma
        self.method = method
        self.form = form
        self.family = emm_family(market)
        self._curves: dict[int, EntropyCurve] = {}
        self._lock = threading.Lock()

    def curve(self, t: int) -> EntropyCurve:
        # axiom trials call this from worker threads
        with self._lock:
            if t not in self._curves:
                self._curves[t] = entropy_curve(self.model, self.family, t, form=self.form)
            return self._curves[t]

    def evaluate(self, claim: Claim, t: int) -> float:
        if self.method == "primal":
            return entropic_rho_primal(self.model, claim, t, self.gamma)
        return entropic_rho_dual(self.model, claim, t, self.gamma, family=self.family, curve=self.curve(t))


class SuperhedgeEvaluator(RiskEvaluator):
    name = "superhedge"

    def evaluate(self, claim: Claim, t: int) -> float:
        return superhedge_rho(self.model, claim, t)


class PenaltyEvaluator(RiskEvaluator):
    """Penalty-dual ρ. With anchor="horizon" every claim is read at the tree's
    final depth, the closed-market construction, which is maturity independent."""

    name = "penalty"

    def __init__(
        self,
        market: FiniteTreeMarket,
        penalty: Penalty,
        *,
        anchor: Literal["maturity", "horizon"] = "maturity",
    ):
        super().__init__(market)
        self.penalty = penalty
        self.anchor = anchor
        self.family = emm_family(market)

    def evaluate(self, claim: Claim, t: int) -> float:
        at = self.model.horizon if self.anchor == "horizon" else t
        return penalty_rho(self.model, claim, at, self.penalty, family=self.family)


def closed_market_evaluator(market: FiniteTreeMarket, gamma: float = 1.0) -> PenaltyEvaluator:
    """Entropic penalty at the final depth, charged once for all maturities."""
    family = emm_family(market)
    curve = entropy_curve(market, family, market.horizon)
    evaluator = PenaltyEvaluator(market, lambda th: curve.normalized(th) / gamma, anchor="horizon")
    evaluator.name = "closed_market"
    return evaluator
