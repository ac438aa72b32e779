import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mirm import binomial_forward as bf
from mirm.core_risk import Claim
from mirm.errors import ConfigError, DomainError, ModelError, StructuralError


def _claim(values, depth):
    return Claim.on_nodes(values, depth, "lattice")


def test_minimal_measure_probability(lattice3):
    assert all(q == pytest.approx(1 / 3) for q in lattice3.q)
    # joint law keeps η given ξ
    law, minimal = lattice3.physical[0][0], lattice3.minimal[0][0]
    np.testing.assert_allclose(minimal[:2] / minimal[:2].sum(), law[:2] / law[:2].sum())
    assert minimal[:2].sum() == pytest.approx(1 / 3)


def test_entropy_increments():
    half = bf.build_lattice(bf.FactorModelSpec.uniform(1, joint=(0.25, 0.25, 0.25, 0.25)))
    expected = (1 / 3) * math.log(2 / 3) + (2 / 3) * math.log(4 / 3)
    assert half.h[0][0] == pytest.approx(expected, abs=1e-12)
    assert expected == pytest.approx(0.056633, abs=1e-6)
    at_q = bf.build_lattice(bf.FactorModelSpec.uniform(1, joint=(0.2, 2 / 15, 0.4, 4 / 15)))
    assert at_q.h[0][0] == pytest.approx(0.0, abs=1e-15)


def test_lattice_shapes(lattice3):
    assert [s.size for s in lattice3.S] == [1, 4, 16, 64]
    np.testing.assert_allclose(lattice3.S[1], [1.2, 1.2, 0.9, 0.9])
    np.testing.assert_allclose(lattice3.Y[1], [1.1, 0.95, 1.1, 0.95])
    np.testing.assert_array_equal(lattice3.ancestors(3, 1), np.arange(64) // 16)


def test_forward_utility(lattice3):
    assert bf.forward_U(lattice3, 0, 0.3, 0) == pytest.approx(-math.exp(-0.3))
    with pytest.raises(DomainError):
        bf.forward_U_inv(lattice3, 1, 0.0)


@settings(max_examples=50, deadline=None)
@given(st.floats(min_value=-20, max_value=20), st.integers(min_value=0, max_value=3))
def test_forward_utility_round_trip(lattice3, x, t):
    values = bf.forward_U(lattice3, t, x)
    np.testing.assert_allclose(bf.forward_U_inv(lattice3, t, values), x, atol=1e-9)


def test_step_price_of_constants_and_stock(lattice3):
    assert np.allclose(bf.step_price(lattice3, np.full(16, 2.5), 1), 2.5)
    ratio = lattice3.S[2] / np.repeat(lattice3.S[1], 4)
    np.testing.assert_allclose(bf.step_price(lattice3, ratio, 1), 1.0, atol=1e-14)
    assert bf.step_price(lattice3, np.full(4, -1.0), 0, node=0) == pytest.approx(-1.0)
    with pytest.raises(StructuralError):
        bf.step_price(lattice3, np.zeros(4), 1)
    with pytest.raises(StructuralError):
        bf.step_price(lattice3, np.zeros(4**4), 3)


def test_multi_step_price_identity(lattice3, rng):
    values = rng.normal(size=16)
    np.testing.assert_array_equal(bf.multi_step_price(lattice3, values, 2, 2), values)


def test_ferm_basics(lattice3, rng):
    assert bf.ferm_binomial(lattice3, _claim(np.full(64, 0.7), 3)) == pytest.approx(-0.7, abs=1e-12)
    assert bf.ferm_binomial(lattice3, _claim(lattice3.S[1], 1)) == pytest.approx(-1.0, abs=1e-12)
    for _ in range(20):
        positive = _claim(rng.uniform(0, 2, 16), 2)
        assert bf.ferm_binomial(lattice3, positive) <= 1e-12


def test_indifference_oracle_is_wealth_independent(lattice3, rng):
    claim = _claim(rng.uniform(-1, 1, 16), 2)
    values = [bf.indifference_oracle(lattice3, claim, 2, x0) for x0 in (-1.0, 0.0, 5.0)]
    assert max(values) - min(values) <= 1e-10
    assert bf.indifference_oracle(lattice3, _claim(np.zeros(4), 1), 1) == pytest.approx(0.0, abs=1e-14)


def test_oracle_matches_functional_on_random_claims(lattice3, rng):
    for _ in range(20):
        claim = _claim(rng.uniform(-1, 1, 4), 1)
        assert abs(bf.ferm_binomial(lattice3, claim) - bf.indifference_oracle(lattice3, claim, 1)) <= 1e-8


def test_oracle_matches_functional_on_node_indicators(lattice3):
    for j in range(64):
        claim = _claim(np.eye(64)[j], 3)
        assert abs(bf.ferm_binomial(lattice3, claim) - bf.indifference_oracle(lattice3, claim, 3)) <= 1e-8


def test_oracle_matches_with_node_dependent_laws(rng):
    laws = rng.dirichlet(np.ones(4), size=4)
    doc = {
        "horizon": 2,
        "periods": [
            {"xi_up": 1.2, "xi_down": 0.9, "eta_up": 1.1, "eta_down": 0.95, "joint": [0.3, 0.2, 0.2, 0.3]},
            {"xi_up": 1.1, "xi_down": 0.8, "eta_up": 1.05, "eta_down": 0.9, "joint": laws.tolist()},
        ],
    }
    lattice = bf.build_lattice(bf.FactorModelSpec.from_dict(doc))
    for _ in range(10):
        claim = _claim(rng.uniform(-1, 1, 16), 2)
        assert abs(bf.ferm_binomial(lattice, claim) - bf.indifference_oracle(lattice, claim, 2)) <= 1e-8


def test_maturity_independence(lattice5, rng):
    for _ in range(200):
        s = int(rng.integers(1, 5))
        claim = _claim(rng.uniform(-2, 2, 4**s), s)
        table = bf.invariance_table(lattice5, claim)
        assert [t for t, _ in table] == list(range(s, 6))
        values = np.array([rho for _, rho in table])
        assert np.ptp(values) <= 1e-9


def test_replicable_claims_cost_their_cash(lattice3, rng):
    holdings = [rng.uniform(-1, 1, 4**k) for k in range(3)]
    claim = bf.gains_claim(lattice3, holdings, m=0.4)
    assert bf.ferm_at(lattice3, claim, 3) == pytest.approx(-0.4, abs=1e-12)


def test_forward_performance_generates_itself(lattice3):
    for t in (1, 2, 3):
        for x in (-1.0, 0.0, 2.0):
            assert abs(bf.self_generation_gap(lattice3, t, x)) <= 1e-10


def test_evaluation_before_maturity_is_rejected(lattice3, rng):
    claim = _claim(rng.uniform(-1, 1, 16), 2)
    with pytest.raises(StructuralError):
        bf.indifference_oracle(lattice3, claim, 1)
    with pytest.raises(StructuralError):
        bf.ferm_at(lattice3, claim, 1)


def test_spec_validation():
    with pytest.raises(ModelError):
        bf.FactorModelSpec.uniform(2, xi_up=0.95)
    with pytest.raises(ModelError):
        bf.FactorModelSpec.uniform(2, joint=(0.5, 0.5, 0.2, 0.1))
    with pytest.raises(ModelError):
        bf.FactorModelSpec.uniform(2, joint=(0.5, 0.5, 0.0, 0.0))
    with pytest.raises(ModelError):
        bf.FactorModelSpec.uniform(0)
    with pytest.raises(ConfigError):
        bf.FactorModelSpec.from_dict({"horizon": 2})
    deterministic = bf.FactorModelSpec.uniform(1, eta_up=1.0, eta_down=1.0)
    assert deterministic.periods[0].eta.tolist() == [1.0] * 4


def test_single_period_entry_is_broadcast():
    doc = {"horizon": 3, "periods": [{"xi_up": 1.2, "xi_down": 0.9, "eta_up": 1.1, "eta_down": 0.95, "joint": [0.25] * 4}]}
    spec = bf.FactorModelSpec.from_dict(doc)
    assert len(spec.periods) == 3


def test_lattice_claim_files(lattice3, write_json):
    listed = bf.load_lattice_claim(write_json("list.json", {"depth": 1, "payoffs": [1, 2, 3, 4]}), lattice3)
    keyed = bf.load_lattice_claim(
        write_json("keyed.json", {"depth": 1, "payoffs": {"uu": 1, "ud": 2, "du": 3, "dd": 4}}), lattice3
    )
    np.testing.assert_array_equal(listed.values, keyed.values)
    deep = bf.load_lattice_claim(write_json("deep.json", {"depth": 2, "payoffs": {f"{a}{b}": 0.0 for a in ("uu", "ud", "du", "dd") for b in ("uu", "ud", "du", "dd")}}), lattice3)
    assert deep.values.shape == (16,)
    with pytest.raises(ConfigError):
        bf.load_lattice_claim(write_json("short.json", {"depth": 1, "payoffs": {"uu": 1}}), lattice3)
    with pytest.raises(ConfigError):
        bf.load_lattice_claim(write_json("bad.json", {"depth": 1, "payoffs": {"ux": 1}}), lattice3)


def test_path_keys_are_xi_first():
    assert bf._path_index("du") == 2
    assert bf._path_index("uddd") == 4 * 1 + 3


def _xi_path(node, depth):
    """Index of the stock path through `node` (one bit per period, 0 = up)."""
    index = 0
    for k in range(depth):
        move = (node // 4 ** (depth - 1 - k)) % 4
        index = 2 * index + (0 if move < 2 else 1)
    return index


def test_deterministic_factor_completes_the_market(rng):
    lattice = bf.build_lattice(bf.FactorModelSpec.uniform(3, eta_up=1.0, eta_down=1.0))
    q = lattice.q[0]
    paths = np.array([_xi_path(j, 3) for j in range(64)])
    ups = np.array([3 - bin(p).count("1") for p in range(8)])
    weights = q**ups * (1 - q) ** (3 - ups)
    for _ in range(20):
        # with η deterministic the only information is the stock path
        stock_payoff = rng.uniform(-1, 1, 8)
        claim = _claim(stock_payoff[paths], 3)
        assert bf.ferm_binomial(lattice, claim) == pytest.approx(-weights @ stock_payoff, abs=1e-12)


def test_factor_only_claims(lattice3):
    sizes = np.linspace(0.1, 3.0, 30)
    prices = np.array([bf.step_price(lattice3, np.array([c, 0.0, c, 0.0]), 0, node=0) for c in sizes])
    assert np.all(prices > 0) and np.all(prices < sizes)
    assert np.all(np.diff(prices) > 0)


def test_two_step_price_by_path_enumeration(lattice3, rng):
    values = rng.uniform(-1, 1, 16)
    q = lattice3.q[0]

    def one_step(children, law):
        up = math.log((law[0] * math.exp(children[0]) + law[1] * math.exp(children[1])) / q)
        down = math.log((law[2] * math.exp(children[2]) + law[3] * math.exp(children[3])) / (1 - q))
        return q * up + (1 - q) * down

    middle = [one_step(values[4 * j : 4 * j + 4], lattice3.minimal[1][j]) for j in range(4)]
    expected = one_step(middle, lattice3.minimal[0][0])
    assert bf.multi_step_price(lattice3, values, 2, 0)[0] == pytest.approx(expected, abs=1e-12)
