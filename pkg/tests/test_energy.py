import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from tsube.energy import (
    EnergyPrices,
    ExchangePlan,
    draw_harvest,
    endpoint_flows,
    grid_expenditure,
    incidence,
    net_exchange,
)
from tsube.errors import ConfigError
from tsube.model import Topology

PRICES = EnergyPrices(1.6e-9, 0.6e-9)


def line_topology(M=2, edges=((0, 1),), beta=0.8):
    return Topology(
        antennas=1, ues_per_bst=(1,) * M, distance=np.full((M, M), 100.0), carrier_freq=2.1,
        noise_power=1.0, pa_efficiency=0.8, max_tx_power=1.0, baseband_power=1.0,
        edges=edges, line_efficiency=beta,
    )


def test_net_exchange_examples():
    topo = line_topology()
    plan = ExchangePlan(np.array([10.0]))
    assert net_exchange(plan, 0, topo) == pytest.approx(10.0)
    assert net_exchange(plan, 1, topo) == pytest.approx(-8.0)
    assert plan.directed(topo, 1, 0) == -10.0
    assert net_exchange(ExchangePlan.zero(topo), 0, topo) == 0.0
    # star centred on BST 1: sends 5 to BST 0 and receives 5 from BST 2
    star = line_topology(3, edges=((0, 1), (1, 2)))
    plan = ExchangePlan(np.array([-5.0, -5.0]))
    assert net_exchange(plan, 1, star) == pytest.approx(5.0 - 4.0)


def test_grid_expenditure_examples():
    assert grid_expenditure(100.0, 0.0, 0.0, PRICES) == pytest.approx(1.6e-7)
    assert grid_expenditure(0.0, 0.0, 100.0, PRICES) == pytest.approx(-0.6e-7)
    assert grid_expenditure(50.0, 0.0, 50.0, PRICES) == 0.0


def test_prices_validation():
    with pytest.raises(ConfigError):
        EnergyPrices(0.6e-9, 0.6e-9)
    with pytest.raises(ConfigError):
        EnergyPrices(1.0, -0.1)


@given(st.floats(-1e4, 1e4), st.floats(-1e4, 1e4), st.floats(0, 1))
def test_grid_expenditure_convex_monotone(x, y, lam):
    g = lambda v: grid_expenditure(v, 0.0, 0.0, PRICES)
    assert g(lam * x + (1 - lam) * y) <= lam * g(x) + (1 - lam) * g(y) + 1e-20
    lo, hi = min(x, y), max(x, y)
    assert g(lo) <= g(hi)
    expected = PRICES.buy * x if x >= 0 else PRICES.sell * x
    assert g(x) == pytest.approx(expected, rel=1e-12, abs=1e-30)


@given(st.lists(st.floats(-1e3, 1e3), min_size=2, max_size=2))
def test_no_two_way_flow_and_loss_accounting(flows):
    topo = line_topology(3, edges=((0, 1), (1, 2)))
    S = incidence(topo)
    for e, f in enumerate(flows):
        one = np.zeros(2)
        one[e] = f
        contrib = endpoint_flows(one, topo)
        m, l = topo.edges[e]
        assert contrib[m] * contrib[l] <= 0
        sender, receiver = (m, l) if f >= 0 else (l, m)
        assert -contrib[receiver] == pytest.approx(0.8 * contrib[sender], abs=1e-12)
    assert np.all(S.sum(axis=0) == 0)


def test_harvest():
    rng = np.random.default_rng(11)
    assert np.all(draw_harvest(np.zeros(2), rng, 5) == 0)
    per_slot = np.array([draw_harvest(np.array([300.0]), rng, 5)[0] / 5 for _ in range(100_000)])
    assert per_slot.mean() == pytest.approx(300.0, rel=0.02)
    a = draw_harvest(np.array([300.0, 200.0]), np.random.default_rng(2), 5)
    b = draw_harvest(np.array([300.0, 200.0]), np.random.default_rng(2), 5)
    np.testing.assert_array_equal(a, b)
