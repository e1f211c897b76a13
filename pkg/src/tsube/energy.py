"""Grid merchandizing, local power-line exchange and renewable harvesting."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError


@dataclass(frozen=True)
class EnergyPrices:
    """Unit buying/selling prices in cents/slot/mW."""

    buy: float
    sell: float

    def __post_init__(self):
        if not self.buy > self.sell >= 0:
            raise ConfigError("need buy_price > sell_price >= 0", "energy.prices")


@dataclass(frozen=True)
class ExchangePlan:
    """One signed flow per power line, oriented along ``topology.edges``.

    ``flow[e] > 0`` sends energy from the lower-indexed endpoint to the higher
    one.  Storing a single value per line makes ``delta_m^l = -delta_l^m`` hold
    by construction and rules out simultaneous two-way flow.
    """

    flow: np.ndarray

    @classmethod
    def zero(cls, topology):
        return cls(np.zeros(len(topology.edges)))

    def directed(self, topology, m, l):
        """Energy sent from BST ``m`` to BST ``l`` (negative when receiving)."""
        for e, (a, b) in enumerate(topology.edges):
            if (a, b) == (m, l):
                return float(self.flow[e])
            if (a, b) == (l, m):
                return -float(self.flow[e])
        raise KeyError(f"no power line between BSTs {m} and {l}")


def incidence(topology):
    """Signed BST-by-edge incidence matrix: +1 at the sending end of a positive flow."""
    S = np.zeros((topology.num_bsts, len(topology.edges)))
    for e, (m, l) in enumerate(topology.edges):
        S[m, e] = 1.0
        S[l, e] = -1.0
    return S


def endpoint_flows(plan, topology):
    """Net energy output of every BST via the local lines (all BSTs at once)."""
    flow = np.asarray(plan.flow if isinstance(plan, ExchangePlan) else plan, dtype=float)
    d = incidence(topology) * flow[None, :]
    beta = topology.line_efficiency[None, :]
    return np.maximum(d, beta * d).sum(axis=1)


def net_exchange(plan, m, topology):
    return float(endpoint_flows(plan, topology)[m])


def grid_expenditure(bst_power, net_exchange, harvest, prices):
    """Grid cost (cents/slot) of a BST whose net energy need is ``P + E - H``.

    Deficits are bought at ``prices.buy`` and surpluses sold at ``prices.sell``,
    so a surplus yields a negative cost.
    """
    x = np.asarray(bst_power, float) + np.asarray(net_exchange, float) - np.asarray(harvest, float)
    out = (prices.buy - prices.sell) * np.maximum(x, 0.0) + prices.sell * x
    return float(out) if out.ndim == 0 else out


def draw_harvest(mean_rates, rng, frame_length):
    """Renewable energy harvested per BST over one frame (mW*slot).

    The per-slot share ``E / T`` is uniform on ``[0, 2 * mean]``.
    """
    mean_rates = np.asarray(mean_rates, dtype=float)
    return frame_length * 2.0 * mean_rates * rng.random(mean_rates.shape)
