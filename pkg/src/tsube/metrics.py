"""Trace records, moving averages, Little's-law delay and annualized cost."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

SECONDS_PER_YEAR = 3.1536e7


@dataclass(frozen=True)
class TraceRecord:
    """Everything persisted about one simulated slot."""

    slot: int
    frame: int
    algorithm: str
    seed: int
    V: float
    phi: float
    grid_cost: np.ndarray  # per BST, cents/slot
    bst_power: np.ndarray
    harvest: np.ndarray  # per-slot share, per BST
    scheduled: np.ndarray
    q_access: np.ndarray  # at the start of the slot
    q_processing: np.ndarray
    rate: np.ndarray
    arrival: np.ndarray
    served: np.ndarray
    delta: np.ndarray  # per power line
    solves: int = 0
    flags: str = ""

    @property
    def total_cost(self):
        return float(np.sum(self.grid_cost))

    @staticmethod
    def header(topology):
        M, K, E = topology.num_bsts, topology.num_ues, len(topology.edges)
        ues = [f"{m}_{n}" for m, n in topology.ue_labels]
        cols = ["slot", "frame", "algorithm", "seed", "V", "phi", "total_cost"]
        cols += [f"cost_{m}" for m in range(M)]
        cols += [f"power_{m}" for m in range(M)]
        cols += [f"harvest_{m}" for m in range(M)]
        for name in ("sched", "q_access", "q_processing", "rate", "arrival", "served"):
            cols += [f"{name}_{u}" for u in ues]
        cols += [f"delta_{a}_{b}" for a, b in topology.edges]
        cols += ["solves", "flags"]
        assert len(cols) == 7 + 3 * M + 6 * K + E + 2
        return cols

    def row(self):
        fmt = lambda xs: [repr(float(x)) for x in np.atleast_1d(xs)]
        out = [str(self.slot), str(self.frame), self.algorithm, str(self.seed), repr(float(self.V))]
        out += [repr(float(self.phi)), repr(self.total_cost)]
        out += fmt(self.grid_cost) + fmt(self.bst_power) + fmt(self.harvest)
        out += [str(int(x)) for x in self.scheduled]
        for xs in (self.q_access, self.q_processing, self.rate, self.arrival, self.served):
            out += fmt(xs)
        out += fmt(self.delta) if len(self.delta) else []
        out += [str(self.solves), self.flags]
        return out


def moving_average(series, window):
    """Trailing mean over the last ``min(window, t + 1)`` samples."""
    if window < 1:
        raise ValueError("window must be >= 1")
    x = np.asarray(series, dtype=float)
    if x.size == 0:
        return x.copy()
    c = np.cumsum(x)
    out = c.copy()
    out[window:] = c[window:] - c[:-window]
    counts = np.minimum(np.arange(1, x.size + 1), window)
    return out / counts


def little_delay(total_backlog, total_arrival):
    """Mean end-to-end delay in slots, or ``None`` when nothing arrives."""
    arr = float(np.mean(total_arrival)) if len(total_arrival) else 0.0
    if arr <= 0:
        return None
    return float(np.mean(total_backlog)) / arr


def annualize(mean_cost, slot_ms=1.0, bst_scale=1e3):
    """Convert cents/slot into currency/year for ``bst_scale`` BSTs (cents -> units / 100)."""
    if slot_ms <= 0:
        raise ValueError("slot duration must be positive")
    slots_per_year = SECONDS_PER_YEAR * (1000.0 / slot_ms)
    return mean_cost * slots_per_year * bst_scale / 100.0
