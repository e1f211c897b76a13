import numpy as np
import pytest

from tsube.energy import EnergyPrices
from tsube.model import Topology


def small_topology(M=2, N=1, L=2, edges=True, psp=0.01, dist=None, rng=None):
    rng = rng or np.random.default_rng(0)
    K = M * N
    d = dist if dist is not None else rng.uniform(50.0, 150.0, (M, K))
    return Topology(
        antennas=L,
        ues_per_bst=(N,) * M,
        distance=d,
        carrier_freq=2.1,
        noise_power=1e-10,
        pa_efficiency=0.8,
        max_tx_power=400.0,
        baseband_power=psp,
        edges=tuple((m, m + 1) for m in range(M - 1)) if edges else (),
        line_efficiency=0.8,
    )


@pytest.fixture
def prices():
    return EnergyPrices(buy=1.6e-9, sell=0.6e-9)


def make_problem(topo, h, scheduled=None, q_access=None, weights=None, harvest=None, V=1.0, prices=None, exchange=True):
    """Per-slot problem with frame weights ``q_U[k] - q_A[k]`` given directly."""
    from tsube.controller import FrameSchedule
    from tsube.slot_solver import PerSlotProblem

    K = topo.num_ues
    scheduled = np.ones(K, bool) if scheduled is None else np.asarray(scheduled, bool)
    q_access = np.full(K, 2.0) if q_access is None else np.asarray(q_access, float)
    weights = np.zeros(K) if weights is None else np.asarray(weights, float)
    qa_frame = np.full(K, 10.0)
    return PerSlotProblem(
        topo, h, FrameSchedule(scheduled), q_access, qa_frame, qa_frame + weights,
        np.zeros(topo.num_bsts) if harvest is None else np.asarray(harvest, float),
        prices or EnergyPrices(1.6e-9, 0.6e-9), V, exchange,
    )


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
