"""Brute-force reference solutions for tiny instances.

``brute_force_slot`` grids the beam directions (phase fixed so the own-channel
response is real), computes for each direction tuple the smallest powers that
meet every SINR target and the best single-line exchange in closed form, and
refines the grid around the incumbent.  ``enumerate_schedules`` tries every
scheduling indicator of a frame.  Neither uses the conic solver.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .controller import FrameSchedule
from .errors import SolverError
from .queueing import step_access, step_processing


@dataclass(frozen=True)
class GridSpec:
    points_per_dim: int = 31
    budget: int = 10_000_000
    rel_tol: float = 1e-4
    max_rounds: int = 60
    chunk: int = 200_000


class OracleBudgetError(ValueError):
    pass


@dataclass
class OracleResult:
    objective: float
    cost: float
    beams: np.ndarray | None
    flow: float
    feasible: bool
    rounds: int
    history: list = field(default_factory=list)


def _directions(theta, psi):
    # unit vectors (cos t, e^{i psi} sin t); any L=2 direction up to a global phase
    return np.stack([np.cos(theta) + 0j, np.exp(1j * psi) * np.sin(theta)], axis=-1)


def _line_cost(base, beta, buy, sell, edge):
    """Best total grid cost over the flow of a single line, vectorized over rows of ``base``."""
    m, l = edge
    bm, bl = base[:, m], base[:, l]
    # candidates: no flow, and each endpoint's need driven to exactly zero
    cands = [np.zeros_like(bm)]
    cands.append(np.where(bm < 0, -bm, -bm / beta))
    cands.append(-np.where(bl < 0, -bl, -bl / beta))
    best = np.full(bm.shape, np.inf)
    best_flow = np.zeros_like(bm)
    for d in cands:
        out_m = np.maximum(d, beta * d)
        out_l = np.maximum(-d, -beta * d)
        x = base.copy()
        x[:, m] += out_m
        x[:, l] += out_l
        c = np.sum((buy - sell) * np.maximum(x, 0) + sell * x, axis=1)
        with np.errstate(invalid="ignore"):
            better = ~np.isfinite(best) | (c < best - 1e-15 * np.abs(best))
        best = np.where(better, c, best)
        best_flow = np.where(better, d, best_flow)
    return best, best_flow


def _evaluate(problem, phi, act, params):
    """Objective of every parameter row; ``inf`` where the powers are infeasible."""
    topo = problem.topology
    L = topo.antennas
    Ka = len(act)
    P = params.shape[0]
    if L == 1:
        U = np.ones((P, Ka, 1), dtype=complex)
    else:
        U = _directions(params[:, 0::2], params[:, 1::2])  # (P, Ka, 2)
    bst = topo.ue_bst[act]
    hb = problem.channel[bst][:, act, :]  # (j, i, L)
    G = np.abs(np.einsum("jil,pjl->pij", hb.conj(), U)) ** 2
    gamma = np.expm1(problem.q_access[act] * phi)
    A = -G
    idx = np.arange(Ka)
    A[:, idx, idx] = G[:, idx, idx] / gamma
    sigma2 = topo.noise_power[act]
    with np.errstate(all="ignore"):
        p = np.linalg.solve(A, np.broadcast_to(sigma2, (P, Ka))[..., None])[..., 0]
    per_bst = np.zeros((P, topo.num_bsts))
    for k, m in enumerate(bst):
        per_bst[:, m] += p[:, k]
    ok = np.all(p > 0, axis=1) & np.all(per_bst <= topo.max_tx_power * (1 + 1e-9), axis=1)
    ok &= np.all(np.isfinite(p), axis=1)
    power = per_bst / topo.pa_efficiency + topo.circuit_power
    base = power - problem.harvest
    prices = problem.prices
    if problem.allow_exchange and len(topo.edges) == 1:
        cost, flow = _line_cost(base, topo.line_efficiency[0], prices.buy, prices.sell, topo.edges[0])
    else:
        cost = np.sum((prices.buy - prices.sell) * np.maximum(base, 0) + prices.sell * base, axis=1)
        flow = np.zeros(P)
    rate_term = float(np.sum(problem.weights[problem.scheduled] * problem.q_access[problem.scheduled])) * phi
    obj = np.where(ok, problem.V * cost + rate_term, np.inf)
    return obj, cost, flow, p, U


def brute_force_slot(problem, phi, grid=GridSpec()):
    """Grid-search minimum of the slot objective at rate fraction ``phi``."""
    topo = problem.topology
    act = np.flatnonzero(problem.active) if phi > 0 else np.zeros(0, int)
    L = topo.antennas
    if L > 2 or L * len(act) > 4:
        raise ValueError("brute force supports L <= 2 and total beam dimension <= 4")
    if problem.allow_exchange and len(topo.edges) > 1:
        raise ValueError("brute force supports at most one power line")
    Ka = len(act)
    dims = 2 * Ka if L == 2 else 0
    n = grid.points_per_dim
    if n**dims > grid.budget:
        raise OracleBudgetError(f"{n}^{dims} grid points exceed the budget of {grid.budget}")
    if Ka == 0:
        params = np.zeros((1, 0))
        obj, cost, flow, _, _ = _evaluate(problem, phi, act, params)
        return OracleResult(float(obj[0]), float(cost[0]), np.zeros((topo.num_ues, L), complex), float(flow[0]), True, 0)

    lo = np.tile([0.0, -np.pi], Ka)[:dims]
    hi = np.tile([np.pi / 2, np.pi], Ka)[:dims]
    history = []
    best = (np.inf, None)
    rounds = 0
    while rounds < grid.max_rounds:
        rounds += 1
        axes = [np.linspace(a, b, n) for a, b in zip(lo, hi)]
        obj_best, row_best = np.inf, None
        total = n**dims if dims else 1
        for start in range(0, total, grid.chunk):
            ids = np.arange(start, min(total, start + grid.chunk))
            params = np.empty((len(ids), dims))
            rem = ids.copy()
            for d in range(dims - 1, -1, -1):
                params[:, d] = axes[d][rem % n]
                rem //= n
            obj = _evaluate(problem, phi, act, params)[0]
            k = int(np.argmin(obj))
            if obj[k] < obj_best:
                obj_best, row_best = float(obj[k]), params[k].copy()
        if row_best is not None and obj_best < best[0]:
            best = (obj_best, row_best)
        history.append(best[0])
        if not np.isfinite(best[0]):
            if rounds >= 2:
                break
            continue
        if dims == 0:
            break
        if len(history) >= 2 and abs(history[-2] - history[-1]) <= grid.rel_tol * max(abs(history[-1]), 1e-300) and rounds >= 3:
            break
        step = (hi - lo) / (n - 1)
        centre = best[1]
        lo = centre - 2 * step
        hi = centre + 2 * step
    if not np.isfinite(best[0]):
        return OracleResult(np.inf, np.inf, None, 0.0, False, rounds, history)
    obj, cost, flow, p, U = _evaluate(problem, phi, act, best[1][None, :])
    beams = np.zeros((topo.num_ues, L), dtype=complex)
    w = U[0] * np.sqrt(p[0])[:, None]
    resp = np.einsum("il,il->i", problem.channel[topo.ue_bst[act], act].conj(), w)
    beams[act] = w * (np.conj(resp) / np.abs(resp))[:, None]
    return OracleResult(float(obj[0]), float(cost[0]), beams, float(flow[0]), True, rounds, history)


@dataclass
class FrameInputs:
    topology: object
    channels: list  # T channel tensors
    arrivals: np.ndarray  # (T, K)
    harvest: np.ndarray  # per-slot share per BST
    q_access: np.ndarray  # frame start
    q_processing: np.ndarray
    processing_rate: object
    prices: object
    V: float


def frame_value(inputs, indicator, slot_fn):
    """Realized rate-weighted plus cost terms of one frame under ``indicator``."""
    from .slot_solver import PerSlotProblem

    sched = FrameSchedule(np.asarray(indicator, dtype=bool))
    qa, qu = inputs.q_access.copy(), inputs.q_processing.copy()
    weights = inputs.q_processing - inputs.q_access
    total = 0.0
    for h, nu in zip(inputs.channels, inputs.arrivals):
        prob = PerSlotProblem(
            inputs.topology, h, sched, qa, inputs.q_access, inputs.q_processing,
            inputs.harvest, inputs.prices, inputs.V,
        )
        dec = slot_fn(prob)
        total += float(np.sum(weights * dec.rates)) + inputs.V * dec.total_cost
        qa, qu = (
            np.asarray(step_access(qa, dec.rates, nu)),
            np.asarray(step_processing(qu, inputs.processing_rate, dec.rates)),
        )
    return total


def enumerate_schedules(inputs, slot_fn=None):
    """Try all ``2^K`` indicators; returns ``(best_indicator, best_value, values, skipped)``."""
    from .slot_solver import tsube_slot

    slot_fn = slot_fn or tsube_slot
    K = inputs.topology.num_ues
    if K > 6:
        raise ValueError("enumeration is limited to at most 6 UEs")
    values, skipped = {}, []
    for bits in itertools.product((False, True), repeat=K):
        try:
            values[bits] = frame_value(inputs, bits, slot_fn)
        except SolverError:
            skipped.append(bits)
    best = min(values, key=lambda b: (values[b], sum(b)))
    return np.array(best), values[best], values, skipped
