"""End-to-end acceptance criteria at the reference settings.

Every test appends one ``CRITERION n: PASS|FAIL ...`` line that the terminal
summary prints after the run.  Long simulations are cached per session so the
ordering, tradeoff and convergence criteria share the same runs.
"""

import math
import time
from functools import lru_cache

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES, make_problem
from tsube.config import default_config, load_config
from tsube.controller import drift_terms, lyapunov_value, schedule_frame
from tsube.energy import draw_harvest
from tsube.errors import InfeasibleError
from tsube.metrics import little_delay, moving_average
from tsube.model import Topology, draw_channels, interference
from tsube.oracle import FrameInputs, brute_force_slot, enumerate_schedules
from tsube.queueing import draw_arrivals
from tsube.sim import simulate
from tsube.slot_solver import f_phi, single_user_bound, solve_fixed_phi

pytestmark = pytest.mark.acceptance

V_VALUES = (0.01, 0.1, 1.0)
SEEDS = range(5)
SLOTS = 3000
TOL = 1e-6


def report(n, ok, detail, started):
    line = f"CRITERION {n}: {'PASS' if ok else 'FAIL'} ({time.perf_counter() - started:.0f}s) {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


@lru_cache(maxsize=None)
def series(algorithm, V, seed, slots=SLOTS):
    """Per-slot total cost, total backlog and total arrivals of one default-config run."""
    cfg = default_config()
    cost, backlog, arrivals = [], [], []
    for rec in simulate(cfg, algorithm=algorithm, V=V, seed=seed, num_slots=slots):
        cost.append(rec.total_cost)
        backlog.append(rec.q_access.sum() + rec.q_processing.sum())
        arrivals.append(rec.arrival.sum())
    return np.array(cost), np.array(backlog), np.array(arrivals)


def seed_mean_cost(algorithm, V):
    return float(np.mean([series(algorithm, V, s)[0].mean() for s in SEEDS]))


def seed_mean_delay(algorithm, V):
    return float(np.mean([little_delay(*series(algorithm, V, s)[1:]) for s in SEEDS]))


# ---------------------------------------------------------------------------


def slot_violations(problem, d):
    """Largest violation of each constraint family for one decision."""
    topo = problem.topology
    sched = problem.scheduled
    out = {"power": 0.0, "imag": 0.0, "active": 0.0, "ratio": 0.0, "rate": 0.0, "exchange": 0.0}
    per_bst = np.bincount(topo.ue_bst, weights=np.sum(np.abs(d.beams) ** 2, axis=1), minlength=topo.num_bsts)
    out["power"] = float(np.max(per_bst - topo.max_tx_power))  # mW above the cap
    if d.phi > 1.0 or d.phi < 0.0 or np.any(d.rates > problem.q_access):
        out["rate"] = math.inf
    # one signed flow per line: the two endpoint flows always sum to zero
    out["exchange"] = 0.0 if d.exchange.flow.ndim == 1 and d.exchange.flow.size == len(topo.edges) else math.inf
    served = sched & (problem.q_access > 0)
    if served.sum() >= 2:
        r = d.rates[served] / problem.q_access[served]
        out["ratio"] = float(np.max(np.abs(r / r[0] - 1.0))) if r[0] > 0 else float(np.max(r))
    if d.phi > 0:
        sig, intra, inter = interference(topo, problem.channel, sched, d.beams)
        for i in np.flatnonzero(served):
            resp = np.vdot(problem.channel[topo.ue_bst[i], i], d.beams[i])
            out["imag"] = max(out["imag"], abs(resp.imag) / max(abs(resp), 1e-300))
            rhs = math.sqrt(intra[i] + inter[i] + topo.noise_power[i])
            out["active"] = max(out["active"], abs(resp.real / f_phi(problem.q_access[i], d.phi) - rhs) / rhs)
    return out


def test_criterion_1_constraints_and_4_drift():
    started = time.perf_counter()
    cfg = default_config()
    worst = {}
    recs = []

    def check(t, problem, d):
        for k, v in slot_violations(problem, d).items():
            worst[k] = max(worst.get(k, 0.0), v)

    for rec in simulate(cfg, algorithm="tsube", num_slots=500, on_slot=check):
        recs.append(rec)
    ok = (
        worst["power"] <= TOL and worst["imag"] <= TOL and worst["exchange"] == 0.0
        and worst["active"] <= 1e-5 and worst["ratio"] <= 1e-4 and worst["rate"] == 0.0
        and time.perf_counter() - started <= 300
    )
    detail = ", ".join(f"{k}={v:.2e}" for k, v in sorted(worst.items()))
    ACCEPTANCE_LINES.append(f"CRITERION 1: {'PASS' if ok else 'FAIL'} ({time.perf_counter() - started:.0f}s) 500 slots, {detail}")

    # drift identity per frame, using the realized frame-start queues of the trace
    started4 = time.perf_counter()
    T = cfg.control.T
    worst_drift = 0.0
    for k in range(len(recs) // T - 1):
        frame = recs[k * T:(k + 1) * T]
        nxt = recs[(k + 1) * T]
        terms = drift_terms(
            frame[0].q_access, frame[0].q_processing,
            [r.arrival for r in frame], [r.rate for r in frame], [r.served for r in frame], frame_length=T,
        )
        realized = lyapunov_value(nxt.q_access, nxt.q_processing) - lyapunov_value(frame[0].q_access, frame[0].q_processing)
        scale = max(1.0, lyapunov_value(frame[0].q_access, frame[0].q_processing))
        worst_drift = max(worst_drift, abs(realized - terms.identity) / scale)
    ok4 = worst_drift <= 1e-9
    line4 = f"CRITERION 4: {'PASS' if ok4 else 'FAIL'} ({time.perf_counter() - started4:.0f}s) {len(recs) // T - 1} frames, max |drift - identity| / max(1, L) = {worst_drift:.2e}"
    ACCEPTANCE_LINES.append(line4)
    print(ACCEPTANCE_LINES[-2])
    print(line4)
    assert ok, ACCEPTANCE_LINES[-2]
    assert ok4, line4


TINY_SHAPES = [(1, 1, 2), (1, 2, 2), (2, 1, 2), (2, 1, 1), (1, 2, 1), (2, 2, 1)]


def tiny_instance(rng, shape):
    M, N, L = shape
    K = M * N
    topo = Topology(
        antennas=L, ues_per_bst=(N,) * M, distance=rng.uniform(60.0, 250.0, (M, K)), carrier_freq=2.1,
        noise_power=10 ** (-10.7), pa_efficiency=0.8, max_tx_power=400.0,
        baseband_power=rng.uniform(0.0, 50.0), edges=((0, 1),) if M == 2 else (), line_efficiency=0.8,
    )
    h = draw_channels(topo, rng).h
    qa = rng.uniform(0.5, 3.0, K)
    # small weights so the grid cost, not the constant rate term, dominates the objective
    p = make_problem(topo, h, q_access=qa, weights=-rng.uniform(0, 1e-8, K), harvest=rng.uniform(0, 600, M))
    return p


def test_criterion_2_oracle_equivalence():
    started = time.perf_counter()
    rng = np.random.default_rng(2024)
    worst, count = 0.0, 0
    while count < 24:
        p = tiny_instance(rng, TINY_SHAPES[count % len(TINY_SHAPES)])
        phi = float(rng.uniform(0.2, 0.9)) * single_user_bound(p)
        try:
            d = solve_fixed_phi(p, phi)
        except InfeasibleError:
            continue
        o = brute_force_slot(p, phi)
        worst = max(worst, abs(d.objective - o.objective) / abs(o.objective))
        count += 1
    elapsed = time.perf_counter() - started
    report(2, worst <= 1e-3 and elapsed <= 600, f"{count} instances, max relative gap {worst:.2e}", started)


def random_frame(rng):
    M = 2
    upb = tuple(int(x) for x in rng.integers(1, 4, M))
    cfg = load_config(None, {"topology.ues_per_bst": list(upb)})
    topo, T = cfg.topology, cfg.control.T
    K = topo.num_ues
    return FrameInputs(
        topology=topo,
        channels=[draw_channels(topo, rng).h for _ in range(T)],
        arrivals=np.array([draw_arrivals(cfg.traffic, rng) for _ in range(T)]),
        harvest=draw_harvest(cfg.harvest_mean, rng, T) / T,
        q_access=rng.uniform(0.0, 12.0, K),
        q_processing=rng.uniform(0.0, 12.0, K),
        processing_rate=cfg.traffic.processing_rate,
        prices=cfg.prices,
        V=cfg.control.V,
    )


def test_criterion_3_scheduling_optimality():
    started = time.perf_counter()
    rng = np.random.default_rng(303)
    worst, frames, losses = -math.inf, 20, 0
    for _ in range(frames):
        inp = random_frame(rng)
        rule = schedule_frame(inp.q_access, inp.q_processing).indicator
        best, best_value, values, skipped = enumerate_schedules(inp)
        assert not skipped
        gap = (values[tuple(bool(x) for x in rule)] - best_value) / abs(best_value)
        losses += gap > 1e-3
        worst = max(worst, gap)
    elapsed = time.perf_counter() - started
    report(3, worst <= 1e-3 and elapsed <= 1800, f"{frames} frames, worst relative excess of the rule {worst:.2e} ({losses} above 1e-3)", started)


def test_criterion_5_algorithm_ordering():
    started = time.perf_counter()
    ok, parts = True, []
    for V in V_VALUES:
        t, w, z = (seed_mean_cost(a, V) for a in ("tsube", "wolpe", "zfbf"))
        tw, wz, tz = (w - t) / w, (z - w) / z, (z - t) / z
        ok &= tw >= -0.01 and wz >= -0.01 and tz > 0.20
        parts.append(f"V={V}: T={t:.4e} W={w:.4e} Z={z:.4e} adv(Z)={100 * tz:.2f}%")
    report(5, ok, "; ".join(parts), started)


def test_criterion_6_tradeoff_monotonicity():
    started = time.perf_counter()
    cost = [seed_mean_cost("tsube", V) for V in V_VALUES]
    delay = [seed_mean_delay("tsube", V) for V in V_VALUES]
    ok = all(b <= a * 1.01 for a, b in zip(cost, cost[1:])) and all(b >= a * 0.99 for a, b in zip(delay, delay[1:]))
    detail = " ".join(f"V={V}: cost={c:.5e} delay={d:.4f}" for V, c, d in zip(V_VALUES, cost, delay))
    report(6, ok, detail, started)


def test_criterion_7_stability():
    started = time.perf_counter()
    _, backlog, _ = series("tsube", 1.0, 0, 5000)
    early, late = backlog[2000:3000].mean(), backlog[4000:5000].mean()
    growth = late / early - 1.0
    report(7, growth < 0.20, f"mean backlog slots 2000-3000 {early:.3f}, 4000-5000 {late:.3f}, growth {100 * growth:.2f}%", started)


def test_criterion_8_convergence():
    started = time.perf_counter()
    gaps = []
    for s in SEEDS:
        ma = moving_average(series("tsube", 0.1, s)[0], 10)
        gaps.append(abs(ma[999] - ma[2999]) / abs(ma[2999]))
    report(8, max(gaps) <= 0.15, "relative gaps per seed " + ", ".join(f"{100 * g:.2f}%" for g in gaps), started)


def test_criterion_9_zf_orthogonality():
    started = time.perf_counter()
    worst = 0.0

    def check(t, problem, d):
        nonlocal worst
        sig, intra, inter = interference(problem.topology, problem.channel, problem.scheduled, d.beams)
        for i in np.flatnonzero(problem.active if d.phi > 0 else []):
            worst = max(worst, (intra[i] + inter[i]) / sig[i])

    for _ in simulate(default_config(), algorithm="zfbf", num_slots=500, on_slot=check):
        pass
    report(9, worst <= 1e-9, f"500 slots, max interference/signal {worst:.2e}", started)


def test_criterion_10_energy_exchange():
    started = time.perf_counter()
    cfg = load_config(None, {"energy.harvest_mean_mw": [400.0, 100.0]})
    assert cfg.topology.line_efficiency[0] * cfg.prices.buy > cfg.prices.sell
    total, two_way = 0.0, 0

    def check(t, problem, d):
        nonlocal total, two_way
        # a single signed variable per line: the endpoint outputs have opposite signs by construction
        flow = d.exchange.flow
        two_way += int(flow.shape != (len(problem.topology.edges),))
        total += float(np.sum(np.abs(flow)))

    for _ in simulate(cfg, algorithm="tsube", num_slots=2000, on_slot=check):
        pass
    report(10, total > 0 and two_way == 0, f"2000 slots, total exchanged {total:.4e} mW*slot", started)
