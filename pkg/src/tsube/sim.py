"""Slot-by-slot simulation loop, CSV traces and run summaries.

Each stochastic source has its own generator seeded with ``[seed, tag]`` so the
channel, arrival and harvest sequences are identical across algorithms and do
not shift when another source changes.
"""

from __future__ import annotations

import csv
import os
from collections import defaultdict

import numpy as np

from .baselines import wolpe_slot, zfbf_slot
from .controller import schedule_frame
from .energy import draw_harvest
from .errors import SolverError
from .metrics import TraceRecord, annualize, little_delay, moving_average
from .model import draw_channels
from .queueing import QueueState, draw_arrivals, served, step_access, step_processing
from .slot_solver import PerSlotProblem, cone_program, tsube_slot

CHANNEL_TAG, ARRIVAL_TAG, HARVEST_TAG = 0x0C4A, 0x0A22, 0x0E4B

SLOT_ALGORITHMS = {"tsube": tsube_slot, "wolpe": wolpe_slot, "zfbf": zfbf_slot}


class SimulationError(RuntimeError):
    def __init__(self, slot, cause, dump_path=None):
        self.slot = slot
        self.dump_path = dump_path
        where = f" (problem written to {dump_path})" if dump_path else ""
        super().__init__(f"slot {slot}: {cause}{where}")


def streams(seed):
    return tuple(np.random.default_rng([int(seed), tag]) for tag in (CHANNEL_TAG, ARRIVAL_TAG, HARVEST_TAG))


def simulate(config, algorithm=None, V=None, seed=None, num_slots=None, on_slot=None, dump_dir=None):
    """Yield one :class:`TraceRecord` per slot.

    ``on_slot(t, problem, decision)`` is called after every slot decision,
    which lets tests inspect beams without persisting them.
    """
    algorithm = (algorithm or config.algorithm).lower()
    slot_fn = SLOT_ALGORITHMS[algorithm]
    V = config.control.V if V is None else float(V)
    seed = config.seed if seed is None else int(seed)
    num_slots = config.num_slots if num_slots is None else int(num_slots)
    topo, traffic, T = config.topology, config.traffic, config.control.T
    rng_ch, rng_arr, rng_h = streams(seed)
    state = QueueState.empty(topo.num_ues)
    for t in range(num_slots):
        frame, pos = divmod(t, T)
        if pos == 0:
            harvest = draw_harvest(config.harvest_mean, rng_h, T) / T
            qa_k, qu_k = state.q_access.copy(), state.q_processing.copy()
            schedule = schedule_frame(qa_k, qu_k)
        channel = draw_channels(topo, rng_ch, t)
        arrival = draw_arrivals(traffic, rng_arr)
        problem = PerSlotProblem(
            topo, channel, schedule, state.q_access, qa_k, qu_k, harvest, config.prices, V
        )
        try:
            decision = slot_fn(problem)
        except SolverError as exc:
            dump = None
            if dump_dir is not None:
                dump = os.path.join(dump_dir, f"slot{t}.cone")
                cone_program(problem, 1.0).dump(dump)
            raise SimulationError(t, exc, dump) from exc
        if on_slot is not None:
            on_slot(t, problem, decision)
        out = served(state.q_processing, traffic.processing_rate)
        yield TraceRecord(
            slot=t, frame=frame, algorithm=algorithm, seed=seed, V=V, phi=decision.phi,
            grid_cost=decision.grid_cost, bst_power=decision.bst_power, harvest=harvest,
            scheduled=schedule.indicator, q_access=state.q_access, q_processing=state.q_processing,
            rate=decision.rates, arrival=arrival, served=out, delta=decision.exchange.flow,
            solves=decision.solves, flags="|".join(decision.flags),
        )
        state = QueueState(
            q_access=np.asarray(step_access(state.q_access, decision.rates, arrival)),
            q_processing=np.asarray(
                step_processing(state.q_processing, traffic.processing_rate, decision.rates)
            ),
            slot=t + 1,
        )


def write_trace(records, topology, path):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TraceRecord.header(topology))
        for rec in records:
            w.writerow(rec.row())
    return path


def run(config, out=None, **kwargs):
    """Simulate and write the trace CSV; returns the output path."""
    path = out or config.output
    dump_dir = os.path.dirname(os.path.abspath(path))
    return write_trace(simulate(config, dump_dir=dump_dir, **kwargs), config.topology, path)


# ---------------------------------------------------------------------------
# summaries

REQUIRED = ("slot", "algorithm", "seed", "V", "total_cost")


def read_trace(path):
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        rows = list(reader)
    if header is None or any(col not in header for col in REQUIRED):
        raise ValueError(f"{path}: not a trace file (missing required columns)")
    cols = {name: [r[k] for r in rows] for k, name in enumerate(header)}
    return header, cols


def _columns(header, prefix):
    return [c for c in header if c.startswith(prefix)]


def summarize_trace(path, window=10, slot_ms=1.0, bst_scale=1e3):
    header, cols = read_trace(path)
    cost = np.array(cols["total_cost"], dtype=float)
    backlog = sum(
        (np.array(cols[c], dtype=float) for c in _columns(header, "q_access_") + _columns(header, "q_processing_")),
        np.zeros(len(cost)),
    )
    arrivals = sum((np.array(cols[c], dtype=float) for c in _columns(header, "arrival_")), np.zeros(len(cost)))
    mean_cost = float(cost.mean()) if len(cost) else 0.0
    first = lambda key, cast: cast(cols[key][0]) if cols[key] else None
    return {
        "path": str(path),
        "algorithm": first("algorithm", str),
        "V": first("V", float),
        "seed": first("seed", int),
        "slots": len(cost),
        "mean_cost": mean_cost,
        "annualized": annualize(mean_cost, slot_ms, bst_scale),
        "delay": little_delay(backlog, arrivals),
        "moving_average": moving_average(cost, window),
        "header": tuple(header),
    }


def summarize(paths, window=10, slot_ms=1.0, bst_scale=1e3):
    """Per-run statistics plus mean and sample std of each metric per (algorithm, V)."""
    if not paths:
        raise ValueError("need at least one trace")
    runs = [summarize_trace(p, window, slot_ms, bst_scale) for p in paths]
    if len({r["header"] for r in runs}) != 1:
        raise ValueError("traces have different column layouts")
    groups = defaultdict(list)
    for r in runs:
        groups[(r["algorithm"], r["V"])].append(r)
    table = []
    for (alg, V), rs in sorted(groups.items(), key=lambda kv: (str(kv[0][0]), kv[0][1] or 0.0)):
        row = {"algorithm": alg, "V": V, "runs": len(rs)}
        for key in ("mean_cost", "annualized", "delay"):
            vals = np.array([r[key] for r in rs if r[key] is not None], dtype=float)
            row[key] = float(vals.mean()) if vals.size else None
            row[key + "_std"] = float(vals.std(ddof=1)) if vals.size > 1 else 0.0
        table.append(row)
    return runs, table


def format_table(table):
    lines = ["algorithm,V,runs,mean_cost,mean_cost_std,annualized,annualized_std,delay,delay_std"]
    for r in table:
        vals = [r["algorithm"], repr(r["V"]), str(r["runs"])]
        for key in ("mean_cost", "mean_cost_std", "annualized", "annualized_std", "delay", "delay_std"):
            vals.append("" if r[key] is None else repr(r[key]))
        lines.append(",".join(vals))
    return "\n".join(lines)
