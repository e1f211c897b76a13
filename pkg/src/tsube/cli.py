"""Command-line entry point: ``tsube run`` and ``tsube summarize``."""

from __future__ import annotations

import argparse
import logging
import sys

from .config import ALGORITHMS, load_config
from .errors import ConfigError
from .sim import SimulationError, format_table, run, summarize

log = logging.getLogger("tsube")


def _parser():
    p = argparse.ArgumentParser(prog="tsube", description="Two-scale scheduling, beamforming and energy exchange simulator")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="simulate one (algorithm, V, seed) and write a CSV trace")
    r.add_argument("--config", help="YAML configuration file (defaults when omitted)")
    r.add_argument("--seed", type=int)
    r.add_argument("--slots", type=int)
    r.add_argument("--algorithm", choices=ALGORITHMS)
    r.add_argument("--v", type=float, dest="V")
    r.add_argument("--out")

    s = sub.add_parser("summarize", help="aggregate CSV traces")
    s.add_argument("--window", type=int, default=10)
    s.add_argument("--slot-ms", type=float, default=1.0)
    s.add_argument("--bst-scale", type=float, default=1e3)
    s.add_argument("paths", nargs="+")
    return p


def main(argv=None):
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        if args.command == "run":
            overrides = {}
            if args.seed is not None:
                overrides["run.seed"] = args.seed
            if args.slots is not None:
                overrides["run.num_slots"] = args.slots
            if args.algorithm is not None:
                overrides["control.algorithm"] = args.algorithm
            if args.V is not None:
                overrides["control.V"] = args.V
            if args.out is not None:
                overrides["run.output"] = args.out
            cfg = load_config(args.config, overrides)
            path = run(cfg)
            log.info("wrote %s", path)
            print(path)
        else:
            runs, table = summarize(args.paths, args.window, args.slot_ms, args.bst_scale)
            for r in runs:
                delay = "" if r["delay"] is None else f"{r['delay']:.6g}"
                log.info("%s: mean_cost=%.6g delay=%s", r["path"], r["mean_cost"], delay)
            print(format_table(table))
    except (ConfigError, SimulationError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
