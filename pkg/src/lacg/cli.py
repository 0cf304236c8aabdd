"""Command-line entry point: ``lacg --synthetic 20,4,unit --solver stabilized``."""

from __future__ import annotations

import argparse
import itertools
import json
import os
import sys

from .harness import ExperimentConfig, aggregate_speedups, median_speedups, run_grid
from .instance import InvalidConfigError, ParseError

EXIT_OK, EXIT_CONFIG, EXIT_PARTIAL = 0, 2, 3


def _synthetic(text: str):
    parts = text.split(",")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError("expected N,CAP,MODE")
    try:
        return int(parts[0]), int(parts[1]), parts[2]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="lacg", description="LA-route column generation for the CVRP.")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--instance", metavar="PATH", help="CVRPLIB .vrp file")
    src.add_argument("--synthetic", metavar="N,CAP,MODE", type=_synthetic,
                     help="random instance; MODE is 'unit' or 'uniform' (demands 1..10)")
    p.add_argument("--divisor", type=int, default=1, help="divide demands and capacity, rounding up")
    p.add_argument("--la-neighbors", type=int, nargs="+", default=[6], metavar="K")
    p.add_argument("--sri", choices=["none", "a", "b", "c"], nargs="+", default=["none"])
    p.add_argument("--rci", type=int, default=None, metavar="K", help="enable capacity cuts with K neighbours")
    p.add_argument("--solver", choices=["baseline", "stabilized"], nargs="+", default=["stabilized"])
    p.add_argument("--seed", type=int, nargs="+", default=[0], metavar="S")
    p.add_argument("--time-cap", type=float, default=None, metavar="SECS")
    p.add_argument("--no-integer", action="store_true", help="skip the final integer solve")
    p.add_argument("--out", metavar="PATH", help="report file (single run) or directory (grid)")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--dump-graphs", metavar="DIR", help="write every pricing graph as DOT")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    configs = [
        ExperimentConfig(instance_path=args.instance, synthetic=args.synthetic, divisor=args.divisor,
                         la_neighbors=k, sri=sri, rci=args.rci, solver=solver, seed=seed,
                         time_cap=args.time_cap, integer=not args.no_integer, dump_graphs=args.dump_graphs)
        for k, sri, seed, solver in itertools.product(args.la_neighbors, args.sri, args.seed, args.solver)
    ]
    if args.instance is not None and not os.path.exists(args.instance):
        print(f"error: no such instance file {args.instance}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        single = len(configs) == 1
        reports = run_grid(configs, max(1, args.workers), None if single else args.out)
    except (InvalidConfigError, ParseError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    for rep in reports:
        err = rep.get("error")
        if err and err.split(":")[0] in ("InvalidConfigError", "ParseError"):
            print(f"error: {err}", file=sys.stderr)
            return EXIT_CONFIG
    if single and args.out:
        with open(args.out, "w") as fh:
            json.dump(reports[0], fh, sort_keys=True, indent=1)
    for cfg, rep in zip(configs, reports):
        if rep.get("error"):
            print(f"{cfg.solver} seed={cfg.seed} k={cfg.la_neighbors}: FAILED {rep['error']}")
            continue
        ilp = rep["ilp_objective"]
        print(f"{cfg.solver} seed={cfg.seed} k={cfg.la_neighbors} sri={cfg.sri}: "
              f"lp={rep['lp_objective']:.6f} ilp={'-' if ilp is None else f'{ilp:.6f}'} "
              f"iterations={rep['iterations']} cuts={rep['n_cuts']} "
              f"total={rep['timings']['total']:.2f}s{' PARTIAL' if rep['partial'] else ''}")
    med = median_speedups(aggregate_speedups(configs, reports))
    if med:
        print("median speedups: " + ", ".join(f"{k}={v:.2f}" for k, v in med.items()))
    if any(rep.get("error") for rep in reports):
        return 1
    if any(rep.get("partial") for rep in reports):
        return EXIT_PARTIAL
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
