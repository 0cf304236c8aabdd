"""Experiment driver: configured runs, timing reports, grids and speedup tables."""

from __future__ import annotations

import csv
import hashlib
import json
import math
import os
import statistics
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .instance import InvalidConfigError, apply_demand_divisor, generate_synthetic, parse_cvrplib
from .la_arcs import build_la_neighbors, enumerate_arc_costs
from .lp_backend import LpModel, solve_ilp
from .master import BaselineConfig, build_rmp, solve_cg_baseline
from .pricing import PricingConfig, to_dot
from .stabilization import StabConfig, solve_master_complete

CATEGORIES = ("total", "pricing", "rmp-lp", "rmp-shortest-path", "separation", "ilp", "preprocessing")
BASELINE_TIME_CAP = 3000.0
SOLVERS = ("baseline", "stabilized")
SRI_CHOICES = ("none", "a", "b", "c")


@dataclass
class ExperimentConfig:
    """One solver run.

    Attributes:
        instance_path: CVRPLIB file, or ``None`` for a synthetic instance.
        synthetic: ``(n, capacity, demand_mode)`` for generated instances.
        divisor: Demand and capacity divisor.
        la_neighbors: LA neighbourhood size.
        sri: ``"none"``, ``"a"``, ``"b"`` or ``"c"``.
        rci: Neighbour count for capacity cuts, or ``None`` to disable them.
        solver: ``"baseline"`` or ``"stabilized"``.
        seed: Seed for instance generation and solver randomness.
        time_cap: Wall-clock cap; ``None`` means 3000 s for the baseline and
            no cap for the stabilised solver.
        integer: Also compute an integer solution over the generated columns.
        dump_graphs: Directory receiving DOT files of every pricing graph.
    """

    instance_path: str | None = None
    synthetic: tuple | None = None
    divisor: int = 1
    la_neighbors: int = 6
    sri: str = "none"
    rci: int | None = None
    solver: str = "stabilized"
    seed: int = 0
    time_cap: float | None = None
    integer: bool = True
    dump_graphs: str | None = None

    def validate(self) -> None:
        if (self.instance_path is None) == (self.synthetic is None):
            raise InvalidConfigError("give exactly one of an instance file or a synthetic spec")
        if self.synthetic is not None:
            if len(self.synthetic) != 3:
                raise InvalidConfigError("synthetic spec is (n, capacity, mode)")
            n, cap, mode = self.synthetic
            if int(n) < 1 or int(cap) < 1 or mode not in ("unit", "uniform"):
                raise InvalidConfigError(f"bad synthetic spec {self.synthetic!r}")
        if self.solver not in SOLVERS:
            raise InvalidConfigError(f"solver must be one of {SOLVERS}")
        if self.sri not in SRI_CHOICES:
            raise InvalidConfigError(f"sri must be one of {SRI_CHOICES}")
        if self.la_neighbors < 0:
            raise InvalidConfigError("la_neighbors must be >= 0")
        if self.divisor < 1:
            raise InvalidConfigError("divisor must be >= 1")
        if self.rci is not None and not 0 <= self.rci <= 10:
            raise InvalidConfigError("rci neighbour count must lie in [0, 10]")
        if self.time_cap is not None and self.time_cap <= 0:
            raise InvalidConfigError("time cap must be positive")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["synthetic"] = list(self.synthetic) if self.synthetic is not None else None
        d.pop("dump_graphs")
        return d

    def pair_key(self) -> tuple:
        """Everything except the solver: runs sharing it are compared head to head."""
        return (self.instance_path, tuple(self.synthetic) if self.synthetic else None, self.divisor,
                self.la_neighbors, self.sri, self.rci, self.seed)


@dataclass
class TimingReport:
    """Outcome of one run; ``timings`` holds the seven wall-clock categories."""

    config: dict
    instance: str
    timings: dict
    iterations: int
    lp_solves: int
    lp_objective: float
    lp_no_cuts: float
    ilp_objective: float | None
    lower_bound: float
    partial: bool
    relative_increase: float | None
    n_columns: int
    n_cuts: int
    pricing_calls: int
    dssr_iterations: int
    columns_digest: str
    round_objectives: list = field(default_factory=list)
    error: str | None = None

    def to_dict(self, timings: bool = True) -> dict:
        d = asdict(self)
        if not timings:
            d.pop("timings")
        return d

    def to_json(self, timings: bool = True) -> str:
        return json.dumps(self.to_dict(timings), sort_keys=True, indent=1)


def relative_increase(lp_no_cuts: float, lp_with_cuts: float, ilp: float, tol: float = 1e-6) -> float | None:
    """Share of the LP/ILP gap closed by cuts; ``None`` when there is no gap."""
    gap = ilp - lp_no_cuts
    if gap <= tol:
        return None
    return (lp_with_cuts - lp_no_cuts) / gap


def load_instance(cfg: ExperimentConfig):
    if cfg.instance_path is not None:
        with open(cfg.instance_path) as fh:
            inst = parse_cvrplib(fh.read())
    else:
        n, cap, mode = cfg.synthetic
        inst = generate_synthetic(int(n), int(cap), "unit" if mode == "unit" else "uniform-1-to-10", cfg.seed)
    if cfg.divisor != 1:
        inst = apply_demand_divisor(inst, cfg.divisor)
    return inst


def _digest(seqs) -> str:
    text = json.dumps(sorted(list(s) for s in seqs))
    return hashlib.sha256(text.encode()).hexdigest()[:16]


def _graph_dumper(directory: str):
    os.makedirs(directory, exist_ok=True)
    counter = [0]

    def hook(g):
        counter[0] += 1
        with open(os.path.join(directory, f"pricing-{counter[0]:05d}.dot"), "w") as fh:
            fh.write(to_dot(g))

    return hook


def _baseline_integer(columns, cuts, inst, arcs, time_limit):
    lp = build_rmp(columns, cuts, inst, arcs)
    model = LpModel(lp.c, lp.A, lp.senses, lp.rhs, integrality=np.ones(lp.n_vars))
    res = solve_ilp(model, time_limit)
    return None if res.x is None else float(res.objective)


def run_experiment(cfg: ExperimentConfig) -> TimingReport:
    """Run one configured solve with per-category wall-clock accounting."""
    cfg.validate()
    start = time.perf_counter()
    inst = load_instance(cfg)
    t0 = time.perf_counter()
    nbrs = build_la_neighbors(inst, cfg.la_neighbors)
    arcs = enumerate_arc_costs(inst, nbrs)
    preprocessing = time.perf_counter() - t0
    pcfg = PricingConfig(graph_hook=_graph_dumper(cfg.dump_graphs) if cfg.dump_graphs else None)
    sri = None if cfg.sri == "none" else cfg.sri
    timings = dict.fromkeys(CATEGORIES, 0.0)
    if cfg.solver == "baseline":
        cap = BASELINE_TIME_CAP if cfg.time_cap is None else cfg.time_cap
        res = solve_cg_baseline(inst, arcs, BaselineConfig(time_cap=cap, sri_option=sri, rci_neighbors=cfg.rci,
                                                           pricing=pcfg))
        ilp = None
        if cfg.integer:
            t0 = time.perf_counter()
            ilp = _baseline_integer(res.columns, res.cuts, inst, arcs, None)
            timings["ilp"] = time.perf_counter() - t0
        seqs = [r.visits for r in res.columns]
        lp_solves = res.iterations
        n_cuts = len(res.cuts)
    else:
        res = solve_master_complete(inst, arcs, StabConfig(sri_option=sri, rci_neighbors=cfg.rci, seed=cfg.seed,
                                                           time_cap=cfg.time_cap, integer=cfg.integer,
                                                           pricing=pcfg))
        ilp = res.integer.cost if res.integer is not None and math.isfinite(res.integer.cost) else None
        timings["ilp"] = res.timings["ilp"]
        timings["rmp-shortest-path"] = res.timings["rmp-shortest-path"]
        seqs = [r.visits for r in res.state.routes]
        lp_solves = res.lp_solves
        n_cuts = len(res.state.cuts)
    for k in ("pricing", "rmp-lp", "separation"):
        timings[k] = res.timings[k]
    timings["preprocessing"] = preprocessing
    timings["total"] = time.perf_counter() - start
    rounds = [float(v) for v in res.round_objectives]
    lp0 = rounds[0] if rounds else float(res.objective)
    rel = None
    if ilp is not None and n_cuts:
        rel = relative_increase(lp0, float(res.objective), ilp)
    stats = res.pricing_stats
    return TimingReport(
        config=cfg.to_dict(), instance=inst.fingerprint(), timings=timings, iterations=res.iterations,
        lp_solves=lp_solves, lp_objective=float(res.objective), lp_no_cuts=lp0, ilp_objective=ilp,
        lower_bound=float(res.lower_bound), partial=bool(res.partial), relative_increase=rel,
        n_columns=len(seqs), n_cuts=n_cuts, pricing_calls=stats.calls, dssr_iterations=stats.dssr_iterations,
        columns_digest=_digest(seqs), round_objectives=rounds)


def _run_safe(cfg: ExperimentConfig) -> dict:
    try:
        return run_experiment(cfg).to_dict()
    except Exception as exc:  # a failed run must not stop the grid
        return {"config": cfg.to_dict(), "error": f"{type(exc).__name__}: {exc}"}


def run_grid(configs: list[ExperimentConfig], workers: int = 1, out_dir: str | None = None) -> list[dict]:
    """Run every config, optionally in worker processes, and write the reports.

    Returns one report dict per config, in input order.  When ``out_dir`` is
    given each report is written to ``run-XXX.json`` and the head-to-head
    speedups to ``aggregate.csv``.
    """
    for cfg in configs:
        cfg.validate()
    if workers > 1 and len(configs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            reports = list(pool.map(_run_safe, configs))
    else:
        reports = [_run_safe(c) for c in configs]
    if out_dir:
        os.makedirs(out_dir, exist_ok=True)
        for i, rep in enumerate(reports):
            with open(os.path.join(out_dir, f"run-{i:03d}.json"), "w") as fh:
                json.dump(rep, fh, sort_keys=True, indent=1)
        write_aggregate(os.path.join(out_dir, "aggregate.csv"), aggregate_speedups(configs, reports))
    return reports


def aggregate_speedups(configs: list[ExperimentConfig], reports: list[dict]) -> list[dict]:
    """Baseline / stabilised ratios for iterations, pricing time and total time."""
    pairs: dict = {}
    for cfg, rep in zip(configs, reports):
        if rep.get("error"):
            continue
        pairs.setdefault(cfg.pair_key(), {})[cfg.solver] = rep
    rows = []
    for key, both in pairs.items():
        if set(both) != set(SOLVERS):
            continue
        b, s = both["baseline"], both["stabilized"]

        def ratio(x, y):
            return x / y if y > 0 else float("inf")

        rows.append({
            "instance": b["instance"], "la_neighbors": key[3], "sri": key[4], "rci": key[5], "seed": key[6],
            "iterations_baseline": b["iterations"], "iterations_stabilized": s["iterations"],
            "speedup_iterations": ratio(b["iterations"], s["iterations"]),
            "speedup_pricing": ratio(b["timings"]["pricing"], s["timings"]["pricing"]),
            "speedup_total": ratio(b["timings"]["total"], s["timings"]["total"]),
            "baseline_partial": b["partial"],
        })
    return rows


def write_aggregate(path: str, rows: list[dict]) -> None:
    fields = ["instance", "la_neighbors", "sri", "rci", "seed", "iterations_baseline", "iterations_stabilized",
              "speedup_iterations", "speedup_pricing", "speedup_total", "baseline_partial"]
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=fields)
        w.writeheader()
        w.writerows(rows)


def median_speedups(rows: list[dict]) -> dict:
    if not rows:
        return {}
    return {k: statistics.median(r[k] for r in rows)
            for k in ("speedup_iterations", "speedup_pricing", "speedup_total")}
