"""Set-cover restricted master over explicit route columns and the baseline CG driver."""

from __future__ import annotations

import csv
import time
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .instance import InvalidConfigError, Instance
from .la_arcs import ArcSet, decompose_route
from .lp_backend import GE, LE, LpModel, solve_lp

EPS = 1e-6


class MasterError(RuntimeError):
    """Raised when the master LP cannot be solved (should never happen)."""


@dataclass(frozen=True)
class Route:
    """A column: an elementary customer sequence and its LA-arc decomposition.

    Attributes:
        visits: Customers in visiting order (depots omitted).
        cost: Travel cost including both depot legs.
        arcs: Indices of the LA-arcs the route decomposes into.
    """

    visits: tuple[int, ...]
    cost: float
    arcs: tuple[int, ...]

    def coverage(self, n: int) -> np.ndarray:
        cov = np.zeros(n)
        np.add.at(cov, list(self.visits), 1.0)
        return cov

    def cut_coeff(self, cut, arcs: ArcSet) -> int:
        """Sum of the arc-level cut coefficients over the route's arcs."""
        total = 0
        for a in self.arcs:
            arc = arcs.arc(a)
            total += cut.coeff(arc.first, arc.order, arc.last)
        return int(total)

    def to_dict(self) -> dict:
        return {"visits": list(self.visits), "cost": self.cost, "arcs": list(self.arcs)}


def make_route(visits: Sequence[int], arcs: ArcSet) -> Route:
    """Route for an elementary sequence; raises ``ValueError`` if it is not LA-decomposable."""
    visits = tuple(int(u) for u in visits)
    if not visits or len(set(visits)) != len(visits):
        raise ValueError("route must be a non-empty elementary sequence")
    return Route(visits, arcs.inst.route_cost(visits), tuple(decompose_route(visits, arcs)))


@dataclass
class DualSolution:
    """Master duals in the sign convention used by pricing.

    ``cover`` holds ``pi_u >= 0``, ``fleet`` holds ``pi_0 >= 0`` (the fleet
    row's dual is ``-pi_0``), and ``cut_duals`` holds one non-negative value
    per entry of ``cuts``.
    """

    cover: np.ndarray
    fleet: float = 0.0
    cuts: list = field(default_factory=list)
    cut_duals: list = field(default_factory=list)

    @classmethod
    def zeros(cls, n: int) -> "DualSolution":
        return cls(np.zeros(n))

    def route_reduced_cost(self, route: Route, arcs: ArcSet) -> float:
        """Reduced cost of a route evaluated from its coverage and cut coefficients."""
        rc = route.cost + self.fleet - float(route.coverage(len(self.cover)) @ self.cover)
        for cut, val in zip(self.cuts, self.cut_duals):
            if val:
                rc += cut.sign * val * route.cut_coeff(cut, arcs)
        return float(rc)

    def to_dict(self) -> dict:
        return {"cover": [float(v) for v in self.cover], "fleet": float(self.fleet),
                "cuts": [c.to_dict() for c in self.cuts], "cut_duals": [float(v) for v in self.cut_duals]}


def artificial_cost(inst: Instance) -> float:
    """Cost of the feasibility column that covers every customer once."""
    return inst.n * 2.0 * max(inst.max_distance(), 1.0) * 10.0


def cut_rows_for_artificial(cuts) -> list[float]:
    """Artificial-column coefficients: zero in subset-row rows, the bound in capacity rows."""
    return [0.0 if c.sense == LE else float(c.rhs) for c in cuts]


def duals_from_rows(raw: np.ndarray, n: int, cuts) -> DualSolution:
    """Convert backend row duals (cover rows, fleet row, cut rows) into pricing signs."""
    cover = np.maximum(raw[:n], 0.0)
    fleet = max(0.0, -float(raw[n]))
    cut_duals = [max(0.0, -c.sign * float(v)) for c, v in zip(cuts, raw[n + 1 : n + 1 + len(cuts)])]
    return DualSolution(cover, fleet, list(cuts), cut_duals)


@dataclass
class RmpResult:
    theta: np.ndarray
    artificial: float
    duals: DualSolution
    objective: float


def build_rmp(columns: Sequence[Route], cuts, inst: Instance, arcs: ArcSet) -> LpModel:
    """Set-cover LP: cover rows ``>= 1``, fleet row ``<= K``, cut rows; last variable is artificial."""
    n = inst.n
    rows, cols, vals = [], [], []
    for j, r in enumerate(columns):
        for u in r.visits:
            rows.append(u)
            cols.append(j)
            vals.append(1.0)
        rows.append(n)
        cols.append(j)
        vals.append(1.0)
        for k, cut in enumerate(cuts):
            a = r.cut_coeff(cut, arcs)
            if a:
                rows.append(n + 1 + k)
                cols.append(j)
                vals.append(float(a))
    art = len(columns)
    for u in range(n):
        rows.append(u)
        cols.append(art)
        vals.append(1.0)
    for k, a in enumerate(cut_rows_for_artificial(cuts)):
        if a:
            rows.append(n + 1 + k)
            cols.append(art)
            vals.append(a)
    c = [r.cost for r in columns] + [artificial_cost(inst)]
    senses = [GE] * n + [LE] + [cut.sense for cut in cuts]
    rhs = [1.0] * n + [float(inst.fleet_bound)] + [float(cut.rhs) for cut in cuts]
    return LpModel.from_triplets(c, rows, cols, vals, senses, rhs)


def solve_rmp(columns: Sequence[Route], cuts, inst: Instance, arcs: ArcSet) -> RmpResult:
    """Solve the restricted set-cover master and return primal, duals and objective."""
    res = solve_lp(build_rmp(columns, list(cuts), inst, arcs))
    if not res.ok:
        raise MasterError(f"restricted master LP failed: {res.status} {res.message}")
    return RmpResult(res.x[:-1], float(res.x[-1]), duals_from_rows(res.duals, inst.n, list(cuts)),
                     res.objective)


def arc_flow_from_routes(columns: Sequence[Route], theta: np.ndarray) -> dict[int, float]:
    """Aggregate route weights onto the LA-arcs the routes use."""
    flow: dict[int, float] = {}
    for r, t in zip(columns, theta):
        if t > 1e-12:
            for a in r.arcs:
                flow[a] = flow.get(a, 0.0) + float(t)
    return flow


def lagrangian_bound(objective: float, n: int, min_reduced_cost: float) -> float:
    return objective + n * min(0.0, min_reduced_cost)


@dataclass
class BaselineConfig:
    """Settings of the unstabilised CG driver.

    Attributes:
        eps: Reduced-cost threshold for adding a column.
        time_cap: Wall-clock cap in seconds (``None`` for no cap).
        multi_column: Also add other negative routes met during pricing.
        sri_option: Subset-row family (``None`` for no subset-row cuts).
        rci_neighbors: Neighbour count for capacity cut candidates (``None`` disables them).
        cut_limit: Cuts added per separation round.
        max_cut_rounds: Safety bound on separation rounds.
        trace_path: Optional CSV receiving one row per CG iteration.
    """

    eps: float = EPS
    time_cap: float | None = None
    multi_column: bool = False
    sri_option: str | None = None
    rci_neighbors: int | None = None
    cut_limit: int = 30
    max_cut_rounds: int = 50
    trace_path: str | None = None
    max_iterations: int = 100_000
    pricing: object = None


@dataclass
class CgResult:
    objective: float
    columns: list[Route]
    iterations: int
    timings: dict
    lower_bound: float
    partial: bool
    theta: np.ndarray
    duals: DualSolution
    cuts: list
    round_objectives: list[float]
    trace: list[dict]
    pricing_stats: object = None


def solve_cg_baseline(inst: Instance, arcs: ArcSet, config: BaselineConfig | None = None,
                      initial: Sequence[Route] = ()) -> CgResult:
    """Classic column generation: RMP, DSSR pricing, add the best column, repeat.

    When a cut family is configured, cuts are separated on the arc flows of
    the converged master and column generation resumes after each round.
    """
    from .cuts import separate_rci, separate_sri
    from .pricing import PricingConfig, PricingStats, dssr_solve

    cfg = config or BaselineConfig()
    if cfg.sri_option not in (None, "a", "b", "c"):
        raise InvalidConfigError(f"unknown subset-row option {cfg.sri_option!r}")
    pcfg = cfg.pricing or PricingConfig(eps=cfg.eps)
    start = time.perf_counter()
    timings = {"pricing": 0.0, "rmp-lp": 0.0, "separation": 0.0}
    columns: list[Route] = list(initial)
    known = {r.visits for r in columns}
    cuts: list = []
    trace: list[dict] = []
    stats = PricingStats()
    round_objs: list[float] = []
    iterations = 0
    partial = False
    lb = -np.inf
    rmp = None

    def out_of_time():
        return cfg.time_cap is not None and time.perf_counter() - start > cfg.time_cap

    while True:
        # column generation on the current cut set
        while True:
            if out_of_time() or iterations >= cfg.max_iterations:
                partial = True
                break
            t0 = time.perf_counter()
            rmp = solve_rmp(columns, cuts, inst, arcs)
            timings["rmp-lp"] += time.perf_counter() - t0
            if trace and rmp.objective > trace[-1]["objective"] + 1e-7 and trace[-1]["cuts"] == len(cuts):
                raise MasterError("restricted master objective increased")
            t0 = time.perf_counter()
            priced = dssr_solve(arcs, rmp.duals, pcfg)
            timings["pricing"] += time.perf_counter() - t0
            stats.merge(priced.stats)
            iterations += 1
            lb = lagrangian_bound(rmp.objective, inst.n, priced.lower_bound)
            trace.append({"iteration": iterations, "objective": rmp.objective,
                          "reduced_cost": priced.reduced_cost, "lower_bound": lb,
                          "cuts": len(cuts), "time": time.perf_counter() - start})
            if priced.reduced_cost >= -cfg.eps:
                break
            new = [priced.visits]
            if cfg.multi_column:
                new += [r for r, _ in priced.candidates]
            added = 0
            for visits in new:
                if visits in known:
                    if visits == priced.visits:
                        raise MasterError(f"priced column {visits} is already in the master")
                    continue
                route = make_route(visits, arcs)
                known.add(visits)
                columns.append(route)
                added += 1
        if rmp is None:
            t0 = time.perf_counter()
            rmp = solve_rmp(columns, cuts, inst, arcs)
            timings["rmp-lp"] += time.perf_counter() - t0
        round_objs.append(rmp.objective)
        if partial or (cfg.sri_option is None and cfg.rci_neighbors is None):
            break
        if len(round_objs) > cfg.max_cut_rounds:
            break
        t0 = time.perf_counter()
        flow = arc_flow_from_routes(columns, rmp.theta)
        found = []
        if cfg.sri_option is not None:
            found += separate_sri(arcs, flow, cfg.sri_option, cfg.cut_limit, cuts)
        if cfg.rci_neighbors is not None:
            found += separate_rci(arcs, flow, cfg.rci_neighbors, cfg.cut_limit, cuts)
        timings["separation"] += time.perf_counter() - t0
        if not found:
            break
        cuts.extend(found[: cfg.cut_limit])
        rmp = None

    timings["total"] = time.perf_counter() - start
    if cfg.trace_path:
        write_trace(cfg.trace_path, trace)
    if not partial:
        lb = rmp.objective
    return CgResult(rmp.objective, columns, iterations, timings, lb, partial, rmp.theta, rmp.duals,
                    cuts, round_objs, trace, stats)


def write_trace(path: str, rows: list[dict]) -> None:
    fields = ["iteration", "objective", "reduced_cost", "lower_bound", "cuts", "time"]
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=fields)
        w.writeheader()
        w.writerows(rows)


def single_customer_routes(arcs: ArcSet) -> list[Route]:
    return [make_route((u,), arcs) for u in range(arcs.inst.n)]
