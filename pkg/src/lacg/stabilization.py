"""Family-of-columns stabilised master.

Every generated route ``l`` owns a strict order ``beta`` over the customers.
The LA-arcs consistent with that order define a small acyclic graph over
``(customer, remaining capacity)`` nodes whose source-sink paths are
elementary routes.  The restricted master is an arc-flow LP over the active
parts of all family graphs; it is solved by alternating the LP with one
shortest-path pass per family until no family holds a negative route.
"""

from __future__ import annotations

import hashlib
import json
import time
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .instance import SOURCE, InvalidConfigError, Instance
from .la_arcs import ArcSet, arc_reduced_costs, decompose_route
from .lp_backend import EQ, GE, LE, TIME_LIMIT, LpModel, solve_ilp, solve_lp
from .master import (
    DualSolution,
    MasterError,
    Route,
    artificial_cost,
    cut_rows_for_artificial,
    duals_from_rows,
    lagrangian_bound,
    make_route,
)

EPS = 1e-6


# --------------------------------------------------------------------------- orderings

@dataclass(frozen=True)
class Ordering:
    """Strict order over the customers; the source is first and the sink last.

    Attributes:
        sequence: Customers from first to last.
        rank: ``rank[u]`` is the position of ``u``; ``rank[n]`` stands for the sink.
        source_route: Index of the route that produced the order.
    """

    sequence: tuple[int, ...]
    rank: np.ndarray
    source_route: int = -1

    def before(self, u: int, v: int) -> bool:
        ru = -1 if u == SOURCE else self.rank[u]
        rv = len(self.sequence) if v < 0 else self.rank[v]
        return ru < rv


def ordering_from_sequence(sequence: Sequence[int], source_route: int = -1) -> Ordering:
    seq = tuple(int(u) for u in sequence)
    if sorted(seq) != list(range(len(seq))):
        raise ValueError("ordering must be a permutation of all customers")
    rank = np.empty(len(seq) + 1, dtype=np.int64)
    rank[list(seq)] = np.arange(len(seq))
    rank[-1] = len(seq)
    return Ordering(seq, rank, source_route)


def build_ordering(route: Route | Sequence[int], inst: Instance, seed=0, source_route: int = -1) -> Ordering:
    """Order the route's customers first-to-last and slot every other customer in.

    Outside customers are taken in a seeded random order.  Each goes right
    after the nearest route customer (lowest id on ties, after earlier
    followers of the same customer), unless it is strictly closer to the depot
    than to every route customer, in which case it joins the front group.
    """
    visits = tuple(route.visits) if isinstance(route, Route) else tuple(int(u) for u in route)
    if len(set(visits)) != len(visits):
        raise ValueError("ordering needs an elementary route")
    rng = np.random.default_rng(seed)
    inside = set(visits)
    outside = [u for u in range(inst.n) if u not in inside]
    outside = [outside[i] for i in rng.permutation(len(outside))]
    vis = np.asarray(visits, dtype=np.int64)
    front: list[int] = []
    followers: dict[int, list[int]] = {w: [] for w in visits}
    for u in outside:
        d = inst.distances[u, vis]
        best = float(d.min())
        if inst.dist(u, SOURCE) < best:
            front.append(u)
        else:
            followers[int(vis[d == best].min())].append(u)
    seq = front + [x for w in visits for x in (w, *followers[w])]
    return ordering_from_sequence(seq, source_route)


# --------------------------------------------------------------------------- family graphs

@dataclass
class PathPick:
    """A source-sink path of a family graph with its reduced cost."""

    reduced_cost: float
    source_edge: tuple[int, int]
    edges: list[tuple[int, int]]  # (group, d1)
    arcs: list[int]

    def visits(self, arcs: ArcSet) -> tuple[int, ...]:
        out = []
        for a in self.arcs:
            out.append(int(arcs.first[a]))
            out.extend(int(w) for w in arcs.inter[a, : arcs.n_inter[a]])
        return tuple(out)


class FamilyGraph:
    """The graph of one family and its active (restricted) part.

    Nodes are ``(u, d)`` with ``d`` the capacity left before serving ``u``.
    An edge ``(u, d1) -> (v, d1 - D)`` exists for each family ``y = (u, v, D)``
    holding at least one consistent arc; sink edges need ``d1 == D``.
    """

    def __init__(self, ordering: Ordering, arcs: ArcSet):
        self.ordering = ordering
        self.arcs = arcs
        inst = arcs.inst
        self.inst = inst
        n = inst.n
        rank = ordering.rank  # rank[n] is the sink
        rf = rank[arcs.first]
        rl = rank[arcs.last_idx]
        inter = arcs.inter
        ri = rank[np.where(inter >= 0, inter, n)]
        inner_ok = (inter < 0) | ((ri > rf[:, None]) & (ri < rl[:, None]))
        self.arc_mask = (rf < rl) & inner_ok.all(axis=1)
        self.consistent = np.flatnonzero(self.arc_mask)
        self.key = hashlib.sha256(np.packbits(self.arc_mask).tobytes()).hexdigest()
        cy = arcs.arc_y[self.consistent]
        change = np.ones(len(cy), dtype=bool)
        change[1:] = cy[1:] != cy[:-1]
        self.group_pos = np.flatnonzero(change)
        self.groups = cy[self.group_pos]
        gf = arcs.y_first[self.groups]
        self.groups_from = [self.groups[gf == u] for u in range(n)]
        self.gidx_from = [np.flatnonzero(gf == u) for u in range(n)]
        gl = arcs.y_last_idx[self.groups]
        self.gidx_into = [np.flatnonzero(gl == v) for v in range(n)]
        # active sets
        self.active_source: set[tuple[int, int]] = set()
        self.active_edges: set[tuple[int, int]] = set()
        self.active_arcs: dict[int, set[int]] = {}
        self.routes: list[int] = []

    # structure ------------------------------------------------------------
    def edge_exists(self, g: int, d1: int) -> bool:
        arcs, inst = self.arcs, self.inst
        u, v, D = int(arcs.y_first[g]), int(arcs.y_last_idx[g]), int(arcs.y_demand[g])
        if not inst.demand(u) <= d1 <= inst.capacity:
            return False
        if v == inst.n:
            return d1 == D
        return d1 - D >= inst.demand(v)

    def full_edges(self):
        """Every edge of the family graph as ``(group, d1)``; source edges excluded."""
        out = []
        d0 = self.inst.capacity
        for g in self.groups:
            for d1 in range(1, d0 + 1):
                if self.edge_exists(int(g), d1):
                    out.append((int(g), d1))
        return out

    def contains_route(self, visits: Sequence[int]) -> bool:
        """True when every LA-arc of ``visits`` is consistent with the order."""
        try:
            ids = decompose_route(visits, self.arcs)
        except ValueError:
            return False
        return bool(all(self.arc_mask[a] for a in ids))

    def route_items(self, visits: Sequence[int]) -> PathPick:
        """Source edge, edges and arcs realising ``visits`` in this graph."""
        arcs = self.arcs
        ids = decompose_route(visits, arcs)
        if not all(self.arc_mask[a] for a in ids):
            raise ValueError("route is not in this family")
        total = int(sum(int(arcs.demand[a]) for a in ids))
        d = total
        edges = []
        for a in ids:
            edges.append((int(arcs.arc_y[a]), d))
            d -= int(arcs.demand[a])
        return PathPick(float("nan"), (int(visits[0]), total), edges, [int(a) for a in ids])

    def activate(self, pick: PathPick) -> bool:
        """Add a path's edges and arcs to the active sets; True if anything was new."""
        new = pick.source_edge not in self.active_source
        self.active_source.add(pick.source_edge)
        for e, a in zip(pick.edges, pick.arcs):
            if e not in self.active_edges:
                new = True
                self.active_edges.add(e)
            bucket = self.active_arcs.setdefault(e[0], set())
            if a not in bucket:
                new = True
                bucket.add(a)
        return new

    def activate_single_customer_routes(self) -> None:
        arcs = self.arcs
        for u in range(self.inst.n):
            a = arcs.find(u, -2, ())
            if a >= 0 and self.arc_mask[a]:
                du = self.inst.demand(u)
                self.activate(PathPick(float("nan"), (u, du), [(int(arcs.arc_y[a]), du)], [a]))

    def prune(self, keep: "ActiveFlow") -> None:
        """Drop inactive-flow items, keeping the generating routes' own paths."""
        src, edg, arc = keep
        self.active_source &= src
        self.active_edges &= edg
        self.active_arcs = {g: s & arc for g, s in self.active_arcs.items() if s & arc}

    # pricing --------------------------------------------------------------
    def edge_weights(self, rc: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Per consistent group: minimum arc reduced cost and the lowest-index arc attaining it."""
        vals = rc[self.consistent]
        if len(vals) == 0:
            return np.zeros(0), np.zeros(0, dtype=np.int64)
        mins = np.minimum.reduceat(vals, self.group_pos)
        counts = np.diff(np.append(self.group_pos, len(vals)))
        gid = np.repeat(np.arange(len(self.group_pos)), counts)
        hit = np.flatnonzero(vals == mins[gid])
        _, first = np.unique(gid[hit], return_index=True)
        return mins, self.consistent[hit[first]]

    def shortest_path(self, rc: np.ndarray, fleet_dual: float) -> PathPick | None:
        """Lowest reduced-cost source-sink path over the full family graph."""
        inst = self.inst
        n, d0 = inst.n, inst.capacity
        dem = inst.demands
        w, warc = self.edge_weights(rc)
        arcs = self.arcs
        gv = arcs.y_last_idx[self.groups]
        gD = arcs.y_demand[self.groups]
        src = np.array([inst.dist(SOURCE, u) + fleet_dual for u in range(n)])
        levels = np.arange(d0 + 1)
        dist = np.full((n, d0 + 1), np.inf)
        for u in range(n):
            dist[u, dem[u]:] = src[u]
        best = np.inf
        best_end = None
        for u in self.ordering.sequence:
            gi = self.gidx_from[u]
            if len(gi) == 0:
                continue
            row = dist[u]
            sink = gv[gi] == n
            if np.any(sink):
                s = gi[sink]
                vals = row[gD[s]] + w[s]
                j = int(np.argmin(vals))
                if vals[j] < best:
                    best = float(vals[j])
                    best_end = (u, int(gD[s[j]]), int(s[j]))
            c = gi[~sink]
            if len(c) == 0:
                continue
            cand = row[None, :] + w[c][:, None]
            d2 = levels[None, :] - gD[c][:, None]
            ok = (d2 >= dem[gv[c]][:, None]) & np.isfinite(cand)
            rows = np.broadcast_to(gv[c][:, None], ok.shape)[ok]
            np.minimum.at(dist, (rows, d2[ok]), cand[ok])
        if best_end is None:
            return None
        u, d, g = best_end
        edges = [(int(self.groups[g]), d)]
        used = [int(warc[g])]
        while dist[u, d] != src[u]:
            found = False
            for g2 in self.gidx_into[u]:
                w_node = int(arcs.y_first[self.groups[g2]])
                d1 = d + int(gD[g2])
                if d1 <= d0 and dist[w_node, d1] + w[g2] == dist[u, d]:
                    edges.append((int(self.groups[g2]), d1))
                    used.append(int(warc[g2]))
                    u, d = w_node, d1
                    found = True
                    break
            if not found:
                raise RuntimeError("family shortest-path backtrack failed")
        edges.reverse()
        used.reverse()
        return PathPick(best, (u, d), edges, used)


ActiveFlow = tuple  # (source edges, edges, arcs) kept when pruning


@dataclass
class Family:
    graph: FamilyGraph
    route_ids: list[int] = field(default_factory=list)


# --------------------------------------------------------------------------- restricted master

@dataclass
class PsiLayout:
    """Variable bookkeeping for one restricted LP build."""

    owner: list  # (family index, kind, key)
    n_rows: int


@dataclass
class PsiSolution:
    objective: float
    duals: DualSolution
    arc_flow: dict[int, float]
    x: np.ndarray
    layout: list
    lp_solves: int = 0
    sp_rounds: int = 0
    artificial: float = 0.0


def build_psi_plus(families: Sequence[Family], cuts, arcs: ArcSet, integral: bool = False):
    """Arc-flow restricted master over the active parts of every family.

    Rows: cover (``>= 1``), fleet (``<= K``), cuts, then per family one
    arc/edge agreement row per group and one flow-conservation row per node.
    The last variable is the artificial column.
    """
    inst = arcs.inst
    n = inst.n
    cuts = list(cuts)
    cut_lookup = [dict(zip(*map(lambda a: a.tolist(), arcs.cut_coeffs(c)))) for c in cuts]
    rows, cols, vals, cost = [], [], [], []
    owner = []
    senses = [GE] * n + [LE] + [c.sense for c in cuts]
    rhs = [1.0] * n + [float(inst.fleet_bound)] + [float(c.rhs) for c in cuts]

    def var(c, key):
        cost.append(float(c))
        owner.append(key)
        return len(cost) - 1

    def put(r, j, v):
        rows.append(r)
        cols.append(j)
        vals.append(v)

    for f, fam in enumerate(families):
        g = fam.graph
        node_row: dict[tuple[int, int], int] = {}
        group_row: dict[int, int] = {}

        def nrow(key):
            r = node_row.get(key)
            if r is None:
                r = len(senses)
                senses.append(EQ)
                rhs.append(0.0)
                node_row[key] = r
            return r

        def grow(y):
            r = group_row.get(y)
            if r is None:
                r = len(senses)
                senses.append(EQ)
                rhs.append(0.0)
                group_row[y] = r
            return r

        for (u, d) in sorted(g.active_source):
            j = var(inst.dist(SOURCE, u), (f, "source", (u, d)))
            put(n, j, 1.0)
            put(nrow((u, d)), j, 1.0)
        for (y, d1) in sorted(g.active_edges):
            j = var(0.0, (f, "edge", (y, d1)))
            u = int(arcs.y_first[y])
            v = int(arcs.y_last_idx[y])
            put(nrow((u, d1)), j, -1.0)
            if v < n:
                put(nrow((v, d1 - int(arcs.y_demand[y]))), j, 1.0)
            put(grow(y), j, -1.0)
        for y in sorted(g.active_arcs):
            for a in sorted(g.active_arcs[y]):
                j = var(arcs.cost[a], (f, "arc", a))
                for w in arcs.members[a, : 1 + arcs.n_inter[a]]:
                    put(int(w), j, 1.0)
                for k, lk in enumerate(cut_lookup):
                    cv = lk.get(a)
                    if cv:
                        put(n + 1 + k, j, float(cv))
                put(grow(y), j, 1.0)
    art = var(artificial_cost(inst), (-1, "artificial", None))
    for u in range(n):
        put(u, art, 1.0)
    for k, a in enumerate(cut_rows_for_artificial(cuts)):
        if a:
            put(n + 1 + k, art, a)
    integrality = np.ones(len(cost)) if integral else None
    model = LpModel.from_triplets(cost, rows, cols, vals, senses, rhs, integrality=integrality)
    return model, owner


def arc_flow_of(x: np.ndarray, owner: list) -> dict[int, float]:
    flow: dict[int, float] = {}
    for v, (f, kind, key) in zip(x, owner):
        if kind == "arc" and v > 1e-12:
            flow[key] = flow.get(key, 0.0) + float(v)
    return flow


@dataclass
class StabTimers:
    lp: float = 0.0
    sp: float = 0.0


def solve_psi_plus(families: Sequence[Family], cuts, arcs: ArcSet, eps: float = EPS,
                   max_rounds: int = 100_000, prune: bool = False, timers: StabTimers | None = None,
                   routes: Sequence[Route] = ()) -> PsiSolution:
    """Solve the restricted master exactly by LP / shortest-path alternation.

    Each round solves the LP over the active sets, prices every family graph
    with the resulting duals and activates every path that prices below
    ``-eps``.  Stops when no family holds a negative path.
    """
    inst = arcs.inst
    timers = timers or StabTimers()
    cuts = list(cuts)
    lp_solves = 0
    for rnd in range(1, max_rounds + 1):
        t0 = time.perf_counter()
        model, owner = build_psi_plus(families, cuts, arcs)
        res = solve_lp(model)
        timers.lp += time.perf_counter() - t0
        lp_solves += 1
        if not res.ok:
            raise MasterError(f"stabilised master LP failed: {res.status} {res.message}")
        duals = duals_from_rows(res.duals, inst.n, cuts)
        t0 = time.perf_counter()
        rc = arc_reduced_costs(arcs, duals)
        grew = False
        for fam in families:
            pick = fam.graph.shortest_path(rc, duals.fleet)
            if pick is not None and pick.reduced_cost < -eps:
                grew |= fam.graph.activate(pick)
        timers.sp += time.perf_counter() - t0
        if not grew:
            if prune:
                _prune_families(families, res.x, owner, arcs, routes)
            return PsiSolution(res.objective, duals, arc_flow_of(res.x, owner), res.x, owner,
                               lp_solves, rnd, float(res.x[-1]))
    raise MasterError("stabilised master did not converge")


def _prune_families(families, x, owner, arcs, routes) -> None:
    keep = [(set(), set(), set()) for _ in families]
    for v, (f, kind, key) in zip(x, owner):
        if f < 0 or v <= 1e-9:
            continue
        idx = {"source": 0, "edge": 1, "arc": 2}[kind]
        keep[f][idx].add(key)
    for f, fam in enumerate(families):
        for rid in fam.route_ids:
            pick = fam.graph.route_items(routes[rid].visits)
            keep[f][0].add(pick.source_edge)
            keep[f][1].update(pick.edges)
            keep[f][2].update(pick.arcs)
        fam.graph.prune(keep[f])


# --------------------------------------------------------------------------- state and driver

@dataclass
class StabConfig:
    """Settings of the stabilised cut-and-price driver.

    Attributes:
        eps: Reduced-cost threshold shared with pricing.
        sri_option: Subset-row family or ``None``.
        rci_neighbors: Neighbour count for capacity cut candidates or ``None``.
        cut_limit: Cuts added per round.
        max_cut_rounds: Safety bound on separation rounds.
        seed: Seed for orderings and the initial route.
        time_cap: Wall-clock cap in seconds (``None`` for none).
        prune: Drop zero-flow active items after each restricted solve.
        integer: Solve the restricted master as an ILP at the end.
        ilp_time_limit: Time limit for that ILP.
        pricing: Optional pricing configuration.
    """

    eps: float = EPS
    sri_option: str | None = None
    rci_neighbors: int | None = None
    cut_limit: int = 30
    max_cut_rounds: int = 50
    seed: int = 0
    time_cap: float | None = None
    prune: bool = False
    integer: bool = False
    ilp_time_limit: float | None = None
    max_iterations: int = 100_000
    pricing: object = None


@dataclass
class StabState:
    """Families, generated routes, active cuts and the last restricted solution."""

    inst: Instance
    arcs: ArcSet
    seed: int = 0
    families: list[Family] = field(default_factory=list)
    routes: list[Route] = field(default_factory=list)
    cuts: list = field(default_factory=list)
    last: PsiSolution | None = None

    def add_route(self, visits: Sequence[int], single_customer: bool = False) -> int:
        """Register a route and attach it to a new or an identical existing family."""
        route = make_route(visits, self.arcs)
        rid = len(self.routes)
        self.routes.append(route)
        order = build_ordering(route, self.inst, seed=[self.seed, rid], source_route=rid)
        graph = FamilyGraph(order, self.arcs)
        fam = next((f for f in self.families if f.graph.key == graph.key), None)
        if fam is None:
            fam = Family(graph)
            self.families.append(fam)
        fam.route_ids.append(rid)
        if single_customer:
            fam.graph.activate_single_customer_routes()
        fam.graph.activate(fam.graph.route_items(route.visits))
        return rid

    def to_dict(self) -> dict:
        arcs = self.arcs

        def arc_desc(a):
            return [int(arcs.first[a]), int(arcs.last[a]), [int(w) for w in arcs.inter[a, : arcs.n_inter[a]]]]

        def group_desc(y):
            return [int(arcs.y_first[y]), int(arcs.y_last_idx[y]), int(arcs.y_demand[y])]

        fams = []
        for f in self.families:
            g = f.graph
            fams.append({
                "ordering": list(g.ordering.sequence),
                "routes": list(f.route_ids),
                "source_edges": sorted([list(e) for e in g.active_source]),
                "edges": sorted([group_desc(y) + [d] for y, d in g.active_edges]),
                "arcs": sorted([arc_desc(a) for s in g.active_arcs.values() for a in s]),
            })
        return {
            "instance": self.inst.fingerprint(),
            "seed": self.seed,
            "routes": [r.to_dict() for r in self.routes],
            "cuts": [c.to_dict() for c in self.cuts],
            "families": fams,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_json(cls, text: str, inst: Instance, arcs: ArcSet) -> "StabState":
        from .cuts import cut_from_dict

        data = json.loads(text)
        if data["instance"] != inst.fingerprint():
            raise InvalidConfigError("snapshot belongs to a different instance")
        st = cls(inst, arcs, data["seed"])
        st.routes = [make_route(r["visits"], arcs) for r in data["routes"]]
        st.cuts = [cut_from_dict(c) for c in data["cuts"]]
        group_of = {(int(arcs.y_first[y]), int(arcs.y_last_idx[y]), int(arcs.y_demand[y])): y
                    for y in range(arcs.n_groups)}
        for fd in data["families"]:
            order = ordering_from_sequence(fd["ordering"], fd["routes"][0] if fd["routes"] else -1)
            g = FamilyGraph(order, arcs)
            g.active_source = {tuple(e) for e in fd["source_edges"]}
            g.active_edges = {(group_of[tuple(e[:3])], e[3]) for e in fd["edges"]}
            for first, last, inter in fd["arcs"]:
                a = arcs.find(first, last, inter)
                g.active_arcs.setdefault(int(arcs.arc_y[a]), set()).add(a)
            st.families.append(Family(g, list(fd["routes"])))
        return st


def initial_route(inst: Instance, seed) -> tuple[int, ...]:
    """Greedy capacity-feasible prefix of a seeded shuffle of the customers."""
    rng = np.random.default_rng(seed)
    out, load = [], 0
    for u in rng.permutation(inst.n):
        if load + inst.demand(int(u)) > inst.capacity:
            break
        out.append(int(u))
        load += inst.demand(int(u))
    return tuple(out)


@dataclass
class IntegerSolution:
    routes: list[Route]
    cost: float
    status: str
    uses_artificial: bool


@dataclass
class StabResult:
    objective: float
    state: StabState
    iterations: int
    lp_solves: int
    sp_rounds: int
    timings: dict
    round_objectives: list[float]
    lower_bound: float
    partial: bool
    duals: DualSolution
    integer: IntegerSolution | None = None
    pricing_stats: object = None


def solve_master_complete(inst: Instance, arcs: ArcSet, config: StabConfig | None = None) -> StabResult:
    """Cut-and-price over the stabilised master.

    The inner loop prices routes against the restricted master's cover,
    fleet and cut duals and opens a family for every new route.  After
    convergence, violated cuts are separated on the aggregated arc flows and
    the loop restarts, until no cut is violated.
    """
    from .cuts import separate_rci, separate_sri
    from .pricing import PricingConfig, PricingStats, dssr_solve

    cfg = config or StabConfig()
    if cfg.sri_option not in (None, "a", "b", "c"):
        raise InvalidConfigError(f"unknown subset-row option {cfg.sri_option!r}")
    pcfg = cfg.pricing or PricingConfig(eps=cfg.eps)
    start = time.perf_counter()
    timers = StabTimers()
    timings = {"pricing": 0.0, "separation": 0.0, "ilp": 0.0}
    state = StabState(inst, arcs, cfg.seed)
    state.add_route(initial_route(inst, [cfg.seed, 1_000_003]), single_customer=True)
    stats = PricingStats()
    iterations = lp_solves = sp_rounds = 0
    round_objs: list[float] = []
    partial = False
    lb = -np.inf
    psi = None

    def out_of_time():
        return cfg.time_cap is not None and time.perf_counter() - start > cfg.time_cap

    while True:
        while True:
            if out_of_time() or iterations >= cfg.max_iterations:
                partial = True
                break
            psi = solve_psi_plus(state.families, state.cuts, arcs, cfg.eps, prune=cfg.prune,
                                 timers=timers, routes=state.routes)
            lp_solves += psi.lp_solves
            sp_rounds += psi.sp_rounds
            t0 = time.perf_counter()
            priced = dssr_solve(arcs, psi.duals, pcfg)
            timings["pricing"] += time.perf_counter() - t0
            stats.merge(priced.stats)
            iterations += 1
            lb = lagrangian_bound(psi.objective, inst.n, priced.lower_bound)
            if priced.reduced_cost >= -cfg.eps:
                break
            if any(r.visits == priced.visits for r in state.routes):
                raise MasterError(f"priced column {priced.visits} is already in the master")
            state.add_route(priced.visits)
        if psi is None:
            psi = solve_psi_plus(state.families, state.cuts, arcs, cfg.eps, timers=timers, routes=state.routes)
        round_objs.append(psi.objective)
        state.last = psi
        if partial or (cfg.sri_option is None and cfg.rci_neighbors is None):
            break
        if len(round_objs) > cfg.max_cut_rounds:
            break
        t0 = time.perf_counter()
        found = []
        if cfg.sri_option is not None:
            found += separate_sri(arcs, psi.arc_flow, cfg.sri_option, cfg.cut_limit, state.cuts)
        if cfg.rci_neighbors is not None:
            found += separate_rci(arcs, psi.arc_flow, cfg.rci_neighbors, cfg.cut_limit, state.cuts)
        timings["separation"] += time.perf_counter() - t0
        if not found:
            break
        state.cuts.extend(found[: cfg.cut_limit])
        psi = None
    state.last = psi
    integer = None
    if cfg.integer:
        t0 = time.perf_counter()
        integer = extract_integer_solution(state, cfg.ilp_time_limit)
        timings["ilp"] = time.perf_counter() - t0
    timings["rmp-lp"] = timers.lp
    timings["rmp-shortest-path"] = timers.sp
    timings["total"] = time.perf_counter() - start
    if not partial:
        lb = psi.objective
    return StabResult(psi.objective, state, iterations, lp_solves, sp_rounds, timings, round_objs, lb,
                      partial, psi.duals, integer, stats)


def extract_integer_solution(state: StabState, time_limit: float | None = None) -> IntegerSolution:
    """Solve the restricted master with integral flows and decode the routes."""
    arcs = state.arcs
    inst = state.inst
    model, owner = build_psi_plus(state.families, state.cuts, arcs, integral=True)
    res = solve_ilp(model, time_limit)
    if res.x is None:
        if res.status == TIME_LIMIT:
            return IntegerSolution([], float("inf"), res.status, False)
        raise MasterError(f"integer master failed: {res.status} {res.message}")
    x = np.rint(res.x).astype(np.int64)
    routes: list[Route] = []
    for f, fam in enumerate(state.families):
        src: dict = {}
        edges: dict = {}
        arcs_by_group: dict = {}
        for v, (ff, kind, key) in zip(x, owner):
            if ff != f or v <= 0:
                continue
            if kind == "source":
                src[key] = int(v)
            elif kind == "edge":
                edges[key] = int(v)
            else:
                arcs_by_group.setdefault(int(arcs.arc_y[key]), []).append([key, int(v)])
        out_of: dict = {}
        for (y, d1), v in sorted(edges.items()):
            out_of.setdefault((int(arcs.y_first[y]), d1), []).append(y)
        for (u, d), cnt in sorted(src.items()):
            for _ in range(cnt):
                seq: list[int] = []
                used: list[int] = []
                node = (u, d)
                while True:
                    y = next(yy for yy in out_of[node] if edges[(yy, node[1])] > 0)
                    edges[(y, node[1])] -= 1
                    slot = next(s for s in arcs_by_group[y] if s[1] > 0)
                    slot[1] -= 1
                    a = slot[0]
                    used.append(int(a))
                    seq.append(int(arcs.first[a]))
                    seq.extend(int(w) for w in arcs.inter[a, : arcs.n_inter[a]])
                    v = int(arcs.y_last_idx[y])
                    if v == inst.n:
                        break
                    node = (v, node[1] - int(arcs.y_demand[y]))
                if len(set(seq)) != len(seq):
                    raise MasterError("decoded family path is not elementary")
                routes.append(Route(tuple(seq), inst.route_cost(seq), tuple(used)))
    uses_art = x[-1] > 0
    routes = _drop_repeat_visits(routes, arcs)
    cost = float(res.objective) if uses_art else float(sum(r.cost for r in routes))
    return IntegerSolution(routes, cost, res.status, bool(uses_art))


def _drop_repeat_visits(routes: list[Route], arcs: ArcSet) -> list[Route]:
    # cover rows are >= 1, so the ILP may visit a customer twice; keep the first visit
    seen: set[int] = set()
    out: list[Route] = []
    for r in routes:
        keep = tuple(u for u in r.visits if u not in seen)
        seen.update(keep)
        if keep == r.visits:
            out.append(r)
        elif keep:
            out.append(make_route(keep, arcs))
    return out
