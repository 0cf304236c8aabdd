"""Pricing over LA-routes with decremental state-space relaxation.

The pricing graph has nodes ``(u, M1, d)``: the route stands at customer ``u``
with ``d`` units of capacity left before serving ``u`` and ``M1`` is the part
of ``u``'s ng set already visited.  Edges follow LA-arcs.  Shortest paths are
found by a topological dynamic program ("Bellman-Ford") or by A* with a
heuristic taken from the graph whose ng sets are all empty.  DSSR grows the ng
sets until the priced route is elementary.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Callable, Sequence

import numpy as np

from .instance import SINK, SOURCE, Instance
from .la_arcs import (
    ArcSet,
    Neighborhoods,
    arc_reduced_costs,
    compatible_arcs,
    context_codes,
    decompose_route,
    normalize_route,
    special_indexes,
)

if TYPE_CHECKING:  # pragma: no cover
    from .master import DualSolution

EPS = 1e-6

ELEMENTARY, Q_ROUTE, KQ_ROUTE, NG_ROUTE, LA_ROUTE = "elementary", "q", "kq", "ng", "la"


class NotARouteError(ValueError):
    """Raised when a sequence is not a capacity-feasible depot-to-depot route."""


class PricingInfeasibleError(RuntimeError):
    """The sink cannot be reached (impossible on a well-formed instance)."""


# --------------------------------------------------------------------------- route classes

def _strip_depots(route: Sequence[int]) -> list[int]:
    seq = list(route)
    if not seq or seq[0] != SOURCE or seq[-1] != SINK:
        raise NotARouteError("route must start at -1 and end at -2")
    inner = seq[1:-1]
    if any(u < 0 for u in inner):
        raise NotARouteError("depot inside route")
    return inner


def classify_route(route: Sequence[int], nbrs: Neighborhoods, k_param: int,
                   inst: Instance | None = None, ng: Sequence[Sequence[int]] | None = None) -> set[str]:
    """Route classes a depot-to-depot sequence belongs to.

    Returns a subset of ``{"elementary", "q", "kq", "ng", "la"}``.  ``"q"`` is
    the repeat-after-one rule and ``"kq"`` the same rule with ``k_param``
    intermediates: a customer may reappear only after more than ``k_param``
    other visits.  ``ng`` defaults to ``nbrs.ng``.

    Raises:
        NotARouteError: Malformed or capacity-infeasible sequence.
    """
    seq = _strip_depots(route)
    if inst is not None:
        if any(u >= inst.n for u in seq):
            raise NotARouteError("unknown customer")
        if sum(inst.demand(u) for u in seq) > inst.capacity:
            raise NotARouteError("capacity exceeded")
    if any(a == b for a, b in zip(seq, seq[1:])):
        raise NotARouteError("customer repeated back to back")
    ng = nbrs.ng if ng is None else ng
    out = set()
    last_seen: dict[int, int] = {}
    pairs = []
    for k, u in enumerate(seq):
        if u in last_seen:
            pairs.append((last_seen[u], k, u))
        last_seen[u] = k
    if not pairs:
        out.add(ELEMENTARY)
    gaps = [k2 - k1 for k1, k2, _ in pairs]
    if all(g > 2 for g in gaps):
        out.add(Q_ROUTE)
    if all(g > k_param + 1 for g in gaps):
        out.add(KQ_ROUTE)
    special = special_indexes(seq, nbrs)
    if all(any(u not in ng[seq[k3]] for k3 in range(k1 + 1, k2)) for k1, k2, u in pairs):
        out.add(NG_ROUTE)
    if all(any(u not in ng[seq[k3]] for k3 in special if k1 < k3 < k2) for k1, k2, u in pairs):
        out.add(LA_ROUTE)
    return out


def is_elementary(visits: Sequence[int]) -> bool:
    return len(set(visits)) == len(visits)


def elementarize(visits: Sequence[int]) -> tuple[int, ...]:
    """Keep the first visit of every customer."""
    seen = set()
    out = []
    for u in visits:
        if u not in seen:
            seen.add(u)
            out.append(u)
    return tuple(out)


# --------------------------------------------------------------------------- offsets and heuristic

def compute_eta(arcs: ArcSet, rc: np.ndarray) -> float:
    """Smallest per-demand-unit offset making every arc edge non-negative."""
    if len(rc) == 0:
        return 0.0
    return float(-min(0.0, float(np.min(rc / arcs.demand))))


def group_min(arcs: ArcSet, rc: np.ndarray) -> np.ndarray:
    """Minimum arc reduced cost per family ``y = (u, v, d)``."""
    if arcs.n_groups == 0:
        return np.zeros(0)
    return np.minimum.reduceat(rc, arcs.y_start[:-1])


def compute_heuristic(arcs: ArcSet, rc: np.ndarray, eta: float, dominance_form: bool = True) -> np.ndarray:
    """Exact offset distance to the sink from every ``(u, {}, d)`` of the initial graph.

    Returns an ``(n, d0 + 1)`` array; entries for invalid ``d`` are ``inf``.
    """
    inst = arcs.inst
    n, d0 = inst.n, inst.capacity
    dem = inst.demands
    h = np.full((n, d0 + 1), np.inf)
    w = group_min(arcs, rc)
    yf, yv, yd = arcs.y_first, arcs.y_last_idx, arcs.y_demand
    to_sink = yv == n
    for d in range(1, d0 + 1):
        col = np.full(n, np.inf)
        if dominance_form:
            s = np.flatnonzero(to_sink & (yd <= d))
            np.minimum.at(col, yf[s], w[s] + eta * d)
        else:
            s = np.flatnonzero(to_sink & (yd == d))
            np.minimum.at(col, yf[s], w[s] + eta * yd[s])
        c = np.flatnonzero(~to_sink & (yd < d))
        if len(c):
            rest = d - yd[c]
            ok = rest >= dem[yv[c]]
            c, rest = c[ok], rest[ok]
            np.minimum.at(col, yf[c], w[c] + eta * yd[c] + h[yv[c], rest])
        col[dem > d] = np.inf
        h[:, d] = col
    return h


# --------------------------------------------------------------------------- graph

@dataclass
class EdgeBlock:
    """Out-edges shared by every node ``(u, M1, .)`` for a fixed ``u`` and ``M1``.

    Customer targets are stored with raw arc reduced costs; sink edges are
    indexed by arc demand.
    """

    v: np.ndarray
    dem: np.ndarray
    code: np.ndarray
    weight: np.ndarray
    arc: np.ndarray
    sink_weight: np.ndarray  # by demand, inf when absent
    sink_arc: np.ndarray
    sink_prefix: np.ndarray  # min over demand <= d (dominance form)
    sink_prefix_arc: np.ndarray


class PricingGraph:
    """The DSSR pricing graph for fixed duals and ng sets.

    Nodes are numbered ``offset[u] + code * (d0 + 1) + d`` with the source and
    sink appended at the end.  Edge blocks are built lazily per ``(u, M1)``.
    """

    def __init__(self, arcs: ArcSet, ng: Sequence[Sequence[int]], rc: np.ndarray, eta: float,
                 fleet_dual: float, dominance_form: bool = True, shared: dict | None = None):
        self.arcs = arcs
        # per-call cache of ng-independent data, reused across DSSR iterations
        self.shared = {} if shared is None else shared
        self.inst = arcs.inst
        self.ng = [list(m) for m in ng]
        self.rc = rc
        self.eta = float(eta)
        self.fleet_dual = float(fleet_dual)
        self.dominance_form = dominance_form
        n, d0 = self.inst.n, self.inst.capacity
        self.levels = d0 + 1
        self.ng_sizes = np.array([len(m) for m in self.ng], dtype=np.int64)
        self.n_codes = np.left_shift(1, self.ng_sizes)
        self.offset = np.concatenate([[0], np.cumsum(self.n_codes * self.levels)]).astype(np.int64)
        self.source = int(self.offset[-1])
        self.sink = self.source + 1
        self.size = self.sink + 1
        dem = self.inst.demands
        self.code_demand = []
        for u in range(n):
            cd = np.zeros(self.n_codes[u], dtype=np.int64)
            for b, w in enumerate(self.ng[u]):
                cd[(np.arange(self.n_codes[u]) >> b) & 1 == 1] += dem[w]
            self.code_demand.append(cd)
        self._blocks: dict[tuple[int, int], EdgeBlock] = {}

    # node helpers ---------------------------------------------------------
    def node(self, u: int, code: int, d: int) -> int:
        return int(self.offset[u] + code * self.levels + d)

    def decode(self, node: int) -> tuple[int, int, int]:
        u = int(np.searchsorted(self.offset, node, side="right") - 1)
        rel = node - int(self.offset[u])
        return u, rel // self.levels, rel % self.levels

    def node_valid(self, u: int, code: int, d: int) -> bool:
        return int(self.inst.demands[u]) <= d <= self.inst.capacity - int(self.code_demand[u][code])

    def valid_levels(self, u: int, code: int) -> range:
        return range(int(self.inst.demands[u]), self.inst.capacity - int(self.code_demand[u][code]) + 1)

    @property
    def n_nodes(self) -> int:
        total = 2
        for u in range(self.inst.n):
            for code in range(self.n_codes[u]):
                total += len(self.valid_levels(u, code))
        return total

    def m1_members(self, u: int, code: int) -> list[int]:
        return [w for b, w in enumerate(self.ng[u]) if code >> b & 1]

    def source_edges(self) -> list[tuple[int, int, float]]:
        """``(u, d, offset weight)`` for every edge out of the source."""
        out = []
        d0 = self.inst.capacity
        for u in range(self.inst.n):
            base = self.inst.dist(SOURCE, u) + self.fleet_dual
            if self.dominance_form:
                out.append((u, d0, base))
            else:
                for d in range(int(self.inst.demands[u]), d0 + 1):
                    out.append((u, d, base + self.eta * (d0 - d)))
        return out

    def block(self, u: int, code: int) -> EdgeBlock:
        key = (u, code)
        blk = self._blocks.get(key)
        if blk is None:
            blk = self._build_block(u, code)
            self._blocks[key] = blk
        return blk

    def _sorted_from(self, u: int) -> np.ndarray:
        """Arcs leaving ``u`` ordered by end, demand, reduced cost and index."""
        key = ("order", u)
        hit = self.shared.get(key)
        if hit is None:
            arcs = self.arcs
            idx = np.arange(arcs.first_start[u], arcs.first_start[u + 1])
            hit = idx[np.lexsort((idx, self.rc[idx], arcs.demand[idx], arcs.last_idx[idx]))]
            self.shared[key] = hit
        return hit

    def _compatible(self, u: int, m1: frozenset) -> np.ndarray:
        key = ("compat", u, m1)
        hit = self.shared.get(key)
        if hit is None:
            hit = compatible_arcs(self.arcs, u, m1, self._sorted_from(u))
            self.shared[key] = hit
        return hit

    def _build_block(self, u: int, code: int) -> EdgeBlock:
        arcs = self.arcs
        n, d0 = self.inst.n, self.inst.capacity
        m1 = frozenset(self.m1_members(u, code))
        idx = self._compatible(u, m1)
        lasts = arcs.last_idx[idx].astype(np.int64)
        dems = arcs.demand[idx].astype(np.int64)
        sink_w = np.full(d0 + 1, np.inf)
        sink_a = np.full(d0 + 1, -1, dtype=np.int64)
        s = lasts == n
        if np.any(s):
            sd, si = dems[s], idx[s]
            _, first = np.unique(sd, return_index=True)  # idx is sorted by reduced cost within a demand
            sink_w[sd[first]] = self.rc[si[first]]
            sink_a[sd[first]] = si[first]
        pre_w = sink_w.copy()
        pre_a = sink_a.copy()
        for d in range(1, d0 + 1):
            if pre_w[d - 1] <= pre_w[d]:
                pre_w[d] = pre_w[d - 1]
                pre_a[d] = pre_a[d - 1]
        c = ~s
        ci, cv, cd = idx[c], lasts[c], dems[c]
        cc = context_codes(arcs, self.ng, u, m1, ci)
        if len(ci):
            key = (cv * (d0 + 1) + cd) * (1 << max(len(m) for m in self.ng)) + cc
            _, first = np.unique(key, return_index=True)
            ci, cv, cd, cc = ci[first], cv[first], cd[first], cc[first]
        return EdgeBlock(v=cv, dem=cd, code=cc, weight=self.rc[ci], arc=ci,
                         sink_weight=sink_w, sink_arc=sink_a, sink_prefix=pre_w, sink_prefix_arc=pre_a)

    def out_edges(self, u: int, code: int, d: int, with_targets: bool = False):
        """Offset out-edges of node ``(u, code, d)``.

        Returns ``(targets, weights, arc indices)`` including the sink edge if
        any; with ``with_targets`` also the target customers (-1 for the sink)
        and target capacities.
        """
        blk = self.block(u, code)
        dem = self.inst.demands
        rest = d - blk.dem
        ok = rest >= dem[blk.v]
        tv, td = blk.v[ok], rest[ok]
        tgt = self.offset[tv] + blk.code[ok] * self.levels + td
        wts = blk.weight[ok] + self.eta * blk.dem[ok]
        arc = blk.arc[ok]
        if self.dominance_form:
            sw, sa = blk.sink_prefix[d], blk.sink_prefix_arc[d]
        else:
            sw, sa = blk.sink_weight[d], blk.sink_arc[d]
        if np.isfinite(sw):
            tgt = np.append(tgt, self.sink)
            wts = np.append(wts, sw + self.eta * d)
            arc = np.append(arc, sa)
            tv = np.append(tv, -1)
            td = np.append(td, 0)
        if with_targets:
            return tgt, wts, arc, tv, td
        return tgt, wts, arc

    def edges(self):
        """Yield every edge ``(from, to, offset weight, arc or -1)``."""
        for u, d, w in self.source_edges():
            yield self.source, self.node(u, 0, d), w, -1
        for u in range(self.inst.n):
            for code in range(self.n_codes[u]):
                for d in self.valid_levels(u, code):
                    i = self.node(u, code, d)
                    for t, w, a in zip(*self.out_edges(u, code, d)):
                        yield i, int(t), float(w), int(a)


def build_pricing_graph(arcs: ArcSet, ng: Sequence[Sequence[int]], duals: "DualSolution",
                        dominance_form: bool = True, rc: np.ndarray | None = None,
                        eta: float | None = None) -> PricingGraph:
    """Pricing graph for the given duals and ng sets."""
    if rc is None:
        rc = arc_reduced_costs(arcs, duals)
    if eta is None:
        eta = compute_eta(arcs, rc)
    return PricingGraph(arcs, ng, rc, eta, duals.fleet, dominance_form)


def to_dot(g: PricingGraph) -> str:
    """DOT rendering of a pricing graph."""

    def name(i):
        if i == g.source:
            return '"src"'
        if i == g.sink:
            return '"snk"'
        u, code, d = g.decode(i)
        m1 = ",".join(str(w) for w in g.m1_members(u, code))
        return f'"{u}|{{{m1}}}|{d}"'

    lines = ["digraph pricing {"]
    for i, j, w, a in g.edges():
        lines.append(f"  {name(i)} -> {name(j)} [label=\"{w:.4g}\" arc={a}];")
    lines.append("}")
    return "\n".join(lines) + "\n"


# --------------------------------------------------------------------------- shortest paths

@dataclass
class PathResult:
    """A source-sink path decoded into arcs and customers."""

    arcs: tuple[int, ...]
    visits: tuple[int, ...]
    offset_cost: float
    reduced_cost: float
    expansions: int = 0
    relaxations: int = 0


def _decode_path(g: PricingGraph, parent_node, parent_arc, dist) -> PathResult:
    arcs_used = []
    node = g.sink
    first = -1
    while node != g.source:
        a = int(parent_arc[node])
        p = int(parent_node[node])
        if a >= 0:
            arcs_used.append(a)
        else:
            first = g.decode(node)[0]
        node = p
    arcs_used.reverse()
    A = g.arcs
    visits = []
    for a in arcs_used:
        visits.append(int(A.first[a]))
        visits.extend(int(w) for w in A.inter[a, : A.n_inter[a]])
    assert visits and visits[0] == first
    total = float(dist[g.sink])
    return PathResult(tuple(arcs_used), tuple(visits), total,
                      total - g.eta * g.inst.capacity)


def bellman_ford_price(g: PricingGraph) -> PathResult:
    """Shortest source-sink path by a topological sweep over decreasing capacity.

    Nodes are processed by decreasing ``d``, then customer, then ng code;
    labels change only on strict improvement, which makes ties deterministic.
    """
    dist = np.full(g.size, np.inf)
    pnode = np.full(g.size, -1, dtype=np.int64)
    parc = np.full(g.size, -1, dtype=np.int64)
    dist[g.source] = 0.0
    relax = 0
    for u, d, w in g.source_edges():
        j = g.node(u, 0, d)
        relax += 1
        if w < dist[j]:
            dist[j], pnode[j], parc[j] = w, g.source, -1
    n = g.inst.n
    for d in range(g.inst.capacity, 0, -1):
        for u in range(n):
            for code in range(g.n_codes[u]):
                if not g.node_valid(u, code, d):
                    continue
                i = g.node(u, code, d)
                if not np.isfinite(dist[i]):
                    continue
                tgt, wts, arc = g.out_edges(u, code, d)
                relax += len(tgt)
                cand = dist[i] + wts
                better = cand < dist[tgt]
                if np.any(better):
                    t = tgt[better]
                    dist[t] = cand[better]
                    pnode[t] = i
                    parc[t] = arc[better]
    if not np.isfinite(dist[g.sink]):
        raise PricingInfeasibleError("sink unreachable")
    res = _decode_path(g, pnode, parc, dist)
    res.relaxations = relax
    return res


def astar_price(g: PricingGraph, h: np.ndarray, dominance: bool = True) -> PathResult:
    """A* over the offset graph using a per-``(u, d)`` heuristic.

    With ``dominance`` (dominance-form graphs only) a node ``(u, M2, d2)`` is
    not expanded once some ``(u, M1, d1)`` with ``M1 <= M2``, ``d1 >= d2`` and
    no larger cost from the source has been expanded.
    """
    dominance = dominance and g.dominance_form
    d0 = g.inst.capacity
    dist = np.full(g.size, np.inf)
    pnode = np.full(g.size, -1, dtype=np.int64)
    parc = np.full(g.size, -1, dtype=np.int64)
    closed = np.zeros(g.size, dtype=bool)
    dist[g.source] = 0.0
    heap: list[tuple[float, int, int, int, int]] = []
    relax = 0
    for u, d, w in g.source_edges():
        j = g.node(u, 0, d)
        relax += 1
        if w < dist[j]:
            dist[j], pnode[j], parc[j] = w, g.source, -1
            heapq.heappush(heap, (w + h[u, d], j, u, 0, d))
    best: dict[tuple[int, int], np.ndarray] = {}
    expansions = 0
    tol = 1e-9
    while heap:
        f, i, u, code, d = heapq.heappop(heap)
        if closed[i]:
            continue
        closed[i] = True
        if i == g.sink:
            break
        if dominance:
            plain_cost = dist[i] - g.eta * (d0 - d)
            dominated = False
            sub = code
            while True:
                arr = best.get((u, sub))
                if arr is not None and arr[d] <= plain_cost + tol:
                    dominated = True
                    break
                if sub == 0:
                    break
                sub = (sub - 1) & code
            if dominated:
                continue
            arr = best.setdefault((u, code), np.full(d0 + 1, np.inf))
            np.minimum(arr[: d + 1], plain_cost, out=arr[: d + 1])
        expansions += 1
        tgt, wts, arc, tv, td = g.out_edges(u, code, d, with_targets=True)
        relax += len(tgt)
        cand = dist[i] + wts
        better = np.flatnonzero((cand < dist[tgt]) & ~closed[tgt])
        if len(better) == 0:
            continue
        tb, cb = tgt[better], cand[better]
        dist[tb] = cb
        pnode[tb] = i
        parc[tb] = arc[better]
        vb, db = tv[better], td[better]
        fb = cb + np.where(vb >= 0, h[np.maximum(vb, 0), db], 0.0)
        codes = (tb - g.offset[np.maximum(vb, 0)]) // g.levels
        for item in zip(fb.tolist(), tb.tolist(), vb.tolist(), codes.tolist(), db.tolist()):
            heapq.heappush(heap, item)
    if not np.isfinite(dist[g.sink]):
        raise PricingInfeasibleError("sink unreachable")
    res = _decode_path(g, pnode, parc, dist)
    res.expansions = expansions
    res.relaxations = relax
    return res


# --------------------------------------------------------------------------- DSSR

@dataclass
class PricingConfig:
    """Knobs for :func:`dssr_solve`.

    Attributes:
        method: ``"astar"`` or ``"bellman-ford"``.
        dominance_form: Use the graph variant whose sink edges absorb slack capacity.
        dominance: Enable dominance pruning inside A*.
        early_exit: Return an elementarised route as soon as it prices negative.
        eps: Threshold for "negative" reduced cost.
        cross_check: Also run the other shortest-path method on every graph
            and record both values in the stats.
        max_iterations: Safety bound on DSSR iterations.
        graph_hook: Called with every pricing graph (for DOT dumps).
    """

    method: str = "astar"
    dominance_form: bool = True
    dominance: bool = True
    early_exit: bool = True
    eps: float = EPS
    cross_check: bool = False
    max_iterations: int = 100_000
    graph_hook: Callable[[PricingGraph], None] | None = None


@dataclass
class PricingStats:
    calls: int = 0
    dssr_iterations: int = 0
    expansions: int = 0
    relaxations: int = 0
    cross_checks: list = field(default_factory=list)

    def merge(self, other: "PricingStats") -> None:
        self.calls += other.calls
        self.dssr_iterations += other.dssr_iterations
        self.expansions += other.expansions
        self.relaxations += other.relaxations
        self.cross_checks.extend(other.cross_checks)


@dataclass
class LaRoute:
    """Outcome of a pricing call.

    Attributes:
        visits: Elementary customer sequence (depots omitted).
        arcs_used: LA-arc indices of ``visits``.
        reduced_cost: Reduced cost of ``visits``.
        cost: Travel cost of ``visits``.
        special_indexes: 0-based special positions of ``visits``.
        lower_bound: Reduced cost of the last LA-route priced; a lower bound
            on every elementary route's reduced cost.
        ng: ng sets at termination.
        candidates: Other elementarised routes met during DSSR that price
            below ``-eps`` (used for multi-column addition).
    """

    visits: tuple[int, ...]
    arcs_used: tuple[int, ...]
    reduced_cost: float
    cost: float
    special_indexes: tuple[int, ...]
    lower_bound: float
    ng: list[list[int]]
    stats: PricingStats
    candidates: list[tuple[tuple[int, ...], float]] = field(default_factory=list)


def route_reduced_cost_from_arcs(arcs: ArcSet, arc_ids: Sequence[int], rc: np.ndarray,
                                 fleet_dual: float) -> float:
    first = int(arcs.first[arc_ids[0]])
    return float(arcs.inst.dist(SOURCE, first) + fleet_dual + rc[list(arc_ids)].sum())


def _new_node_count(g_inst: Instance, ng: Sequence[Sequence[int]], w: int, u: int) -> int:
    d0 = g_inst.capacity
    dem = g_inst.demands
    members = list(ng[w])
    total = 0
    base = int(dem[u]) + int(dem[w])
    for code in range(1 << len(members)):
        m_dem = sum(int(dem[x]) for b, x in enumerate(members) if code >> b & 1)
        total += max(0, d0 - m_dem - base + 1)
    return total


def select_cycle(visits: Sequence[int], ng: Sequence[Sequence[int]], nbrs: Neighborhoods,
                 inst: Instance) -> tuple[int, list[int]]:
    """Pick the cycle whose ng additions create the fewest new nodes.

    Candidates are consecutive repeats ``(k1, k2)`` of a customer.  Ties go to
    the shortest cycle, then the leftmost.  Returns the repeated customer and
    the special-index customers whose ng sets receive it.
    """
    special = special_indexes(visits, nbrs)
    last: dict[int, int] = {}
    best = None
    for k2, u in enumerate(visits):
        if u in last:
            k1 = last[u]
            targets = sorted({visits[k3] for k3 in special if k1 < k3 < k2 and u not in ng[visits[k3]]})
            if targets:
                grow = sum(_new_node_count(inst, ng, w, u) for w in targets)
                key = (grow, k2 - k1, k1)
                if best is None or key < best[0]:
                    best = (key, u, targets)
        last[u] = k2
    if best is None:
        raise RuntimeError("non-elementary LA-route without a removable cycle")
    return best[1], best[2]


def dssr_solve(arcs: ArcSet, duals: "DualSolution", config: PricingConfig | None = None) -> LaRoute:
    """Lowest reduced-cost elementary route (or an improving one, with early exit).

    ng sets start empty on every call.  Each iteration prices over LA-routes;
    a non-elementary answer triggers growth of the ng sets along one cycle.
    """
    cfg = config or PricingConfig()
    inst = arcs.inst
    stats = PricingStats(calls=1)
    rc = arc_reduced_costs(arcs, duals)
    eta = compute_eta(arcs, rc)
    use_astar = cfg.method == "astar"
    if cfg.method not in ("astar", "bellman-ford"):
        raise ValueError(f"unknown pricing method {cfg.method!r}")
    h = compute_heuristic(arcs, rc, eta, cfg.dominance_form) if (use_astar or cfg.cross_check) else None
    ng: list[list[int]] = [[] for _ in range(inst.n)]
    seen: dict[tuple[int, ...], float] = {}
    shared: dict = {}

    def finish(visits, bound):
        ids = decompose_route(visits, arcs)
        red = route_reduced_cost_from_arcs(arcs, ids, rc, duals.fleet)
        extra = [(r, v) for r, v in seen.items() if r != tuple(visits)]
        return LaRoute(tuple(visits), tuple(ids), red, inst.route_cost(visits),
                       tuple(special_indexes(visits, arcs.nbrs)), bound, [list(m) for m in ng], stats,
                       extra)

    for _ in range(cfg.max_iterations):
        stats.dssr_iterations += 1
        g = PricingGraph(arcs, ng, rc, eta, duals.fleet, cfg.dominance_form, shared)
        if cfg.graph_hook is not None:
            cfg.graph_hook(g)
        if use_astar:
            res = astar_price(g, h, cfg.dominance)
            stats.expansions += res.expansions
        else:
            res = bellman_ford_price(g)
        stats.relaxations += res.relaxations
        if cfg.cross_check:
            other = bellman_ford_price(g) if use_astar else astar_price(g, h, cfg.dominance)
            if use_astar:
                stats.cross_checks.append((res.reduced_cost, other.reduced_cost, res.expansions,
                                           other.relaxations))
            else:
                stats.cross_checks.append((other.reduced_cost, res.reduced_cost, other.expansions,
                                           res.relaxations))
        bound = res.reduced_cost
        if is_elementary(res.visits):
            return finish(res.visits, bound)
        if cfg.early_exit:
            cand = normalize_route(elementarize(res.visits), arcs)
            out = finish(cand, bound)
            if out.reduced_cost < -cfg.eps or bound >= -cfg.eps:
                return out
        else:
            cand = normalize_route(elementarize(res.visits), arcs)
            red = route_reduced_cost_from_arcs(arcs, decompose_route(cand, arcs), rc, duals.fleet)
            if red < -cfg.eps:
                seen[cand] = red
        u, targets = select_cycle(res.visits, ng, arcs.nbrs, inst)
        for w in targets:
            ng[w].append(u)
    raise RuntimeError("DSSR iteration limit reached")
