"""Local-area neighbourhoods, LA-arc enumeration and cut-aware arc reduced costs.

An LA-arc starts at a customer ``u``, visits a set of intermediates drawn from
``u``'s LA neighbourhood in the cheapest order, and finishes at a customer ``v``
outside that neighbourhood (or at the sink).  All arcs are enumerated once per
instance by a subset dynamic program and stored column-wise in an
:class:`ArcSet` so that pricing can work on whole arrays.
"""

from __future__ import annotations

import hashlib
import os
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Iterable, Sequence

import numpy as np

from .instance import SINK, InvalidConfigError, Instance

if TYPE_CHECKING:  # pragma: no cover
    from .master import DualSolution

TIE_TOL = 1e-12


@dataclass
class Neighborhoods:
    """LA neighbourhoods ``N_u`` and ng sets ``M_u``.

    Attributes:
        la: ``N_u`` per customer, sorted by customer id.
        la_ranked: ``N_u`` per customer, nearest first.
        ng: ``M_u`` per customer in insertion order.
    """

    la: list[tuple[int, ...]]
    la_ranked: list[tuple[int, ...]]
    ng: list[list[int]] = field(default_factory=list)

    def __post_init__(self):
        if not self.ng:
            self.ng = [[] for _ in self.la]

    @property
    def n(self) -> int:
        return len(self.la)

    @property
    def k(self) -> int:
        return max((len(s) for s in self.la), default=0)

    def reset_ng(self) -> None:
        self.ng = [[] for _ in self.la]

    @classmethod
    def from_lists(cls, lists: Sequence[Iterable[int]]) -> "Neighborhoods":
        """Custom neighbourhoods (used for hand-built examples)."""
        ranked = [tuple(int(v) for v in s) for s in lists]
        for u, s in enumerate(ranked):
            if u in s or len(set(s)) != len(s):
                raise InvalidConfigError(f"bad neighbourhood for customer {u}")
        return cls(la=[tuple(sorted(s)) for s in ranked], la_ranked=ranked)

    def signature(self) -> str:
        return hashlib.sha256(repr(self.la).encode()).hexdigest()[:16]


def build_la_neighbors(inst: Instance, k: int) -> Neighborhoods:
    """The ``k`` spatially nearest customers of every customer.

    Distance ties are resolved towards the lower customer id.  ``k`` larger
    than ``n - 1`` is clipped.
    """
    if k < 0:
        raise InvalidConfigError("neighbour count must be >= 0")
    n = inst.n
    k = min(k, max(n - 1, 0))
    ids = np.arange(n)
    ranked = []
    for u in range(n):
        order = np.lexsort((ids, inst.distances[u, :n]))
        order = order[order != u][:k]
        ranked.append(tuple(int(v) for v in order))
    return Neighborhoods(la=[tuple(sorted(s)) for s in ranked], la_ranked=ranked)


@dataclass(frozen=True)
class LaArc:
    """One LA-arc as a plain value object."""

    index: int
    first: int
    last: int
    order: tuple[int, ...]
    cost: float
    demand: int

    @property
    def intermediates(self) -> frozenset[int]:
        return frozenset(self.order)

    @property
    def covered(self) -> tuple[int, ...]:
        """Customers serviced by the arc (the end customer is excluded)."""
        return (self.first, *self.order)


class ArcSet:
    """Column store of every LA-arc of an instance.

    Arcs are sorted by ``(first, last, demand, mask)`` so that each arc family
    ``y = (u, v, d)`` is a contiguous block.  ``last`` holds ``SINK`` (-2) for
    arcs into the depot while ``last_idx`` maps the sink to row ``n``.
    """

    def __init__(self, inst: Instance, nbrs: Neighborhoods, first, last_idx, demand, cost,
                 mask, inter):
        self.inst = inst
        self.nbrs = nbrs
        self.n = inst.n
        self.capacity = int(inst.capacity)
        order = np.lexsort((mask, demand, last_idx, first))
        self.first = np.asarray(first, dtype=np.int32)[order]
        self.last_idx = np.asarray(last_idx, dtype=np.int32)[order]
        self.last = np.where(self.last_idx == self.n, SINK, self.last_idx).astype(np.int32)
        self.demand = np.asarray(demand, dtype=np.int32)[order]
        self.cost = np.asarray(cost, dtype=float)[order]
        self.mask = np.asarray(mask, dtype=np.int64)[order]
        self.inter = np.asarray(inter, dtype=np.int32).reshape(len(order), -1)[order]
        self.n_inter = (self.inter >= 0).sum(axis=1).astype(np.int32)
        pad = np.where(self.inter >= 0, self.inter, self.n)
        self.members = np.column_stack([self.first, pad]).astype(np.int32)
        self._build_groups()
        self._key_index = None
        self._pos = None
        self._cut_cache: dict = {}

    def __len__(self) -> int:
        return len(self.first)

    def _build_groups(self):
        n_arcs = len(self.first)
        if n_arcs:
            change = np.ones(n_arcs, dtype=bool)
            change[1:] = ((self.first[1:] != self.first[:-1]) | (self.last_idx[1:] != self.last_idx[:-1])
                          | (self.demand[1:] != self.demand[:-1]))
            starts = np.flatnonzero(change)
        else:
            starts = np.zeros(0, dtype=np.int64)
        self.y_start = np.append(starts, n_arcs).astype(np.int64)
        self.y_first = self.first[starts]
        self.y_last_idx = self.last_idx[starts]
        self.y_demand = self.demand[starts]
        self.arc_y = np.repeat(np.arange(len(starts)), np.diff(self.y_start))
        self.first_start = np.searchsorted(self.first, np.arange(self.n + 1)).astype(np.int64)
        self.yfirst_start = np.searchsorted(self.y_first, np.arange(self.n + 1)).astype(np.int64)

    @property
    def n_groups(self) -> int:
        return len(self.y_first)

    def arc(self, idx: int) -> LaArc:
        idx = int(idx)
        return LaArc(
            index=idx,
            first=int(self.first[idx]),
            last=int(self.last[idx]),
            order=tuple(int(w) for w in self.inter[idx, : self.n_inter[idx]]),
            cost=float(self.cost[idx]),
            demand=int(self.demand[idx]),
        )

    def local_mask(self, u: int, customers: Iterable[int]) -> int:
        """Bitmask of ``customers`` over ``N_u`` (members outside ``N_u`` ignored)."""
        if self._pos is None:
            self._pos = [{w: i for i, w in enumerate(s)} for s in self.nbrs.la]
        pos = self._pos[u]
        m = 0
        for w in customers:
            if w in pos:
                m |= 1 << pos[w]
        return m

    def _keys(self, first, last_idx, mask):
        return (np.asarray(first, dtype=np.int64) * (self.n + 1) + last_idx) * (1 << 16) + mask

    def find(self, u: int, v: int, intermediates: Iterable[int]) -> int:
        """Index of the arc ``(u, v, intermediates)``, or -1 if it is not stored."""
        inter = set(intermediates)
        if not inter <= set(self.nbrs.la[u]):
            return -1
        if self._key_index is None:
            keys = self._keys(self.first, self.last_idx, self.mask)
            srt = np.argsort(keys, kind="stable")
            self._key_index = (keys[srt], srt)
        keys, srt = self._key_index
        vi = self.n if v < 0 else v
        key = int(self._keys(u, vi, self.local_mask(u, inter)))
        pos = np.searchsorted(keys, key)
        if pos < len(keys) and keys[pos] == key:
            return int(srt[pos])
        return -1

    def cut_coeffs(self, cut) -> tuple[np.ndarray, np.ndarray]:
        """Sparse ``(arc indices, coefficients)`` of ``cut`` over all arcs (memoised)."""
        hit = self._cut_cache.get(cut)
        if hit is None:
            dense = np.asarray(cut.arc_coeffs(self))
            idx = np.flatnonzero(dense)
            hit = (idx, dense[idx].astype(float))
            self._cut_cache[cut] = hit
        return hit

    def covers(self, idx) -> np.ndarray:
        """Boolean ``(len(idx), n)`` matrix: arc covers customer."""
        idx = np.asarray(idx, dtype=np.int64)
        out = np.zeros((len(idx), self.n + 1), dtype=bool)
        rows = np.repeat(np.arange(len(idx)), self.members.shape[1])
        out[rows, self.members[idx].ravel()] = True
        return out[:, : self.n]

    # persistence ----------------------------------------------------------
    def save(self, path: str) -> None:
        np.savez_compressed(
            path, first=self.first, last_idx=self.last_idx, demand=self.demand, cost=self.cost,
            mask=self.mask, inter=self.inter,
        )

    @classmethod
    def load(cls, path: str, inst: Instance, nbrs: Neighborhoods) -> "ArcSet":
        data = np.load(path)
        return cls(inst, nbrs, data["first"], data["last_idx"], data["demand"], data["cost"],
                   data["mask"], data["inter"])


def _popcount(masks: np.ndarray) -> np.ndarray:
    out = np.zeros(len(masks), dtype=np.int64)
    m = masks.copy()
    while np.any(m):
        out += m & 1
        m >>= 1
    return out


def _first_argmin(vals: np.ndarray, axis: int) -> tuple[np.ndarray, np.ndarray]:
    """Minimum along ``axis`` and the first index whose value ties it."""
    best = vals.min(axis=axis)
    tol = TIE_TOL * (1.0 + np.abs(np.where(np.isfinite(best), best, 0.0)))
    near = vals <= np.expand_dims(best + tol, axis)
    return best, near.argmax(axis=axis)


def _anchor_arcs(inst: Instance, u: int, local: tuple[int, ...]):
    """Subset DP for one anchor customer.

    ``h[S, w, t]`` is the cheapest way to leave local customer ``w``, visit all
    of ``S`` and finish at target column ``t``; ``pick`` stores the first
    customer of that optimum (lowest local index among ties, which yields the
    lexicographically smallest order since locals are sorted by id).
    """
    n = inst.n
    dist = inst.distances
    d0 = int(inst.capacity)
    dem = inst.demands
    k = len(local)
    L = np.asarray(local, dtype=np.int64)
    in_local = np.zeros(n + 1, dtype=bool)
    in_local[L] = True
    in_local[u] = True
    targets = np.flatnonzero(~in_local)  # customers outside N_u and the sink row n
    full = 1 << k
    masks = np.arange(full, dtype=np.int64)
    sub_dem = np.zeros(full, dtype=np.int64)
    for i in range(k):
        sub_dem[(masks >> i) & 1 == 1] += dem[L[i]]
    du = int(dem[u])
    usable = du + sub_dem <= d0
    pc = _popcount(masks)
    order = np.lexsort((masks, pc))
    T = len(targets)
    h = np.full((full, k, T), np.inf)
    pick = np.full((full, k, T), -1, dtype=np.int8)
    if k:
        h[0] = dist[np.ix_(L, targets)]
    arc_cost = np.full((full, T), np.inf)
    arc_pick = np.full((full, T), -1, dtype=np.int8)
    arc_cost[0] = dist[u, targets]
    local_d = dist[np.ix_(L, L)]
    bits = [(masks >> i) & 1 for i in range(k)]
    for S in order:
        if S == 0 or not usable[S]:
            continue
        xs = np.array([i for i in range(k) if bits[i][S]], dtype=np.int64)
        prev = S ^ (np.int64(1) << xs)
        # arc from the anchor through S
        vals = dist[u, L[xs]][:, None] + h[prev, xs]  # (|S|, T)
        best, arg = _first_argmin(vals, 0)
        arc_cost[S] = best
        arc_pick[S] = xs[arg]
        # helper table for larger sets: leave w (not in S) through S
        ws = np.array([i for i in range(k) if not bits[i][S]], dtype=np.int64)
        if len(ws) == 0 or du + sub_dem[S] + dem[L[ws]].min() > d0:
            continue
        vals = local_d[np.ix_(ws, xs)][:, :, None] + h[prev, xs][None, :, :]  # (|W|,|S|,T)
        best, arg = _first_argmin(vals, 1)
        h[S, ws] = best
        pick[S, ws] = xs[arg]

    # materialise capacity-feasible arcs
    dv = np.where(targets < n, dem[np.minimum(targets, n - 1)], 0)
    limit = np.where(targets < n, d0 - dv, d0)
    Sg, Tg = np.nonzero(np.isfinite(arc_cost) & usable[:, None])
    D = du + sub_dem[Sg]
    keep = D <= limit[Tg]
    Sg, Tg, D = Sg[keep], Tg[keep], D[keep]
    inter = np.full((len(Sg), max(k, 1)), -1, dtype=np.int64)
    cur_S = Sg.copy()
    cur_w = arc_pick[Sg, Tg].astype(np.int64)
    step = 0
    active = cur_S != 0
    while np.any(active):
        idx = np.flatnonzero(active)
        inter[idx, step] = L[cur_w[idx]]
        cur_S[idx] ^= np.int64(1) << cur_w[idx]
        nxt = pick[cur_S[idx], cur_w[idx], Tg[idx]].astype(np.int64)
        cur_w[idx] = nxt
        active = cur_S != 0
        step += 1
    # exact path length along the chosen order
    prev = np.full(len(Sg), u, dtype=np.int64)
    cost = np.zeros(len(Sg))
    for j in range(inter.shape[1]):
        col = inter[:, j]
        has = col >= 0
        cost[has] += dist[prev[has], col[has]]
        prev[has] = col[has]
    cost += dist[prev, targets[Tg]]
    return np.full(len(Sg), u), targets[Tg], D, cost, Sg, inter


def enumerate_arc_costs(inst: Instance, nbrs: Neighborhoods, cache_dir: str | None = None) -> ArcSet:
    """Enumerate every capacity-feasible LA-arc with its optimal visiting order.

    Args:
        inst: Problem instance.
        nbrs: LA neighbourhoods (ng sets are irrelevant here).
        cache_dir: Optional directory for an ``.npz`` cache keyed by the
            instance fingerprint and the neighbourhood signature.
    """
    path = None
    if cache_dir:
        path = os.path.join(cache_dir, f"arcs-{inst.fingerprint()}-{nbrs.signature()}.npz")
        if os.path.exists(path):
            return ArcSet.load(path, inst, nbrs)
    kmax = max(nbrs.k, 1)
    parts = [[] for _ in range(6)]
    for u in range(inst.n):
        res = _anchor_arcs(inst, u, nbrs.la[u])
        inter = res[5]
        if inter.shape[1] < kmax:
            inter = np.pad(inter, ((0, 0), (0, kmax - inter.shape[1])), constant_values=-1)
        for p, arr in zip(parts, (*res[:5], inter)):
            p.append(arr)
    cat = [np.concatenate(p) if p else np.zeros(0) for p in parts]
    arcs = ArcSet(inst, nbrs, cat[0], cat[1], cat[2], cat[3], cat[4], cat[5].reshape(len(cat[0]), kmax))
    if path:
        os.makedirs(cache_dir, exist_ok=True)
        arcs.save(path)
    return arcs


def special_indexes(visits: Sequence[int], nbrs: Neighborhoods) -> list[int]:
    """0-based positions of the special indexes of a customer sequence."""
    if not visits:
        return []
    out = [0]
    anchor = set(nbrs.la[visits[0]])
    for pos in range(1, len(visits)):
        if visits[pos] not in anchor:
            out.append(pos)
            anchor = set(nbrs.la[visits[pos]])
    return out


def route_segments(visits: Sequence[int], nbrs: Neighborhoods) -> list[tuple[int, int, tuple[int, ...]]]:
    """Split a route into ``(first, last, intermediates-in-visit-order)`` LA segments."""
    q = special_indexes(visits, nbrs)
    bounds = q + [len(visits)]
    segs = []
    for a, b in zip(bounds, bounds[1:]):
        last = visits[b] if b < len(visits) else SINK
        segs.append((visits[a], last, tuple(visits[a + 1 : b])))
    return segs


def decompose_route(visits: Sequence[int], arcs: ArcSet) -> list[int]:
    """Arc indices covering an elementary route's LA segments.

    Raises:
        ValueError: If a segment is not a stored arc (repeated customers
            inside a segment or a capacity violation).
    """
    out = []
    for u, v, inter in route_segments(visits, arcs.nbrs):
        if len(set(inter)) != len(inter):
            raise ValueError(f"segment from {u} repeats a customer")
        idx = arcs.find(u, v, inter)
        if idx < 0:
            raise ValueError(f"segment {u}->{inter}->{v} is not an LA-arc")
        out.append(idx)
    return out


def normalize_route(visits: Sequence[int], arcs: ArcSet) -> tuple[int, ...]:
    """Reorder each LA segment of an elementary route into its cheapest order."""
    seq: list[int] = []
    for idx in decompose_route(visits, arcs):
        seq.append(int(arcs.first[idx]))
        seq.extend(int(w) for w in arcs.inter[idx, : arcs.n_inter[idx]])
    return tuple(seq)


def arc_reduced_costs(arcs: ArcSet, duals: "DualSolution") -> np.ndarray:
    """Reduced cost of every arc: cost minus covered duals plus cut terms."""
    pi_ext = np.append(np.asarray(duals.cover, dtype=float), 0.0)
    rc = arcs.cost - pi_ext[arcs.members].sum(axis=1)
    for cut, val in zip(duals.cuts, duals.cut_duals):
        if val == 0:
            continue
        idx, coef = arcs.cut_coeffs(cut)
        rc[idx] += cut.sign * val * coef
    return rc


def arc_reduced_cost(arc: LaArc, duals: "DualSolution") -> float:
    """Reduced cost of a single arc, evaluated directly from its definition."""
    rc = arc.cost - sum(float(duals.cover[w]) for w in arc.covered)
    for cut, val in zip(duals.cuts, duals.cut_duals):
        rc += cut.sign * float(val) * cut.coeff(arc.first, arc.order, arc.last)
    return float(rc)


def compatible_arcs(arcs: ArcSet, u: int, m1: Iterable[int], idx: np.ndarray | None = None) -> np.ndarray:
    """Arcs leaving ``u`` with no intermediate and no end customer in ``M_1``."""
    m1 = set(m1)
    if idx is None:
        idx = np.arange(arcs.first_start[u], arcs.first_start[u + 1])
    if m1:
        bad = arcs.local_mask(u, m1)
        ok = (arcs.mask[idx] & bad) == 0
        ok &= ~np.isin(arcs.last_idx[idx], list(m1))
        idx = idx[ok]
    return idx


def context_codes(arcs: ArcSet, ng: Sequence[Sequence[int]], u: int, m1: Iterable[int],
                  idx: np.ndarray) -> np.ndarray:
    """Code of ``M_2 = M_v & ({u} | M_1 | N_p)`` over ``ng[v]``'s order for each arc in ``idx``."""
    m1 = set(m1)
    codes = np.zeros(len(idx), dtype=np.int64)
    if len(idx):
        lasts = arcs.last_idx[idx]
        for v in np.unique(lasts):
            if v >= arcs.n or not ng[v]:
                continue
            sel = np.flatnonzero(lasts == v)
            for bit, w in enumerate(ng[v]):
                if w == u or w in m1:
                    codes[sel] |= 1 << bit
                else:
                    lm = arcs.local_mask(u, (w,))
                    if lm:
                        codes[sel] |= ((arcs.mask[idx[sel]] & lm) != 0).astype(np.int64) << bit
    return codes


def context_assignment(arcs: ArcSet, ng: Sequence[Sequence[int]], u: int, m1: Iterable[int]):
    """Assign arcs leaving ``u`` to ng contexts for a fixed visited set ``M_1``.

    Returns the indices of arcs compatible with ``M_1`` (no intermediate and no
    end customer in ``M_1``) and, for each, the code of
    ``M_2 = M_v & ({u} | M_1 | N_p)`` as a bitmask over ``ng[v]``'s order.
    """
    m1 = set(m1)
    idx = compatible_arcs(arcs, u, m1)
    return idx, context_codes(arcs, ng, u, m1, idx)


def partition_ng_contexts(arcs: ArcSet, ng: Sequence[Sequence[int]]) -> dict:
    """Explicit ``z -> arc indices`` map for every non-empty ng context.

    Keys are ``(u, v, M1, M2, d)`` with ``M1``/``M2`` as frozensets.  Intended
    for inspection and tests; pricing uses :func:`context_assignment` lazily.
    """
    out: dict = {}
    for u in range(arcs.n):
        mu = list(ng[u])
        for code in range(1 << len(mu)):
            m1 = frozenset(w for b, w in enumerate(mu) if code >> b & 1)
            if arcs.inst.capacity - sum(arcs.inst.demand(w) for w in m1) < arcs.inst.demand(u):
                continue
            idx, codes = context_assignment(arcs, ng, u, m1)
            for a, c in zip(idx, codes):
                v = int(arcs.last[a])
                m2 = frozenset(w for b, w in enumerate(ng[v]) if c >> b & 1) if v >= 0 else frozenset()
                key = (u, v, m1, m2, int(arcs.demand[a]))
                out.setdefault(key, []).append(int(a))
    return out
