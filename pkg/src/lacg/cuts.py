"""LA subset-row and LA rounded-capacity inequalities.

Both cut families are written over LA-arcs, so their duals fold into arc
reduced costs and pricing keeps its shape.  Coefficients are pure functions of
``(arc, cut)``; the vectorised versions work on a whole :class:`ArcSet`.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .instance import InvalidConfigError, Instance
from .la_arcs import ArcSet, LaArc, build_la_neighbors

CUT_EPS = 1e-6
MAX_RCI_NEIGHBORS = 10

SRI_OPTIONS = {
    "a": ((3, 2),),
    "b": ((3, 2), (4, 3)),
    "c": ((3, 2), (5, 2), (5, 3)),
}


@dataclass(frozen=True)
class SubsetRowCut:
    """``sum_p floor(|(u + N_p) & members| / m) x_p <= floor(|members| / m)``."""

    members: tuple[int, ...]
    modulus: int

    sense = "<="
    sign = 1  # contribution of the (non-negative) dual to arc reduced costs

    def __post_init__(self):
        mem = tuple(sorted(set(int(u) for u in self.members)))
        if len(mem) != len(self.members):
            raise ValueError("subset-row members must be distinct")
        if not 2 <= self.modulus <= len(mem):
            raise ValueError("need 2 <= modulus <= |members|")
        object.__setattr__(self, "members", mem)

    @property
    def rhs(self) -> int:
        return len(self.members) // self.modulus

    def coeff(self, first: int, order: Iterable[int], last: int) -> int:
        hits = sum(1 for w in (first, *order) if w in self.members)
        return hits // self.modulus

    def arc_coeffs(self, arcs: ArcSet) -> np.ndarray:
        hits = np.isin(arcs.members, self.members).sum(axis=1)
        return hits // self.modulus

    def to_dict(self) -> dict:
        return {"type": "sri", "members": list(self.members), "modulus": self.modulus}


@dataclass(frozen=True)
class RciCut:
    """``sum_p [arc touches S][arc ends outside S] x_p >= ceil(d(S) / d0)``."""

    members: tuple[int, ...]
    bound: int

    sense = ">="
    sign = -1

    def __post_init__(self):
        object.__setattr__(self, "members", tuple(sorted(set(int(u) for u in self.members))))

    @property
    def rhs(self) -> int:
        return self.bound

    def coeff(self, first: int, order: Iterable[int], last: int) -> int:
        return rci_arc_coeff_raw(first, order, last, set(self.members))

    def arc_coeffs(self, arcs: ArcSet) -> np.ndarray:
        touch = np.isin(arcs.members, self.members).any(axis=1)
        inside = np.isin(arcs.last, self.members)
        return (touch & ~inside).astype(np.int64)

    def to_dict(self) -> dict:
        return {"type": "rci", "members": list(self.members), "bound": self.bound}


def cut_from_dict(data: Mapping):
    if data["type"] == "sri":
        return SubsetRowCut(tuple(data["members"]), int(data["modulus"]))
    return RciCut(tuple(data["members"]), int(data["bound"]))


def sri_arc_coeff(arc: LaArc, cut: SubsetRowCut) -> int:
    """Coefficient of an LA-arc in an LA subset-row cut (end customer excluded)."""
    return cut.coeff(arc.first, arc.order, arc.last)


def rci_bound(members: Iterable[int], inst: Instance) -> int:
    """Rounded vehicle lower bound ``ceil(total demand / capacity)``."""
    total = sum(inst.demand(u) for u in set(members))
    return math.ceil(total / inst.capacity) if total else 0


def rci_arc_coeff_raw(first: int, order: Iterable[int], last: int, members: set) -> int:
    touches = first in members or any(w in members for w in order)
    return int(touches and last not in members)


def rci_arc_coeff(arc: LaArc, members: Iterable[int]) -> int:
    """1 iff the arc services a member and then ends outside the set."""
    return rci_arc_coeff_raw(arc.first, arc.order, arc.last, set(members))


def _sparse_flow(flow, n_arcs: int) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(flow, Mapping):
        idx = np.array(sorted(flow), dtype=np.int64)
        val = np.array([flow[i] for i in idx], dtype=float)
    elif isinstance(flow, tuple):
        idx, val = (np.asarray(flow[0], dtype=np.int64), np.asarray(flow[1], dtype=float))
    else:
        dense = np.asarray(flow, dtype=float)
        if len(dense) != n_arcs:
            raise ValueError("dense flow must have one entry per arc")
        idx = np.flatnonzero(dense)
        val = dense[idx]
    keep = val > 1e-12
    return idx[keep], val[keep]


def _membership(sets: Sequence[tuple[int, ...]], n: int) -> np.ndarray:
    mat = np.zeros((len(sets), n), dtype=np.int32)
    for r, s in enumerate(sets):
        mat[r, list(s)] = 1
    return mat


def sri_candidates(nbrs, size: int, full: bool = False) -> list[tuple[int, ...]]:
    """Candidate member sets of one size, drawn from each ``{u} + N_u``."""
    n = nbrs.n
    if full:
        return list(itertools.combinations(range(n), size))
    seen = set()
    for u in range(n):
        pool = sorted({u, *nbrs.la[u]})
        seen.update(itertools.combinations(pool, size))
    return sorted(seen)


def separate_sri(arcs: ArcSet, flow, option: str, limit: int = 30, existing: Iterable = (),
                 full: bool = False, eps: float = CUT_EPS) -> list[SubsetRowCut]:
    """Most violated LA subset-row cuts for an arc flow.

    Args:
        arcs: Arc store.
        flow: Arc flow as a dense vector, ``{arc: value}`` or ``(idx, vals)``.
        option: ``"a"``, ``"b"`` or ``"c"``.
        limit: Maximum number of cuts returned.
        existing: Cuts already active; they are never returned again.
        full: Enumerate all member sets instead of local ones (tiny instances).
    """
    if option not in SRI_OPTIONS:
        raise InvalidConfigError(f"unknown subset-row option {option!r}")
    idx, val = _sparse_flow(flow, len(arcs))
    if len(idx) == 0 or limit <= 0:
        return []
    cover = arcs.covers(idx).astype(np.int32)
    existing = set(existing)
    found = []
    for size, mod in SRI_OPTIONS[option]:
        if size > arcs.n:
            continue
        cands = sri_candidates(arcs.nbrs, size, full)
        if not cands:
            continue
        hits = cover @ _membership(cands, arcs.n).T  # (arcs, candidates)
        lhs = val @ (hits // mod)
        viol = lhs - size // mod
        for c in np.flatnonzero(viol > eps):
            cut = SubsetRowCut(cands[c], mod)
            if cut not in existing:
                found.append((-float(viol[c]), size, mod, cands[c], cut))
    found.sort(key=lambda t: t[:4])
    return [t[4] for t in found[:limit]]


def rci_candidates(inst: Instance, k_rci: int) -> list[tuple[int, ...]]:
    """Every non-empty subset of ``{u} + (k_rci nearest of u)``, plus all customers."""
    if k_rci < 0 or k_rci > MAX_RCI_NEIGHBORS:
        raise InvalidConfigError(f"k_rci must lie in [0, {MAX_RCI_NEIGHBORS}]")
    local = build_la_neighbors(inst, k_rci)
    seen = {tuple(range(inst.n))}
    for u in range(inst.n):
        pool = sorted({u, *local.la[u]})
        for r in range(1, len(pool) + 1):
            seen.update(itertools.combinations(pool, r))
    return sorted(seen)


def la_crossings(arcs: ArcSet, flow, sets: Sequence[tuple[int, ...]]) -> np.ndarray:
    """Arc-level crossing count ``sum_p a_{S,p} x_p`` for each set."""
    idx, val = _sparse_flow(flow, len(arcs))
    if len(idx) == 0:
        return np.zeros(len(sets))
    mem = _membership(sets, arcs.n)
    touch = (arcs.covers(idx).astype(np.int32) @ mem.T) > 0
    mem_ext = np.hstack([mem, np.zeros((len(sets), 1), dtype=np.int32)])
    inside = mem_ext[:, arcs.last_idx[idx]].T > 0
    return val @ (touch & ~inside)


def edge_crossings(arcs: ArcSet, flow, sets: Sequence[tuple[int, ...]]) -> np.ndarray:
    """Edge-level count of flow leaving each set (the classical edge form)."""
    idx, val = _sparse_flow(flow, len(arcs))
    out = np.zeros(len(sets))
    member_sets = [set(s) for s in sets]
    for a, f in zip(idx, val):
        seq = [int(arcs.first[a]), *arcs.inter[a, : arcs.n_inter[a]].tolist(), int(arcs.last[a])]
        for r, s in enumerate(member_sets):
            out[r] += f * sum(1 for x, y in zip(seq, seq[1:]) if x in s and y not in s)
    return out


def separate_rci(arcs: ArcSet, flow, k_rci: int, limit: int = 30, existing: Iterable = (),
                 eps: float = CUT_EPS) -> list[RciCut]:
    """Most violated LA rounded-capacity cuts over local candidate sets."""
    inst = arcs.inst
    cands = rci_candidates(inst, k_rci)
    bounds = np.array([rci_bound(s, inst) for s in cands], dtype=float)
    lhs = la_crossings(arcs, flow, cands)
    viol = bounds - lhs
    existing = set(existing)
    found = []
    for c in np.flatnonzero(viol > eps):
        cut = RciCut(cands[c], int(bounds[c]))
        if cut not in existing:
            found.append((-float(viol[c]), cands[c], cut))
    found.sort(key=lambda t: t[:2])
    return [t[2] for t in found[:limit]]
