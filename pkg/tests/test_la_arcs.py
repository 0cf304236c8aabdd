import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import best_order_cost, clock_instance, dist, make_instance, random_instance, segments
from lacg.cuts import SubsetRowCut
from lacg.instance import SINK
from lacg.la_arcs import (
    ArcSet,
    Neighborhoods,
    arc_reduced_cost,
    arc_reduced_costs,
    build_la_neighbors,
    context_assignment,
    decompose_route,
    enumerate_arc_costs,
    normalize_route,
    partition_ng_contexts,
    special_indexes,
)
from lacg.master import DualSolution


def test_clock_neighbors():
    nbrs = build_la_neighbors(clock_instance(), 4)
    # u4 (id 3) -> {u2, u3, u5, u6}
    assert set(nbrs.la[3]) == {1, 2, 4, 5}
    assert all(u not in nbrs.la[u] for u in range(12))
    assert all(m == [] for m in nbrs.ng)


def test_zero_neighbors_and_clipping():
    inst = clock_instance()
    assert all(s == () for s in build_la_neighbors(inst, 0).la)
    assert all(len(s) == 11 for s in build_la_neighbors(inst, 50).la)


def test_ties_go_to_lower_id():
    # customers 1 and 2 are equidistant from customer 0
    inst = make_instance([(0, 0), (1, 0), (-1, 0), (5, 5)], [1] * 4, 4)
    nbrs = build_la_neighbors(inst, 1)
    assert nbrs.la[0] == (1,)
    mirrored = make_instance([(0, 0), (-1, 0), (1, 0), (5, 5)], [1] * 4, 4)
    assert build_la_neighbors(mirrored, 1).la[0] == (1,)


def test_base_cases():
    rng = np.random.default_rng(3)
    inst = random_instance(rng, 6, 6)
    arcs = enumerate_arc_costs(inst, build_la_neighbors(inst, 2))
    for a in range(len(arcs)):
        arc = arcs.arc(a)
        if not arc.order:
            assert arc.cost == pytest.approx(dist(inst, arc.first, arc.last))
        elif len(arc.order) == 1:
            (w,) = arc.order
            assert arc.cost == pytest.approx(dist(inst, arc.first, w) + dist(inst, w, arc.last))


def test_arc_invariants(rng):
    inst = random_instance(rng, 9, 5, max_demand=3)
    nbrs = build_la_neighbors(inst, 4)
    arcs = enumerate_arc_costs(inst, nbrs)
    for a in range(len(arcs)):
        arc = arcs.arc(a)
        assert arc.last not in nbrs.la[arc.first] and arc.last != arc.first and arc.last != -1
        assert set(arc.order) <= set(nbrs.la[arc.first])
        assert arc.demand == sum(int(inst.demands[w]) for w in arc.covered)
        limit = inst.capacity - (int(inst.demands[arc.last]) if arc.last >= 0 else 0)
        assert arc.demand <= limit
        assert arc.cost >= dist(inst, arc.first, arc.last) - 1e-12
        assert arc.cost == pytest.approx(best_order_cost(inst, arc.first, arc.order, arc.last), abs=1e-9)
        seq = [arc.first, *arc.order, arc.last]
        assert arc.cost == pytest.approx(sum(dist(inst, x, y) for x, y in zip(seq, seq[1:])), abs=1e-12)
        assert arcs.find(arc.first, arc.last, arc.order) == a


def test_lexicographic_tie_break():
    # a square: both orders around the corner cost the same
    inst = make_instance([(0, 0), (1, 0), (0, 1), (1, 1)], [1] * 4, 4, depot=(10, 10))
    nbrs = Neighborhoods.from_lists([[1, 2], [0, 3], [0, 3], [1, 2]])
    arcs = enumerate_arc_costs(inst, nbrs)
    a = arcs.find(0, 3, (1, 2))
    assert a >= 0
    assert arcs.arc(a).order == (1, 2)
    b = arcs.find(3, 0, (1, 2))
    assert arcs.arc(b).order == (1, 2)


def test_cache_round_trip(tmp_path, rng):
    inst = random_instance(rng, 7, 3)
    nbrs = build_la_neighbors(inst, 3)
    first = enumerate_arc_costs(inst, nbrs, cache_dir=str(tmp_path))
    assert list(tmp_path.iterdir())
    again = enumerate_arc_costs(inst, nbrs, cache_dir=str(tmp_path))
    assert np.array_equal(first.cost, again.cost)
    assert np.array_equal(first.mask, again.mask)


def test_route_decomposition_and_normalisation(rng):
    inst = random_instance(rng, 8, 8)
    nbrs = build_la_neighbors(inst, 3)
    arcs = enumerate_arc_costs(inst, nbrs)
    visits = list(rng.permutation(8)[:6])
    assert special_indexes(visits, nbrs)[0] == 0
    idx = decompose_route(visits, arcs)
    segs = segments(visits, nbrs.la)
    assert len(idx) == len(segs)
    for a, (u, inter, v) in zip(idx, segs):
        arc = arcs.arc(a)
        assert (arc.first, arc.last, arc.intermediates) == (u, v if v >= 0 else SINK, frozenset(inter))
    norm = normalize_route(visits, arcs)
    assert sorted(norm) == sorted(visits)
    assert inst.route_cost(norm) <= inst.route_cost(visits) + 1e-12


def test_reduced_cost_examples():
    inst = make_instance([(0, 1), (1, 1), (2, 1), (9, 9)], [1] * 4, 4)
    nbrs = Neighborhoods.from_lists([[1, 2], [0, 2], [0, 1], []])
    arcs = enumerate_arc_costs(inst, nbrs)
    zero = DualSolution.zeros(4)
    for a in range(len(arcs)):
        assert arc_reduced_cost(arcs.arc(a), zero) == pytest.approx(arcs.cost[a])
    direct = arcs.find(3, SINK, ())
    cover = np.zeros(4)
    cover[3] = arcs.cost[direct]
    assert arc_reduced_cost(arcs.arc(direct), DualSolution(cover)) == pytest.approx(0.0)
    # arc covering 0 and 1 of the cut {0, 1, 2} with divisor 2 adds exactly the dual
    cut = SubsetRowCut((0, 1, 2), 2)
    a = arcs.find(0, 3, (1,))
    base = arc_reduced_cost(arcs.arc(a), zero)
    with_cut = DualSolution(np.zeros(4), 0.0, [cut], [5.0])
    assert arc_reduced_cost(arcs.arc(a), with_cut) == pytest.approx(base + 5.0)
    assert arc_reduced_costs(arcs, with_cut)[a] == pytest.approx(base + 5.0)


def test_vector_and_scalar_reduced_costs_agree(rng):
    inst = random_instance(rng, 8, 4, max_demand=2)
    arcs = enumerate_arc_costs(inst, build_la_neighbors(inst, 3))
    cuts = [SubsetRowCut((0, 1, 2), 2), SubsetRowCut((3, 4, 5, 6, 7), 3)]
    duals = DualSolution(rng.random(8), 0.2, cuts, [1.5, 0.7])
    vec = arc_reduced_costs(arcs, duals)
    for a in range(len(arcs)):
        assert vec[a] == pytest.approx(arc_reduced_cost(arcs.arc(a), duals), abs=1e-12)


def test_empty_ng_gives_one_context_per_group(rng):
    inst = random_instance(rng, 7, 4, max_demand=2)
    arcs = enumerate_arc_costs(inst, build_la_neighbors(inst, 3))
    parts = partition_ng_contexts(arcs, [[] for _ in range(7)])
    ys = {(u, v, d) for (u, v, m1, m2, d) in parts}
    assert len(ys) == len(parts)
    assert all(not m1 and not m2 for (_, _, m1, m2, _) in parts)
    assert sum(len(v) for v in parts.values()) == len(arcs)


def test_membership_rule_excludes_visited_intermediates():
    inst = make_instance([(0, 0), (1, 0), (2, 0), (3, 0)], [1] * 4, 4, depot=(0, 5))
    nbrs = Neighborhoods.from_lists([[1, 2], [0, 2], [1, 3], [2, 1]])
    arcs = enumerate_arc_costs(inst, nbrs)
    ng = [[1], [], [], []]
    idx, _ = context_assignment(arcs, ng, 0, {1})
    assert all(1 not in arcs.arc(a).covered and arcs.arc(a).last != 1 for a in idx)
    all_idx, _ = context_assignment(arcs, ng, 0, set())
    assert any(1 in arcs.arc(a).order for a in all_idx)


def test_three_customer_context_codes_by_hand():
    inst = make_instance([(0, 0), (1, 0), (2, 0)], [1, 1, 1], 3, depot=(0, 3))
    nbrs = Neighborhoods.from_lists([[1], [2], [0]])
    arcs = enumerate_arc_costs(inst, nbrs)
    ng = [[1, 2], [0, 2], [0, 1]]
    for u in range(3):
        for r in range(3):
            for m1 in itertools.combinations(ng[u], r):
                idx, codes = context_assignment(arcs, ng, u, set(m1))
                for a, c in zip(idx, codes):
                    arc = arcs.arc(a)
                    assert not set(m1) & set(arc.covered[1:]) and arc.last not in m1
                    if arc.last < 0:
                        continue
                    hand = set(ng[arc.last]) & ({u} | set(m1) | set(arc.order))
                    got = {w for b, w in enumerate(ng[arc.last]) if c >> b & 1}
                    assert got == hand


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000))
def test_contexts_partition_each_group(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(3, 7))
    inst = random_instance(rng, n, 4, max_demand=2)
    arcs = enumerate_arc_costs(inst, build_la_neighbors(inst, 2))
    ng = [[int(w) for w in rng.choice([x for x in range(n) if x != u], size=int(rng.integers(0, 3)),
                                      replace=False)] for u in range(n)]
    for u in range(n):
        for r in range(len(ng[u]) + 1):
            for m1 in itertools.combinations(ng[u], r):
                if inst.capacity - sum(int(inst.demands[w]) for w in m1) < inst.demands[u]:
                    continue
                idx, codes = context_assignment(arcs, ng, u, set(m1))
                assert len(set(idx.tolist())) == len(idx)
                expected = [a for a in range(arcs.first_start[u], arcs.first_start[u + 1])
                            if not set(m1) & set(arcs.arc(a).order) and arcs.arc(a).last not in m1]
                assert sorted(idx.tolist()) == expected
                assert len(codes) == len(idx)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000), st.integers(2, 5))
def test_sri_coefficient_range(seed, m):
    rng = np.random.default_rng(seed)
    inst = random_instance(rng, 7, 5, max_demand=1)
    arcs = enumerate_arc_costs(inst, build_la_neighbors(inst, 3))
    members = tuple(sorted(rng.choice(7, size=m + 1, replace=False).tolist()))
    cut = SubsetRowCut(members, m)
    idx, coef = arcs.cut_coeffs(cut)
    full = np.zeros(len(arcs), dtype=np.int64)
    full[idx] = coef
    for a in range(len(arcs)):
        hit = len(set(arcs.arc(a).covered) & set(members))
        assert full[a] == hit // m
        assert 0 <= full[a] <= len(members) // m


def test_arcset_is_arcset():
    inst = clock_instance()
    assert isinstance(enumerate_arc_costs(inst, build_la_neighbors(inst, 2)), ArcSet)
