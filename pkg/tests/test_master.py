import csv

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import elementary_routes, lp_over_routes, nyc_instance, random_instance, raw_route_cost
from lacg.cuts import SubsetRowCut
from lacg.la_arcs import build_la_neighbors, enumerate_arc_costs
from lacg.master import (
    BaselineConfig,
    DualSolution,
    MasterError,
    Route,
    artificial_cost,
    build_rmp,
    lagrangian_bound,
    make_route,
    single_customer_routes,
    solve_cg_baseline,
    solve_rmp,
)


def _arcs(inst, k=2):
    return enumerate_arc_costs(inst, build_la_neighbors(inst, k))


def test_single_customer_columns(rng):
    inst = random_instance(rng, 5, 3)
    arcs = _arcs(inst)
    res = solve_rmp(single_customer_routes(arcs), [], inst, arcs)
    assert res.objective == pytest.approx(sum(2 * inst.dist(-1, u) for u in range(5)))
    assert res.artificial == pytest.approx(0.0)
    assert np.allclose(res.theta, 1.0)


def test_artificial_column_keeps_empty_master_feasible(rng):
    inst = random_instance(rng, 4, 2)
    arcs = _arcs(inst)
    res = solve_rmp([], [], inst, arcs)
    assert res.artificial == pytest.approx(1.0)
    assert res.objective == pytest.approx(artificial_cost(inst))


def test_nyc_master_values():
    inst = nyc_instance()
    arcs = _arcs(inst)
    pairs = [make_route(p, arcs) for p in ((0, 1), (0, 2), (1, 2))]
    singles = single_customer_routes(arcs)
    res = solve_rmp(pairs + singles, [], inst, arcs)
    assert res.objective == pytest.approx(300.0)
    assert np.allclose(res.theta[:3], 0.5)
    cut = SubsetRowCut((0, 1, 2), 2)
    tight = solve_rmp(pairs + singles, [cut], inst, arcs)
    assert tight.objective == pytest.approx(400.0)
    # dual of the subset-row row is non-negative and priced into routes
    assert tight.duals.cut_duals[0] >= 0
    for j, r in enumerate(pairs + singles):
        rc = tight.duals.route_reduced_cost(r, arcs)
        assert rc >= -1e-7
        if tight.theta[j] > 1e-7:
            assert rc == pytest.approx(0.0, abs=1e-7)


def test_one_customer_converges_fast():
    inst = random_instance(np.random.default_rng(0), 1, 1)
    res = solve_cg_baseline(inst, _arcs(inst))
    assert res.iterations <= 2
    assert res.objective == pytest.approx(2 * inst.dist(-1, 0))


@settings(max_examples=12, deadline=None)
@given(st.integers(0, 10_000))
def test_baseline_matches_full_enumeration(seed):
    rng = np.random.default_rng(seed)
    cap = int(rng.integers(2, 4))
    inst = random_instance(rng, int(rng.integers(2, 7)), cap, max_demand=2)
    res = solve_cg_baseline(inst, _arcs(inst, int(rng.integers(0, 3))))
    routes = elementary_routes(inst)
    oracle, _ = lp_over_routes(inst, routes, [raw_route_cost(inst, r) for r in routes])
    assert res.objective == pytest.approx(oracle, abs=1e-6)
    assert res.lower_bound == pytest.approx(res.objective)


def test_objective_non_increasing_and_bounds(rng, tmp_path):
    inst = random_instance(rng, 10, 4)
    path = tmp_path / "trace.csv"
    res = solve_cg_baseline(inst, _arcs(inst, 3), BaselineConfig(trace_path=str(path)))
    objs = [row["objective"] for row in res.trace]
    assert all(b <= a + 1e-7 for a, b in zip(objs, objs[1:]))
    assert all(row["lower_bound"] <= row["objective"] + 1e-7 for row in res.trace)
    assert res.trace[-1]["reduced_cost"] >= -1e-6
    with open(path) as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == res.iterations
    assert set(rows[0]) == {"iteration", "objective", "reduced_cost", "lower_bound", "cuts", "time"}


def test_added_columns_priced_negative(rng):
    inst = random_instance(rng, 8, 3)
    arcs = _arcs(inst)
    res = solve_cg_baseline(inst, arcs)
    # replay: each column must price negative under the duals of the master that preceded it
    cols = []
    for r in res.columns:
        duals = solve_rmp(cols, [], inst, arcs).duals
        assert duals.route_reduced_cost(r, arcs) < -1e-6
        cols.append(r)


def test_duplicate_column_is_an_error(rng):
    inst = random_instance(rng, 5, 2)
    arcs = _arcs(inst)

    # an initial column with an inflated cost still prices negative, so
    # pricing returns a sequence that is already in the master
    base = solve_cg_baseline(inst, arcs)
    best = base.columns[0]
    fake = Route(best.visits, best.cost + 1e6, best.arcs)
    with pytest.raises(MasterError):
        solve_cg_baseline(inst, arcs, initial=[fake])


def test_multi_column_reaches_same_optimum(rng):
    inst = random_instance(rng, 9, 3)
    arcs = _arcs(inst)
    single = solve_cg_baseline(inst, arcs)
    multi = solve_cg_baseline(inst, arcs, BaselineConfig(multi_column=True))
    assert multi.objective == pytest.approx(single.objective, abs=1e-6)
    assert multi.iterations <= single.iterations


def test_time_cap_flags_partial(rng):
    inst = random_instance(rng, 10, 4)
    res = solve_cg_baseline(inst, _arcs(inst), BaselineConfig(time_cap=1e-9))
    assert res.partial
    assert res.lower_bound <= res.objective


def test_lagrangian_bound():
    assert lagrangian_bound(10.0, 4, -0.5) == pytest.approx(8.0)
    assert lagrangian_bound(10.0, 4, 0.3) == pytest.approx(10.0)


def test_dual_sign_convention(rng):
    inst = random_instance(rng, 6, 3)
    inst = type(inst)(coords=inst.coords, demands=inst.demands, depot_xy=inst.depot_xy, capacity=3,
                      fleet_bound=2, distance_rounding=inst.distance_rounding)
    arcs = _arcs(inst)
    res = solve_cg_baseline(inst, arcs)
    d = res.duals
    assert np.all(d.cover >= 0) and d.fleet >= 0
    lp = build_rmp(res.columns, [], inst, arcs)
    assert lp.senses[inst.n] == "<="
    # strong duality in pricing signs
    assert res.objective == pytest.approx(d.cover.sum() - inst.fleet_bound * d.fleet, abs=1e-6)


def test_route_helpers(rng):
    inst = random_instance(rng, 5, 5)
    arcs = _arcs(inst)
    r = make_route((3, 1, 4), arcs)
    assert r.cost == pytest.approx(raw_route_cost(inst, (3, 1, 4)))
    assert list(r.coverage(5)) == [0, 1, 0, 1, 1]
    assert r.to_dict()["visits"] == [3, 1, 4]
    with pytest.raises(ValueError):
        make_route((1, 1), arcs)
    d = DualSolution(np.ones(5), 0.5)
    assert d.route_reduced_cost(r, arcs) == pytest.approx(r.cost + 0.5 - 3)
