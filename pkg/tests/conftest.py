"""Shared fixtures and independent oracles for the test-suite.

The oracles here deliberately avoid the package's own machinery: routes are
enumerated with itertools, segment costs by brute-force permutation and LPs
are solved with a direct scipy call.
"""

from __future__ import annotations

import itertools
import math

import numpy as np
import pytest
from scipy.optimize import linprog

from lacg.instance import EXACT, Instance

ACCEPTANCE_RESULTS: dict[int, tuple[bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(ACCEPTANCE_RESULTS):
        ok, text = ACCEPTANCE_RESULTS[num]
        terminalreporter.write_line(f"criterion {num:2d}: {'PASS' if ok else 'FAIL'}  {text}")


# --------------------------------------------------------------------------- instances

def make_instance(coords, demands, capacity, depot=(0.0, 0.0), fleet=None, name="test") -> Instance:
    coords = np.asarray(coords, dtype=float)
    return Instance(coords=coords, demands=np.asarray(demands, dtype=np.int64), depot_xy=tuple(depot),
                    capacity=int(capacity), fleet_bound=int(fleet or len(coords)),
                    distance_rounding=EXACT, name=name)


def random_instance(rng, n, capacity, max_demand=1) -> Instance:
    coords = rng.random((n, 2))
    demands = rng.integers(1, max_demand + 1, size=n)
    return make_instance(coords, demands, capacity, depot=tuple(rng.random(2)))


def clock_instance(capacity=4) -> Instance:
    """Twelve unit-demand customers on clock positions; customer ``u_k`` has id ``k - 1``."""
    ang = [math.pi / 2 - 2 * math.pi * k / 12 for k in range(1, 13)]
    coords = [(math.cos(a), math.sin(a)) for a in ang]
    return make_instance(coords, [1] * 12, capacity, name="clock")


def clock_neighbors():
    return [[(u + s) % 12 for s in (-2, -1, 1, 2)] for u in range(12)]


def nyc_instance(capacity=2, far=100.0) -> Instance:
    """Three co-located unit-demand customers far from the depot."""
    return make_instance([(far, 0.0)] * 3, [1, 1, 1], capacity, name="nyc")


def nyc_sd_instance(capacity=3, nyc_demand=1, sd_demand=1, far=1000.0) -> Instance:
    """Customers 0-2 are NYC1-3 (far away), 3-5 are SD1-3 (next to the depot)."""
    eps = 1e-3
    coords = [(far, 0.0), (far, eps), (far + eps, 0.0), (eps, 0.0), (0.0, eps), (eps, eps)]
    demands = [nyc_demand] * 3 + [sd_demand] * 3
    return make_instance(coords, demands, capacity, name="nyc-sd")


# --------------------------------------------------------------------------- oracles

def dist(inst, u, v) -> float:
    def xy(w):
        return inst.depot_xy if w < 0 else tuple(inst.coords[w])

    (ax, ay), (bx, by) = xy(u), xy(v)
    return math.hypot(ax - bx, ay - by)


def raw_route_cost(inst, visits) -> float:
    seq = [-1, *visits, -2]
    return sum(dist(inst, a, b) for a, b in zip(seq, seq[1:]))


def elementary_routes(inst, max_len=None):
    """Every capacity-feasible elementary customer sequence."""
    n = inst.n
    out = []
    top = n if max_len is None else min(n, max_len)
    for r in range(1, top + 1):
        for subset in itertools.combinations(range(n), r):
            if sum(int(inst.demands[u]) for u in subset) > inst.capacity:
                continue
            out.extend(itertools.permutations(subset))
    return out


def special_positions(visits, la):
    """0-based special indexes recomputed from their definition."""
    if not visits:
        return []
    pos = [0]
    for k in range(1, len(visits)):
        if visits[k] not in set(la[visits[pos[-1]]]):
            pos.append(k)
    return pos


def segments(visits, la):
    """``(first, intermediates, last)`` per LA segment; last is -2 for the depot."""
    q = special_positions(visits, la)
    bounds = q + [len(visits)]
    out = []
    for a, b in zip(bounds, bounds[1:]):
        out.append((visits[a], tuple(visits[a + 1 : b]), visits[b] if b < len(visits) else -2))
    return out


def best_order_cost(inst, u, inter, v) -> float:
    best = math.inf
    for perm in itertools.permutations(inter):
        seq = [u, *perm, v]
        best = min(best, sum(dist(inst, a, b) for a, b in zip(seq, seq[1:])))
    return best


def normalized_cost(inst, visits, la) -> float:
    """Route cost with every LA segment in its cheapest order."""
    total = dist(inst, -1, visits[0])
    for u, inter, v in segments(visits, la):
        total += best_order_cost(inst, u, inter, v)
    return total


def lp_over_routes(inst, routes, costs, cut_rows=()):
    """Set-cover LP ``min c.theta`` with cover >= 1, fleet <= K and optional ``<=`` rows.

    ``cut_rows`` is a list of ``(coefficients per route, rhs)``.
    """
    m = len(routes)
    A_ub, b_ub = [], []
    for u in range(inst.n):
        A_ub.append([-float(r.count(u)) for r in routes])
        b_ub.append(-1.0)
    A_ub.append([1.0] * m)
    b_ub.append(float(inst.fleet_bound))
    for coeffs, rhs in cut_rows:
        A_ub.append([float(c) for c in coeffs])
        b_ub.append(float(rhs))
    res = linprog(costs, A_ub=np.array(A_ub), b_ub=np.array(b_ub), bounds=(0, None), method="highs")
    assert res.status == 0, res.message
    return res.fun, res.x


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
