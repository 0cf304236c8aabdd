import math
import os
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import make_instance
from lacg.instance import (
    EXACT,
    NEAREST_INT,
    Instance,
    InvalidConfigError,
    ParseError,
    apply_demand_divisor,
    generate_synthetic,
    parse_cvrplib,
    to_cvrplib,
)

TWO_CUSTOMERS = """NAME : tiny
TYPE : CVRP
DIMENSION : 3
EDGE_WEIGHT_TYPE : EUC_2D
CAPACITY : 2
NODE_COORD_SECTION
1 0 0
2 3 4
3 {x2} {y2}
DEMAND_SECTION
1 0
2 1
3 1
DEPOT_SECTION
1
-1
EOF
"""


def test_parse_minimal_file_exact():
    inst = parse_cvrplib(TWO_CUSTOMERS.format(x2=6, y2=8), distance_rounding=EXACT)
    assert inst.n == 2
    assert inst.capacity == 2
    assert inst.dist(-1, 0) == pytest.approx(5.0)
    assert inst.dist(-2, 1) == pytest.approx(10.0)
    assert inst.dist(-1, -2) == 0.0
    assert list(inst.demands) == [1, 1]
    assert inst.fleet_bound == 2


def test_parse_nearest_integer_rounding():
    inst = parse_cvrplib(TWO_CUSTOMERS.format(x2=3, y2=5))
    assert inst.distance_rounding == NEAREST_INT
    assert inst.dist(0, 1) == 1.0
    skew = parse_cvrplib(TWO_CUSTOMERS.format(x2=4, y2=5))  # sqrt(2) rounds to 1
    assert skew.dist(0, 1) == 1.0


@pytest.mark.parametrize("text, line", [
    (TWO_CUSTOMERS.format(x2=6, y2=8).replace("CAPACITY : 2\n", ""), None),
    (TWO_CUSTOMERS.format(x2=6, y2=8).replace("3 6 8", "2 6 8"), 9),
    (TWO_CUSTOMERS.format(x2=6, y2=8).replace("3 6 8", "3 6"), 9),
])
def test_parse_errors_name_the_line(text, line):
    with pytest.raises(ParseError) as exc:
        parse_cvrplib(text)
    assert exc.value.line == line


def test_cvrplib_round_trip():
    inst = generate_synthetic(7, 3, "unit", seed=2)
    again = parse_cvrplib(to_cvrplib(inst), distance_rounding=EXACT)
    assert again == inst
    assert parse_cvrplib(to_cvrplib(again), distance_rounding=EXACT) == again


def test_json_round_trip():
    inst = generate_synthetic(5, 20, "uniform-1-to-10", seed=1)
    assert Instance.from_json(inst.to_json()) == inst
    assert Instance.from_json(inst.to_json()).fingerprint() == inst.fingerprint()


def test_synthetic_examples():
    inst = generate_synthetic(20, 4, "unit", seed=7)
    assert inst.n == 20 and set(inst.demands.tolist()) == {1}
    one = generate_synthetic(1, 1, "unit", seed=0)
    assert one.n == 1 and one.route_cost([0]) == pytest.approx(2 * one.dist(-1, 0))
    mixed = generate_synthetic(30, 20, "uniform-1-to-10", seed=3)
    assert mixed.demands.min() >= 1 and mixed.demands.max() <= 10
    assert np.all((mixed.coords >= 0) & (mixed.coords <= 1))
    assert generate_synthetic(20, 4, "unit", seed=7) == inst


def test_synthetic_errors():
    with pytest.raises(InvalidConfigError):
        generate_synthetic(10, 9, "uniform-1-to-10", seed=0)
    with pytest.raises(InvalidConfigError):
        generate_synthetic(0, 4, "unit", seed=0)


def test_demand_divisor_examples():
    inst = make_instance([(0, 1), (1, 0)], [7, 10], 100)
    scaled = apply_demand_divisor(inst, 10)
    assert list(scaled.demands) == [1, 1]
    assert scaled.capacity == 10
    assert np.array_equal(scaled.coords, inst.coords)
    assert apply_demand_divisor(inst, 1) == inst
    with pytest.raises(InvalidConfigError):
        apply_demand_divisor(inst, 0)


def test_instance_validation():
    with pytest.raises(InvalidConfigError):
        make_instance([(0, 1)], [3], 2)
    with pytest.raises(InvalidConfigError):
        make_instance([(0, 1)], [0], 2)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 12), st.integers(0, 10_000))
def test_distance_properties(n, seed):
    inst = generate_synthetic(n, 10, "uniform-1-to-10", seed=seed)
    d = inst.distances
    assert np.allclose(d, d.T)
    assert np.all(np.diag(d) == 0)
    assert np.all(d >= 0)
    # triangle inequality over every triple
    assert np.all(d[:, None, :] <= d[:, :, None] + d[None, :, :] + 1e-12)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.integers(1, 50), min_size=1, max_size=8), st.integers(1, 12))
def test_divisor_monotone(demands, divisor):
    cap = max(demands) + 3
    inst = make_instance([(i, 0) for i in range(len(demands))], demands, cap)
    out = apply_demand_divisor(inst, divisor)
    assert np.all(out.demands <= inst.demands)
    assert np.all(out.demands >= 1)
    assert out.capacity == math.ceil(cap / divisor)
    assert np.all(out.demands <= out.capacity)


AUGERAT_DIR = os.environ.get("LACG_AUGERAT_DIR", "")


@pytest.mark.skipif(not (Path(AUGERAT_DIR) / "A-n32-k5.vrp").is_file(),
                    reason="set LACG_AUGERAT_DIR to a directory holding A-n32-k5.vrp")
def test_augerat_a_n32_k5_header():
    inst = parse_cvrplib((Path(AUGERAT_DIR) / "A-n32-k5.vrp").read_text())
    assert inst.n == 31 and inst.capacity == 100
