"""CVRP instance data, CVRPLIB ingestion and synthetic generation."""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

SOURCE = -1
SINK = -2

EXACT = "exact-euclidean"
NEAREST_INT = "nearest-integer"
ROUNDING_MODES = (EXACT, NEAREST_INT)


class InvalidConfigError(ValueError):
    """Raised for parameter combinations that cannot describe an instance."""


class ParseError(ValueError):
    """Raised when a CVRPLIB file cannot be read.

    Attributes:
        line: 1-based line number where the problem was detected, if known.
    """

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


@dataclass(frozen=True, eq=False)
class Instance:
    """A capacitated vehicle routing instance.

    Customers are indexed ``0..n-1``. The depot is stored once; the ids
    ``SOURCE`` (-1) and ``SINK`` (-2) both resolve to it. Internally the depot
    occupies row/column ``n`` of :attr:`distances`.
    """

    coords: np.ndarray
    demands: np.ndarray
    depot_xy: tuple[float, float]
    capacity: int
    fleet_bound: int
    distance_rounding: str = EXACT
    name: str = ""
    distances: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        coords = np.asarray(self.coords, dtype=float).reshape(-1, 2)
        demands = np.asarray(self.demands, dtype=np.int64).reshape(-1)
        if len(coords) != len(demands):
            raise InvalidConfigError("coords and demands differ in length")
        if self.capacity < 1:
            raise InvalidConfigError("capacity must be >= 1")
        if self.fleet_bound < 1:
            raise InvalidConfigError("fleet bound must be >= 1")
        if len(demands) and (demands.min() < 1 or demands.max() > self.capacity):
            raise InvalidConfigError("every demand must lie in [1, capacity]")
        if self.distance_rounding not in ROUNDING_MODES:
            raise InvalidConfigError(f"unknown rounding {self.distance_rounding!r}")
        coords.setflags(write=False)
        demands.setflags(write=False)
        object.__setattr__(self, "coords", coords)
        object.__setattr__(self, "demands", demands)
        object.__setattr__(self, "depot_xy", (float(self.depot_xy[0]), float(self.depot_xy[1])))
        object.__setattr__(self, "distances", self._distance_matrix())

    def _distance_matrix(self) -> np.ndarray:
        pts = np.vstack([self.coords, np.asarray(self.depot_xy)[None, :]])
        diff = pts[:, None, :] - pts[None, :, :]
        dist = np.sqrt((diff**2).sum(axis=2))
        if self.distance_rounding == NEAREST_INT:
            dist = np.floor(dist + 0.5)
        dist.setflags(write=False)
        return dist

    @property
    def n(self) -> int:
        return len(self.demands)

    @property
    def depot_index(self) -> int:
        """Row of the depot in :attr:`distances`."""
        return self.n

    def index(self, u: int) -> int:
        return self.n if u < 0 else u

    def dist(self, u: int, v: int) -> float:
        return float(self.distances[self.index(u), self.index(v)])

    def demand(self, u: int) -> int:
        return 0 if u < 0 else int(self.demands[u])

    def route_cost(self, visits: Iterable[int]) -> float:
        """Length of depot -> visits -> depot."""
        seq = [self.n, *visits, self.n]
        return float(sum(self.distances[a, b] for a, b in zip(seq, seq[1:])))

    def max_distance(self) -> float:
        return float(self.distances.max()) if self.n else 0.0

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Instance):
            return NotImplemented
        return (
            self.capacity == other.capacity
            and self.fleet_bound == other.fleet_bound
            and self.distance_rounding == other.distance_rounding
            and self.depot_xy == other.depot_xy
            and np.array_equal(self.coords, other.coords)
            and np.array_equal(self.demands, other.demands)
        )

    __hash__ = None  # type: ignore[assignment]

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "coords": self.coords.tolist(),
            "demands": self.demands.tolist(),
            "depot_xy": list(self.depot_xy),
            "capacity": int(self.capacity),
            "fleet_bound": int(self.fleet_bound),
            "distance_rounding": self.distance_rounding,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Instance":
        return cls(
            coords=np.asarray(data["coords"], dtype=float).reshape(-1, 2),
            demands=np.asarray(data["demands"], dtype=np.int64),
            depot_xy=tuple(data["depot_xy"]),
            capacity=int(data["capacity"]),
            fleet_bound=int(data["fleet_bound"]),
            distance_rounding=data.get("distance_rounding", EXACT),
            name=data.get("name", ""),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "Instance":
        return cls.from_dict(json.loads(text))

    def fingerprint(self) -> str:
        return hashlib.sha256(self.to_json().encode()).hexdigest()[:16]


def _is_int(token: str) -> bool:
    try:
        int(token)
    except ValueError:
        return False
    return True


def _fmt(x: float) -> str:
    return str(int(x)) if float(x).is_integer() else repr(float(x))


def parse_cvrplib(text: str, distance_rounding: str = NEAREST_INT) -> Instance:
    """Read a CVRPLIB ``.vrp`` file with EUC_2D coordinates.

    Args:
        text: File contents.
        distance_rounding: ``"nearest-integer"`` (the benchmark convention)
            or ``"exact-euclidean"``.

    Raises:
        ParseError: On malformed sections, a missing CAPACITY, or duplicate
            node ids. The message names the offending line.
    """
    header: dict[str, str] = {}
    coords: dict[int, tuple[float, float]] = {}
    demands: dict[int, int] = {}
    depots: list[int] = []
    section = None
    section_line = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        upper = line.upper()
        if upper.startswith("EOF"):
            break
        if upper.endswith("_SECTION"):
            section = upper
            section_line[section] = lineno
            if section not in ("NODE_COORD_SECTION", "DEMAND_SECTION", "DEPOT_SECTION"):
                raise ParseError(f"unsupported section {line}", lineno)
            continue
        if ":" in line and not _is_int(line.split()[0]):
            key, _, value = line.partition(":")
            header[key.strip().upper()] = value.strip()
            section = None
            continue
        parts = line.split()
        try:
            if section == "NODE_COORD_SECTION":
                if len(parts) != 3:
                    raise ValueError
                node = int(parts[0])
                if node in coords:
                    raise ParseError(f"duplicate node id {node}", lineno)
                coords[node] = (float(parts[1]), float(parts[2]))
            elif section == "DEMAND_SECTION":
                if len(parts) != 2:
                    raise ValueError
                node = int(parts[0])
                if node in demands:
                    raise ParseError(f"duplicate node id {node}", lineno)
                demands[node] = int(parts[1])
            elif section == "DEPOT_SECTION":
                for tok in parts:
                    val = int(tok)
                    if val == -1:
                        section = None
                        break
                    depots.append(val)
            else:
                raise ParseError(f"unexpected content {line!r}", lineno)
        except ValueError as exc:
            if isinstance(exc, ParseError):
                raise
            raise ParseError(f"malformed {section} entry {line!r}", lineno) from None

    if "CAPACITY" not in header:
        raise ParseError("missing CAPACITY")
    try:
        capacity = int(header["CAPACITY"])
    except ValueError:
        raise ParseError(f"bad CAPACITY {header['CAPACITY']!r}") from None
    ewt = header.get("EDGE_WEIGHT_TYPE", "EUC_2D").upper()
    if ewt != "EUC_2D":
        raise ParseError(f"unsupported EDGE_WEIGHT_TYPE {ewt}")
    if not coords:
        raise ParseError("missing NODE_COORD_SECTION")
    if set(coords) != set(demands):
        raise ParseError("node ids differ between coordinate and demand sections",
                         section_line.get("DEMAND_SECTION"))
    if "DIMENSION" in header and int(header["DIMENSION"]) != len(coords):
        raise ParseError(f"DIMENSION {header['DIMENSION']} but {len(coords)} nodes")
    depot = depots[0] if depots else min(coords)
    if len(depots) > 1:
        raise ParseError("multiple depots are not supported", section_line.get("DEPOT_SECTION"))
    if depot not in coords:
        raise ParseError(f"depot {depot} has no coordinates", section_line.get("DEPOT_SECTION"))

    customers = sorted(k for k in coords if k != depot)
    n = len(customers)
    fleet = int(header["VEHICLES"]) if "VEHICLES" in header else max(n, 1)
    return Instance(
        coords=np.array([coords[k] for k in customers], dtype=float).reshape(-1, 2),
        demands=np.array([demands[k] for k in customers], dtype=np.int64),
        depot_xy=coords[depot],
        capacity=capacity,
        fleet_bound=fleet,
        distance_rounding=distance_rounding,
        name=header.get("NAME", ""),
    )


def to_cvrplib(inst: Instance) -> str:
    """Serialize to CVRPLIB text; the depot is written as node 1."""
    lines = [
        f"NAME : {inst.name or 'instance'}",
        "TYPE : CVRP",
        f"DIMENSION : {inst.n + 1}",
        "EDGE_WEIGHT_TYPE : EUC_2D",
        f"CAPACITY : {inst.capacity}",
    ]
    if inst.fleet_bound != max(inst.n, 1):
        lines.append(f"VEHICLES : {inst.fleet_bound}")
    lines.append("NODE_COORD_SECTION")
    lines.append(f"1 {_fmt(inst.depot_xy[0])} {_fmt(inst.depot_xy[1])}")
    for i, (x, y) in enumerate(inst.coords):
        lines.append(f"{i + 2} {_fmt(x)} {_fmt(y)}")
    lines.append("DEMAND_SECTION")
    lines.append("1 0")
    for i, d in enumerate(inst.demands):
        lines.append(f"{i + 2} {int(d)}")
    lines += ["DEPOT_SECTION", "1", "-1", "EOF", ""]
    return "\n".join(lines)


def generate_synthetic(n: int, capacity: int, demand_mode: str = "unit", seed: int = 0) -> Instance:
    """Random instance in the unit square with exact Euclidean distances.

    ``demand_mode`` is ``"unit"`` or ``"uniform-1-to-10"``.
    """
    if n < 1:
        raise InvalidConfigError("n must be >= 1")
    rng = np.random.default_rng(seed)
    coords = rng.random((n, 2))
    depot = rng.random(2)
    if demand_mode == "unit":
        if capacity < 1:
            raise InvalidConfigError("capacity must be >= 1")
        demands = np.ones(n, dtype=np.int64)
    elif demand_mode == "uniform-1-to-10":
        if capacity < 10:
            raise InvalidConfigError("uniform-1-to-10 demands need capacity >= 10")
        demands = rng.integers(1, 11, size=n)
    else:
        raise InvalidConfigError(f"unknown demand mode {demand_mode!r}")
    return Instance(
        coords=coords,
        demands=demands,
        depot_xy=(depot[0], depot[1]),
        capacity=capacity,
        fleet_bound=n,
        distance_rounding=EXACT,
        name=f"synthetic-{n}-{capacity}-{demand_mode}-{seed}",
    )


def apply_demand_divisor(inst: Instance, divisor: int) -> Instance:
    """Scale demands and capacity down by ``divisor``, rounding up."""
    if divisor < 1:
        raise InvalidConfigError("divisor must be >= 1")
    if divisor == 1:
        return inst
    return Instance(
        coords=inst.coords,
        demands=np.array([math.ceil(int(d) / divisor) for d in inst.demands], dtype=np.int64),
        depot_xy=inst.depot_xy,
        capacity=math.ceil(inst.capacity / divisor),
        fleet_bound=inst.fleet_bound,
        distance_rounding=inst.distance_rounding,
        name=f"{inst.name}/d{divisor}" if inst.name else "",
    )
