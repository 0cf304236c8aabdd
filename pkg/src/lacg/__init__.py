"""Column generation for the capacitated vehicle routing problem over LA-routes."""

from .instance import Instance, apply_demand_divisor, generate_synthetic, parse_cvrplib
from .la_arcs import ArcSet, Neighborhoods, build_la_neighbors, enumerate_arc_costs
from .master import BaselineConfig, DualSolution, Route, solve_cg_baseline, solve_rmp
from .pricing import PricingConfig, classify_route, dssr_solve
from .stabilization import StabConfig, extract_integer_solution, solve_master_complete

__all__ = [
    "ArcSet", "BaselineConfig", "DualSolution", "Instance", "Neighborhoods", "PricingConfig", "Route",
    "StabConfig", "apply_demand_divisor", "build_la_neighbors", "classify_route", "dssr_solve",
    "enumerate_arc_costs", "extract_integer_solution", "generate_synthetic", "parse_cvrplib",
    "solve_cg_baseline", "solve_master_complete", "solve_rmp",
]
