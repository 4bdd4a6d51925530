"""Multi-period inspector scheduling: period-aware transit times, a tabu
search with ejection pool and perturbation, and a knapsack upper bound."""
from ._backend import NAME as BACKEND
from .instance import (Instance, InstanceError, ParseError, PeriodGrid, generate_mpisp,
                       parse_solomon, random_instance, read_solomon, transform_downtime,
                       validate)
from .search import SearchConfig, TabuSearch, tabu_search
from .solution import Fitness, Solution, compare, evaluate
from .transit import TransitTables
from .upper_bound import build_model, derive_coefficients, emit_lp, solve_exact_small, solve_milp

__all__ = [
    "BACKEND", "Fitness", "Instance", "InstanceError", "ParseError", "PeriodGrid",
    "SearchConfig", "Solution", "TabuSearch", "TransitTables", "build_model", "compare",
    "derive_coefficients", "emit_lp", "evaluate", "generate_mpisp", "parse_solomon",
    "random_instance", "read_solomon", "solve_exact_small", "solve_milp", "tabu_search",
    "transform_downtime", "validate",
]
