"""Representative selection compiled to QUBO and solved with classical metaheuristics."""

__version__ = "0.1.0"

from .data import DataMatrix, DistanceMatrix, Selection, SolveReport, make_data_matrix, selection_from_bits
from .distances import Metric, build_distance_matrix, correlation_distance, euclidean
from .objective import (
    QuboModel,
    SelectorProblem,
    WeightedConfig,
    compile_qubo,
    compile_weighted_qubo,
    evaluate_cost,
    evaluate_weighted_cost,
    expand_weights,
)
from .solvers import (
    SolverConfig,
    TrialBatch,
    run_trials,
    solve,
    solve_exhaustive,
    solve_random_baseline,
    solve_sa,
    solve_tabu,
)

__all__ = [
    "DataMatrix",
    "DistanceMatrix",
    "Metric",
    "QuboModel",
    "Selection",
    "SelectorProblem",
    "SolveReport",
    "SolverConfig",
    "TrialBatch",
    "WeightedConfig",
    "build_distance_matrix",
    "compile_qubo",
    "compile_weighted_qubo",
    "correlation_distance",
    "euclidean",
    "evaluate_cost",
    "evaluate_weighted_cost",
    "expand_weights",
    "make_data_matrix",
    "run_trials",
    "selection_from_bits",
    "solve",
    "solve_exhaustive",
    "solve_random_baseline",
    "solve_sa",
    "solve_tabu",
]
