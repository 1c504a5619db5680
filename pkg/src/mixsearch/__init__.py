"""Local-search solvers for bound-constrained mixed-integer problems,
with a benchmark harness for comparing them."""

from .bench import (
    WeightTable,
    average_records,
    performance_profile,
    relative_gap_cdf,
    run_matrix,
    weighted_evals,
)
from .core import (
    Box,
    EvaluationError,
    MixedPoint,
    Problem,
    SolverConfig,
    project_box,
    stationarity_residual,
)
from .problems import ProblemSpec, available_problems, config_grid, make_problem
from .solvers import ALGORITHMS, RunRecord, StopReason, run

__version__ = "0.1.0"

__all__ = [
    "ALGORITHMS",
    "Box",
    "EvaluationError",
    "MixedPoint",
    "Problem",
    "ProblemSpec",
    "RunRecord",
    "SolverConfig",
    "StopReason",
    "WeightTable",
    "available_problems",
    "average_records",
    "config_grid",
    "make_problem",
    "performance_profile",
    "project_box",
    "relative_gap_cdf",
    "run",
    "run_matrix",
    "stationarity_residual",
    "weighted_evals",
    "__version__",
]
