"""SOAA: an Adam-family optimizer with a diagonal curvature estimate and an
adaptive trust region, plus Adam/AdamW baselines, small differentiable test
problems and a benchmark harness.
"""

from .backend import available_backends, backend_name, set_backend
from .baselines import Adam, AdamConfig
from .core import SOAA, ParamGroup, SoaaConfig, SoaaState, TraceStep
from .errors import (
    CheckpointError,
    ConfigError,
    GradientCheckError,
    NumericsError,
    OptimizerError,
    PreconditionError,
    ShapeError,
    UnknownNameError,
)
from .harness import (
    RunRecord,
    RunSpec,
    SummaryStats,
    aggregate,
    make_optimizer,
    optimizer_names,
    run_compare,
    run_single,
)
from .problems import (
    Problem,
    build_problem,
    gradcheck,
    logistic_regression,
    problem_names,
    quadratic,
    rosenbrock,
    tiny_mlp,
    validate_problem,
)

__version__ = "0.1.0"

__all__ = [
    "SOAA",
    "SoaaConfig",
    "SoaaState",
    "ParamGroup",
    "TraceStep",
    "Adam",
    "AdamConfig",
    "Problem",
    "RunRecord",
    "RunSpec",
    "SummaryStats",
    "OptimizerError",
    "ConfigError",
    "ShapeError",
    "NumericsError",
    "PreconditionError",
    "GradientCheckError",
    "CheckpointError",
    "UnknownNameError",
    "aggregate",
    "available_backends",
    "backend_name",
    "build_problem",
    "gradcheck",
    "logistic_regression",
    "make_optimizer",
    "optimizer_names",
    "problem_names",
    "quadratic",
    "rosenbrock",
    "run_compare",
    "run_single",
    "set_backend",
    "tiny_mlp",
    "validate_problem",
]
