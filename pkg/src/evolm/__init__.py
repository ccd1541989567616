"""evolm: conv features + extreme learning machine head, tuned by a
sine-cosine optimizer, with the benchmarking and evaluation apparatus."""

from . import benchfns, cli, cnn, dataset, elm, evaluation, numerics, pipeline, sca
from .errors import (
    DomainError,
    EvolmError,
    ParseError,
    ShapeError,
    StateError,
    UndefinedRateError,
)

__version__ = "0.1.0"

__all__ = [
    "benchfns",
    "cli",
    "cnn",
    "dataset",
    "elm",
    "evaluation",
    "numerics",
    "pipeline",
    "sca",
    "EvolmError",
    "ShapeError",
    "DomainError",
    "ParseError",
    "StateError",
    "UndefinedRateError",
    "__version__",
]
