"""Estimation of conditional Markov transition matrices from sample paths
observed at random times."""

from ._backend import BACKEND
from .markov import (
    P_FIVE_STATE,
    P_THREE_STATE,
    CovariatePoint,
    GeneratorMatrix,
    LinkModel,
    PsiSpec,
    StochasticMatrix,
    link_evaluate,
    matrix_power,
    validate_stochastic,
)
from .paths import SamplePath, read_jsonl, write_jsonl

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "CovariatePoint", "GeneratorMatrix", "LinkModel", "P_FIVE_STATE",
    "P_THREE_STATE", "PsiSpec", "SamplePath", "StochasticMatrix", "link_evaluate",
    "matrix_power", "read_jsonl", "validate_stochastic", "write_jsonl", "__version__",
]
