"""Kernel-weighted estimation of conditional transition matrices."""

from .bandwidth import (
    BandwidthSchedule,
    DegenerateHessian,
    optimal_bandwidth_constant,
    optimal_exponent,
    recursive_shrink_factor,
)
from .bank import (
    AccumulatorBank,
    ScheduleMismatch,
    ShapeMismatch,
    StateOutOfRange,
    VersionMismatch,
    merge_banks,
)
from .estimates import (
    DEFAULT_LAGS,
    AHat,
    EmptyRange,
    EstimateBundle,
    LagEstimate,
    LogUnavailable,
    NoUsableLag,
    a_hat,
    aggregate,
    estimate,
    p_hat_ell,
    pi_hat_weights,
    regularize_generator,
)
from .kernels import KernelSpec

__all__ = [
    "AccumulatorBank", "AHat", "BandwidthSchedule", "DEFAULT_LAGS", "DegenerateHessian",
    "EmptyRange", "EstimateBundle", "KernelSpec", "LagEstimate", "LogUnavailable",
    "NoUsableLag", "ScheduleMismatch", "ShapeMismatch", "StateOutOfRange",
    "VersionMismatch", "a_hat", "aggregate", "estimate", "merge_banks",
    "optimal_bandwidth_constant", "optimal_exponent", "p_hat_ell", "pi_hat_weights",
    "recursive_shrink_factor", "regularize_generator",
]
