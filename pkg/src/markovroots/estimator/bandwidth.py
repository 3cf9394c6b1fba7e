"""Bandwidth and weight schedules for the recursive estimator, and the
closed-form bandwidth constants."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

__all__ = [
    "BandwidthSchedule",
    "DegenerateHessian",
    "optimal_exponent",
    "recursive_shrink_factor",
    "optimal_bandwidth_constant",
]


class DegenerateHessian(ValueError):
    pass


@dataclass(frozen=True)
class BandwidthSchedule:
    """``h_m = c * sigma_scale * m^-alpha`` and ``w_m = m^beta`` for path index m."""

    c: float = 1.0
    alpha: float = 0.2
    beta: float = 0.0
    sigma_scale: float | None = None

    def __post_init__(self):
        if not self.c > 0:
            raise ValueError("c must be positive")
        if not self.alpha > 0:
            raise ValueError("alpha must be positive")
        if self.beta < 0:
            raise ValueError("beta must be nonnegative")
        if self.sigma_scale is not None and not self.sigma_scale > 0:
            raise ValueError("sigma_scale must be positive")

    def check(self, p: int) -> None:
        """Validate the rate constraints for ``p`` continuous covariates."""
        if p > 0 and not self.alpha < 1.0 / p:
            raise ValueError(f"alpha={self.alpha} must be below 1/p={1.0 / p:g}")
        if not self.beta <= self.alpha * p + 1e-15:
            raise ValueError(f"beta={self.beta} exceeds alpha*p={self.alpha * p:g}")

    def bandwidth(self, m):
        scale = 1.0 if self.sigma_scale is None else self.sigma_scale
        return self.c * scale * np.asarray(m, dtype=float) ** (-self.alpha)

    def weight(self, m):
        if self.beta == 0.0:
            return np.ones_like(np.asarray(m, dtype=float))
        return np.asarray(m, dtype=float) ** self.beta

    def to_json(self) -> dict:
        return asdict(self)

    @classmethod
    def from_json(cls, obj: dict) -> "BandwidthSchedule":
        return cls(**obj)


def optimal_exponent(p: int) -> float:
    return 1.0 / (p + 4)


def recursive_shrink_factor(beta: float, p: int) -> float:
    """Ratio of the recursive to the batch optimal bandwidth, ``c_r(beta)``."""
    alpha = optimal_exponent(p)
    if not 0.0 <= beta <= alpha * p + 1e-15:
        raise ValueError(f"beta must lie in [0, {alpha * p:g}]")
    cr = ((beta * p + p + 2.0) / (2.0 * (p + 4.0))) ** (1.0 / (p + 4.0))
    assert cr < 1.0, cr
    return cr


def optimal_bandwidth_constant(
    beta: float,
    p: int,
    G_value: float,
    trace_hessian: float,
    c_K: float,
    mu2: float,
    L: int,
    alpha: float | None = None,
) -> float:
    """Constant ``c`` minimising the leading squared bias plus variance.

    Parameters
    ----------
    beta, p
        Weight exponent and number of continuous covariates.
    G_value, trace_hessian
        Target density value at z and the trace of its Hessian in z_c.
    c_K, mu2
        Kernel constants.
    L
        Observation window length.
    alpha
        Must equal ``1/(p+4)`` if given.
    """
    opt = optimal_exponent(p)
    if alpha is None:
        alpha = opt
    elif abs(alpha - opt) > 1e-12:
        raise ValueError(f"the closed form needs alpha = 1/(p+4) = {opt:g}")
    if trace_hessian == 0:
        raise DegenerateHessian("trace of the Hessian is zero; no finite optimum")
    for name, v in (("G_value", G_value), ("c_K", c_K), ("mu2", mu2), ("L", L)):
        if not v > 0:
            raise ValueError(f"{name} must be positive")
    num = p * (1.0 + beta - 2.0 * alpha) ** 2 * L * c_K**p * G_value
    den = (1.0 + alpha * p + 2.0 * beta) * (mu2 * trace_hessian) ** 2
    return (num / den) ** alpha
