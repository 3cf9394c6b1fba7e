"""Univariate smoothing kernels and the product kernel over covariates."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = ["KernelSpec", "KERNEL_KINDS"]

KERNEL_KINDS = ("gaussian", "epanechnikov", "triangular")

# (c_K = int K^2, mu_2 = int u^2 K)
_CONSTANTS = {
    "gaussian": (1.0 / (2.0 * math.sqrt(math.pi)), 1.0),
    "epanechnikov": (3.0 / 5.0, 1.0 / 5.0),
    "triangular": (2.0 / 3.0, 1.0 / 6.0),
}


@dataclass(frozen=True)
class KernelSpec:
    kind: str = "gaussian"

    def __post_init__(self):
        if self.kind not in KERNEL_KINDS:
            raise ValueError(f"unknown kernel {self.kind!r}; choose from {KERNEL_KINDS}")

    @property
    def c_K(self) -> float:
        return _CONSTANTS[self.kind][0]

    @property
    def mu2(self) -> float:
        return _CONSTANTS[self.kind][1]

    def __call__(self, u):
        u = np.asarray(u, dtype=float)
        if self.kind == "gaussian":
            return np.exp(-0.5 * u * u) / math.sqrt(2.0 * math.pi)
        a = np.abs(u)
        if self.kind == "epanechnikov":
            return np.where(a <= 1.0, 0.75 * (1.0 - u * u), 0.0)
        return np.where(a <= 1.0, 1.0 - a, 0.0)

    def product(self, Zc: np.ndarray, grid_c: np.ndarray, h: np.ndarray) -> np.ndarray:
        """``h^-p prod_k K((Zc_k - z_k) / h)`` for every (path, grid point).

        Zc has shape (n, p), grid_c (G, p), h (n,); the result is (n, G).
        """
        n, p = Zc.shape
        if p == 0:
            return np.ones((n, grid_c.shape[0]))
        u = (Zc[:, None, :] - grid_c[None, :, :]) / h[:, None, None]
        return np.prod(self(u), axis=2) / h[:, None] ** p
