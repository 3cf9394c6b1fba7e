"""Transition matrices, generators, covariate points and the softmax link model."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

__all__ = [
    "NotStochastic",
    "NotGenerator",
    "StochasticMatrix",
    "GeneratorMatrix",
    "CovariatePoint",
    "PsiSpec",
    "LinkModel",
    "register_psi",
    "link_evaluate",
    "matrix_power",
    "validate_stochastic",
    "P_THREE_STATE",
    "P_FIVE_STATE",
    "ground_truth",
]


class NotStochastic(ValueError):
    """Raised when a matrix cannot be accepted as row-stochastic.

    ``rows`` holds ``(row_index, deviation)`` pairs for the offending rows.
    """

    def __init__(self, message: str, rows: list[tuple[int, float]] | None = None):
        super().__init__(message)
        self.rows = rows or []


class NotGenerator(ValueError):
    pass


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


class _MatrixValue:
    entries: np.ndarray

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def __array__(self, dtype=None, copy=None):
        if dtype is None:
            return self.entries
        return self.entries.astype(dtype)

    def to_json(self) -> dict:
        return {"dim": self.dim, "rows": self.entries.tolist()}

    @classmethod
    def from_json(cls, obj: dict):
        rows = obj["rows"]
        if "dim" in obj and obj["dim"] != len(rows):
            raise ValueError(f"dim {obj['dim']} does not match {len(rows)} rows")
        return cls(rows)

    def __eq__(self, other):
        if type(other) is not type(self):
            return NotImplemented
        return np.array_equal(self.entries, other.entries)

    def __hash__(self):
        return hash(self.entries.tobytes())

    def __repr__(self):
        return f"{type(self).__name__}({self.entries.tolist()!r})"


def _check_square(a: np.ndarray) -> None:
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 2:
        raise ValueError(f"expected a square matrix of dimension >= 2, got {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix has non-finite entries")


class StochasticMatrix(_MatrixValue):
    """Immutable row-stochastic matrix."""

    ENTRY_TOL = 1e-12
    ROW_TOL = 1e-10

    def __init__(self, entries):
        a = _frozen(entries)
        _check_square(a)
        if a.min() < -self.ENTRY_TOL or a.max() > 1.0 + self.ENTRY_TOL:
            raise NotStochastic("entries outside [0, 1]")
        dev = np.abs(a.sum(axis=1) - 1.0)
        if dev.max() > self.ROW_TOL:
            bad = [(int(i), float(dev[i])) for i in np.flatnonzero(dev > self.ROW_TOL)]
            raise NotStochastic("row sums differ from 1", bad)
        self.entries = a


class GeneratorMatrix(_MatrixValue):
    """Immutable Q-matrix: nonnegative off-diagonal entries, zero row sums."""

    ENTRY_TOL = 1e-12
    ROW_TOL = 1e-10

    def __init__(self, entries):
        a = _frozen(entries)
        _check_square(a)
        off = a[~np.eye(a.shape[0], dtype=bool)]
        if off.min() < -self.ENTRY_TOL:
            raise NotGenerator(f"negative off-diagonal entry {off.min():.3g}")
        if np.diag(a).max() > self.ENTRY_TOL:
            raise NotGenerator("positive diagonal entry")
        if np.abs(a.sum(axis=1)).max() > self.ROW_TOL:
            raise NotGenerator("row sums differ from 0")
        self.entries = a

    def __truediv__(self, ell: float) -> "GeneratorMatrix":
        return GeneratorMatrix(self.entries / ell)


@dataclass(frozen=True)
class CovariatePoint:
    """``z = (z_c, z_d)``; both parts empty means the unconditional case."""

    continuous: tuple[float, ...] = ()
    discrete: tuple[int, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "continuous", tuple(float(v) for v in self.continuous))
        object.__setattr__(self, "discrete", tuple(int(v) for v in self.discrete))

    @property
    def p(self) -> int:
        return len(self.continuous)

    def to_json(self) -> dict:
        return {"z_c": list(self.continuous), "z_d": list(self.discrete)}

    @classmethod
    def from_json(cls, obj: dict) -> "CovariatePoint":
        return cls(tuple(obj.get("z_c", ())), tuple(obj.get("z_d", ())))


# --------------------------------------------------------------------------
# link model
# --------------------------------------------------------------------------

_PSI_REGISTRY: dict[str, Callable[[CovariatePoint], float]] = {}


def register_psi(name: str, fn: Callable[[CovariatePoint], float]) -> None:
    """Register a named scalar covariate index usable from config files."""
    _PSI_REGISTRY[name] = fn


@dataclass(frozen=True)
class PsiSpec:
    """Scalar covariate index ``psi(z)`` in declared form.

    ``terms`` is a sequence of ``(coef, c_idx, d_idx)``; each term contributes
    ``coef * prod(z_c[c_idx]) * prod(z_d[d_idx])``. Alternatively ``name``
    selects a function registered with :func:`register_psi`.
    """

    terms: tuple[tuple[float, tuple[int, ...], tuple[int, ...]], ...] = ()
    name: str | None = None

    def __call__(self, z: CovariatePoint) -> float:
        if self.name is not None:
            try:
                fn = _PSI_REGISTRY[self.name]
            except KeyError:
                raise KeyError(f"unknown psi function {self.name!r}") from None
            return float(fn(z))
        total = 0.0
        for coef, c_idx, d_idx in self.terms:
            v = coef
            for c in c_idx:
                v *= z.continuous[c]
            for d in d_idx:
                v *= z.discrete[d]
            total += v
        return total

    @classmethod
    def reference(cls) -> "PsiSpec":
        # 3 z_c (1.2 z_d + 0.8 (1 - z_d)) = 2.4 z_c + 1.2 z_c z_d
        return cls(terms=((2.4, (0,), ()), (1.2, (0,), (0,))))

    def to_json(self) -> dict:
        if self.name is not None:
            return {"name": self.name}
        return {"terms": [[c, list(ci), list(di)] for c, ci, di in self.terms]}

    @classmethod
    def from_json(cls, obj) -> "PsiSpec":
        if obj == "reference":
            return cls.reference()
        if "name" in obj:
            return cls(name=obj["name"])
        return cls(terms=tuple((float(c), tuple(ci), tuple(di)) for c, ci, di in obj["terms"]))


@dataclass(frozen=True)
class LinkModel:
    base: StochasticMatrix
    psi: PsiSpec = field(default_factory=PsiSpec.reference)

    def evaluate(self, z: CovariatePoint) -> StochasticMatrix:
        return link_evaluate(self, z)


def link_evaluate(model: LinkModel, z: CovariatePoint) -> StochasticMatrix:
    """Row-wise softmax of ``p_ij * psi(z)``."""
    x = model.base.entries * model.psi(z)
    x = np.exp(x - x.max(axis=1, keepdims=True))
    return StochasticMatrix(x / x.sum(axis=1, keepdims=True))


def matrix_power(P, ell: int) -> StochasticMatrix:
    """``P^ell`` by repeated multiplication."""
    if ell < 1:
        raise ValueError("ell must be >= 1")
    P = np.asarray(P, dtype=float)
    out = P
    for _ in range(ell - 1):
        out = out @ P
    return StochasticMatrix(out)


def validate_stochastic(M, tol: float = 1e-10) -> StochasticMatrix:
    """Accept ``M`` as stochastic after repairing deviations up to ``tol``.

    Entries in ``[-tol, 0)`` are set to zero and rows whose sums are within
    ``tol`` of one are rescaled (deviations at rounding level are left
    alone). Anything larger raises :class:`NotStochastic`.
    """
    a = np.array(M, dtype=float)
    _check_square(a)
    bad: list[tuple[int, float]] = []
    for i, row in enumerate(a):
        if row.min() < -tol:
            bad.append((i, float(row.min())))
        elif row.max() > 1.0 + tol:
            bad.append((i, float(row.max() - 1.0)))
    if bad:
        raise NotStochastic("entries outside [0, 1] beyond tolerance", bad)
    a[a < 0.0] = 0.0
    sums = a.sum(axis=1)
    dev = np.abs(sums - 1.0)
    if dev.max() > tol:
        bad = [(int(i), float(sums[i] - 1.0)) for i in np.flatnonzero(dev > tol)]
        raise NotStochastic("row sums differ from 1 beyond tolerance", bad)
    # rows already exact up to summation rounding are left untouched
    fix = dev > a.shape[0] * np.finfo(float).eps
    a[fix] /= sums[fix, None]
    return StochasticMatrix(a)


P_THREE_STATE = StochasticMatrix(
    np.array([
        [94.0007, 3.4412, 2.5581],
        [3.8810, 92.5639, 3.5551],
        [0.3831, 2.5038, 97.1131],
    ]) / 100.0
)

P_FIVE_STATE = StochasticMatrix(
    np.array([
        [91.4828, 1.7832, 1.5797, 3.9951, 1.1592],
        [0.4332, 94.0624, 3.5217, 0.1473, 1.8354],
        [0.8712, 1.7389, 93.1986, 1.1289, 3.0624],
        [0.3389, 3.0794, 2.7967, 90.3348, 3.4502],
        [0.3325, 3.7597, 4.3798, 2.8478, 88.6802],
    ]) / 100.0
)


def ground_truth(S: int) -> StochasticMatrix:
    """The built-in three- or five-state reference matrix."""
    try:
        return {3: P_THREE_STATE, 5: P_FIVE_STATE}[S]
    except KeyError:
        raise ValueError(f"no built-in matrix for S={S}; supply one") from None


def as_matrix(obj: StochasticMatrix | Sequence) -> StochasticMatrix:
    return obj if isinstance(obj, StochasticMatrix) else StochasticMatrix(obj)
