"""From accumulated sums to transition-matrix estimates.

The pipeline at one evaluation point is::

    a_hat -> (complete missing rows) -> p_hat_ell for each lag -> aggregate

with the lag weights from :func:`pi_hat_weights`.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..markov import GeneratorMatrix, NotGenerator, StochasticMatrix, validate_stochastic
from ..matfun import MatrixFunctionError, mat_exp, mat_log_principal
from .bank import AccumulatorBank

__all__ = [
    "LogUnavailable",
    "NoUsableLag",
    "EmptyRange",
    "AHat",
    "LagEstimate",
    "EstimateBundle",
    "a_hat",
    "pi_hat_weights",
    "regularize_generator",
    "p_hat_ell",
    "aggregate",
    "estimate",
    "DEFAULT_LAGS",
]

DEFAULT_LAGS = (6, 20)
MISSING_REL_TOL = 1e-12
GENERATOR_TOL = 1e-10


class LogUnavailable(ArithmeticError):
    pass


class NoUsableLag(ValueError):
    pass


class EmptyRange(ValueError):
    pass


@dataclass(frozen=True)
class AHat:
    """Ratio estimate at one (z, lag); rows without data are zero and flagged."""

    matrix: np.ndarray
    missing: np.ndarray

    @property
    def any_missing(self) -> bool:
        return bool(self.missing.any())

    @property
    def all_missing(self) -> bool:
        return bool(self.missing.all())

    def completed(self) -> StochasticMatrix:
        """Stochastic matrix with each missing row replaced by the unit row e_i."""
        A = self.matrix.copy()
        idx = np.flatnonzero(self.missing)
        A[idx] = 0.0
        A[idx, idx] = 1.0
        return validate_stochastic(A)


def _ratio(U_T: np.ndarray, U_B: np.ndarray, threshold: float) -> AHat:
    missing = ~(U_B > threshold)
    A = np.zeros_like(U_T)
    ok = ~missing
    A[ok] = U_T[ok] / U_B[ok, None]
    return AHat(matrix=A, missing=missing)


def a_hat(bank: AccumulatorBank, z_index: int, ell: int) -> AHat:
    """``U_T / U_B`` row by row with the 0/0 = 0 convention."""
    if not 1 <= ell <= bank.L_max:
        raise ValueError(f"lag {ell} outside 1..{bank.L_max}")
    return _ratio(
        bank.U_T[z_index, ell - 1], bank.U_B[z_index, ell - 1],
        MISSING_REL_TOL * bank.omega_sum,
    )


def pi_hat_weights(bank: AccumulatorBank, z_index: int, lags: tuple[int, int] = DEFAULT_LAGS) -> np.ndarray:
    """Relative mass of each lag in ``lags`` (inclusive) at one grid point."""
    lo, hi = lags
    if not 1 <= lo <= hi <= bank.L_max:
        raise ValueError(f"lag range {lo}:{hi} not within 1..{bank.L_max}")
    mass = bank.U_B[z_index, lo - 1:hi].sum(axis=1)
    total = mass.sum()
    if not total > 0:
        raise EmptyRange(f"no observations with gaps in {lo}..{hi} at grid point {z_index}")
    return mass / total


def regularize_generator(B, mode: str = "weighted") -> GeneratorMatrix:
    """Repair a candidate logarithm into a generator.

    Negative off-diagonal entries are zeroed first. ``mode="diagonal"`` then
    resets each diagonal entry to minus the off-diagonal row sum;
    ``mode="weighted"`` spreads each row's excess over its entries in
    proportion to their magnitudes, then puts the rounding residue on the
    diagonal so each adjusted row sums to zero exactly. Both modes are
    idempotent.

    Raises
    ------
    NotGenerator
        If the weighted adjustment leaves an invalid entry.
    """
    if mode not in ("diagonal", "weighted"):
        raise ValueError(f"unknown regularization mode {mode!r}")
    B = np.array(B, dtype=float)
    n = B.shape[0]
    off = ~np.eye(n, dtype=bool)
    B[off & (B < 0)] = 0.0
    if mode == "diagonal":
        B[np.diag_indices(n)] = 0.0
        B[np.diag_indices(n)] = -B.sum(axis=1)
        return GeneratorMatrix(B)
    for i in range(n):
        row = B[i]
        rest = np.delete(row, i).sum()
        total = row.sum()
        mag = np.abs(row).sum()
        # rows already balanced to rounding are left alone (keeps it idempotent)
        if row[i] == -rest or mag == 0.0 or abs(total) <= 4 * n * np.finfo(float).eps * mag:
            continue
        t = min(max(total / mag, -1.0), 1.0)
        B[i] = row - np.abs(row) * t
        # absorb the rounding residue in the diagonal so the row is exactly balanced
        B[i, i] = -np.delete(B[i], i).sum()
    offv = B[off]
    if offv.min() < -1e-12 or np.diag(B).max() > 1e-12:
        raise NotGenerator("weighted adjustment did not yield a generator")
    return GeneratorMatrix(B)


def _is_near_generator(B: np.ndarray, tol: float = GENERATOR_TOL) -> bool:
    off = B[~np.eye(B.shape[0], dtype=bool)]
    return off.min() >= -tol and np.abs(B.sum(axis=1)).max() <= tol


@dataclass(frozen=True)
class LagEstimate:
    ell: int
    P_hat: StochasticMatrix
    B_hat: GeneratorMatrix
    regularized: bool = False
    fallback_diagonal: bool = False


def p_hat_ell(A, ell: int, reg_mode: str = "weighted") -> LagEstimate:
    """``exp(log(A) / ell)`` with the logarithm repaired into a generator if needed.

    Raises
    ------
    LogUnavailable
        ``A`` has no principal real logarithm.
    """
    if ell < 1:
        raise ValueError("ell must be >= 1")
    A = validate_stochastic(A)
    try:
        B = mat_log_principal(A.entries)
    except MatrixFunctionError as exc:
        raise LogUnavailable(str(exc)) from exc
    regularized = fallback = False
    if _is_near_generator(B):
        # drift at the 1e-10 level is projected away silently
        G = regularize_generator(B, "diagonal")
    else:
        regularized = True
        try:
            G = regularize_generator(B, reg_mode)
        except NotGenerator:
            fallback = True
            G = regularize_generator(B, "diagonal")
    P = validate_stochastic(mat_exp(G.entries / ell))
    return LagEstimate(ell=ell, P_hat=P, B_hat=G, regularized=regularized, fallback_diagonal=fallback)


def aggregate(matrices: dict[int, StochasticMatrix], weights: dict[int, float]) -> StochasticMatrix:
    """Weighted mean of per-lag estimates, renormalising over the lags present.

    Lags with an entry in ``weights`` but none in ``matrices`` are dropped.
    """
    lags = sorted(l for l in matrices if weights.get(l, 0.0) > 0.0)
    if not lags:
        raise NoUsableLag("no lag with a usable estimate and positive weight")
    w = np.array([weights[l] for l in lags], dtype=float)
    w = w / w.sum()
    out = np.zeros_like(np.asarray(matrices[lags[0]], dtype=float))
    for wl, l in zip(w, lags):
        out += wl * np.asarray(matrices[l], dtype=float)
    return validate_stochastic(out)


@dataclass
class LagDiagnostics:
    weight: float
    log_failed: bool = False
    regularized: bool = False
    fallback_diagonal: bool = False
    rows_missing: tuple[int, ...] = ()


@dataclass
class EstimateBundle:
    z_index: int
    lags: tuple[int, int]
    per_lag: dict[int, tuple[StochasticMatrix, LagEstimate]] = field(default_factory=dict)
    diagnostics: dict[int, LagDiagnostics] = field(default_factory=dict)
    aggregated: StochasticMatrix | None = None
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.aggregated is not None

    @property
    def regularized_lags(self) -> list[int]:
        return [l for l, d in self.diagnostics.items() if d.regularized]

    @property
    def failed_lags(self) -> list[int]:
        return [l for l, d in self.diagnostics.items() if d.log_failed]

    def to_json(self) -> dict:
        out: dict = {"lags": list(self.lags), "error": self.error}
        out["aggregated"] = None if self.aggregated is None else self.aggregated.entries.tolist()
        per = {}
        for l, d in self.diagnostics.items():
            rec: dict = {
                "weight": d.weight,
                "log_failed": d.log_failed,
                "regularized": d.regularized,
                "fallback_diagonal": d.fallback_diagonal,
                "rows_missing": [r + 1 for r in d.rows_missing],
            }
            if l in self.per_lag:
                A, est = self.per_lag[l]
                rec["A_hat"] = A.entries.tolist()
                rec["B_hat"] = est.B_hat.entries.tolist()
                rec["P_hat"] = est.P_hat.entries.tolist()
            per[str(l)] = rec
        out["per_lag"] = per
        return out


def estimate(
    bank: AccumulatorBank,
    z_index: int,
    lags: tuple[int, int] = DEFAULT_LAGS,
    reg_mode: str = "weighted",
) -> EstimateBundle:
    """Full estimate at one grid point. Failures are recorded, not raised."""
    bundle = EstimateBundle(z_index=z_index, lags=tuple(lags))
    try:
        pi = pi_hat_weights(bank, z_index, lags)
    except EmptyRange as exc:
        bundle.error = f"NoUsableLag: {exc}"
        return bundle
    lo, hi = lags
    matrices: dict[int, StochasticMatrix] = {}
    weights: dict[int, float] = {}
    for ell, w in zip(range(lo, hi + 1), pi):
        diag = LagDiagnostics(weight=float(w))
        bundle.diagnostics[ell] = diag
        if w == 0.0:
            continue
        ah = a_hat(bank, z_index, ell)
        diag.rows_missing = tuple(int(i) for i in np.flatnonzero(ah.missing))
        A = ah.completed()
        try:
            est = p_hat_ell(A, ell, reg_mode)
        except LogUnavailable:
            diag.log_failed = True
            continue
        diag.regularized = est.regularized
        diag.fallback_diagonal = est.fallback_diagonal
        bundle.per_lag[ell] = (A, est)
        matrices[ell] = est.P_hat
        weights[ell] = float(w)
    try:
        bundle.aggregated = aggregate(matrices, weights)
    except NoUsableLag as exc:
        bundle.error = f"NoUsableLag: {exc}"
    return bundle
