"""Dense matrix functions for small transition and generator matrices.

Everything here works on real ``(S, S)`` arrays with ``S`` up to a few
dozen: the exponential (Padé scaling and squaring), the principal real
logarithm (inverse scaling and squaring), the truncated Mercator series,
spectral diagnostics and two embeddability checks.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

__all__ = [
    "MatrixFunctionError",
    "MagnitudeError",
    "SingularMatrixError",
    "NegativeEigenvalueError",
    "DivergenceRiskError",
    "Spectrum",
    "Uniqueness",
    "mat_exp",
    "mat_log_principal",
    "mercator_log",
    "spectrum",
    "sqrtm_db",
    "is_m_matrix_inverse",
    "generator_uniqueness_check",
    "spectral_norm",
]

# branch-cut test for the principal logarithm
CUT_IMAG_TOL = 1e-10
CUT_REAL_TOL = 1e-12
SINGULAR_TOL = 1e-12


class MatrixFunctionError(ArithmeticError):
    """Base class for failures of the matrix functions."""


class MagnitudeError(MatrixFunctionError, OverflowError):
    pass


class SingularMatrixError(MatrixFunctionError):
    pass


class NegativeEigenvalueError(MatrixFunctionError):
    pass


class DivergenceRiskError(MatrixFunctionError):
    pass


def _as_square(A) -> np.ndarray:
    A = np.array(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValueError("matrix has non-finite entries")
    return A


# --------------------------------------------------------------------------
# exponential
# --------------------------------------------------------------------------

_PADE = {
    3: (120.0, 60.0, 12.0, 1.0),
    5: (30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0),
    7: (17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0),
    9: (17643225600.0, 8821612800.0, 2075673600.0, 302702400.0, 30270240.0,
        2162160.0, 110880.0, 3960.0, 90.0, 1.0),
    13: (64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
         1187353796428800.0, 129060195264000.0, 10559470521600.0,
         670442572800.0, 33522128640.0, 1323241920.0, 40840800.0, 960960.0,
         16380.0, 182.0, 1.0),
}
# 1-norm bounds below which the [m/m] approximant is accurate to unit roundoff
_THETA = {3: 1.495585217958292e-2, 5: 2.539398330063230e-1,
          7: 9.504178996162932e-1, 9: 2.097847961257068e0,
          13: 5.371920351148152e0}
_MAX_SQUARINGS = 1000


def _pade_uv(A: np.ndarray, m: int) -> tuple[np.ndarray, np.ndarray]:
    b = _PADE[m]
    ident = np.eye(A.shape[0])
    A2 = A @ A
    if m == 13:
        A4 = A2 @ A2
        A6 = A4 @ A2
        U = A @ (A6 @ (b[13] * A6 + b[11] * A4 + b[9] * A2)
                 + b[7] * A6 + b[5] * A4 + b[3] * A2 + b[1] * ident)
        V = (A6 @ (b[12] * A6 + b[10] * A4 + b[8] * A2)
             + b[6] * A6 + b[4] * A4 + b[2] * A2 + b[0] * ident)
        return U, V
    powers = [ident, A2]
    while len(powers) < (m + 1) // 2:
        powers.append(powers[-1] @ A2)
    U = A @ sum(b[2 * k + 1] * powers[k] for k in range(len(powers)))
    V = sum(b[2 * k] * powers[k] for k in range(len(powers)))
    return U, V


def mat_exp(Q) -> np.ndarray:
    """Matrix exponential by Padé approximation with scaling and squaring.

    Parameters
    ----------
    Q : array_like, shape (S, S)

    Returns
    -------
    ndarray
        ``exp(Q)``. The zero matrix maps exactly to the identity.

    Raises
    ------
    MagnitudeError
        If the entries are too large for the scaling to stay finite.
    """
    A = _as_square(Q)
    n = A.shape[0]
    if not A.any():
        return np.eye(n)
    norm1 = np.abs(A).sum(axis=0).max()
    for m in (3, 5, 7, 9):
        if norm1 <= _THETA[m]:
            U, V = _pade_uv(A, m)
            return np.linalg.solve(V - U, V + U)
    s = max(0, int(np.ceil(np.log2(norm1 / _THETA[13]))))
    if s > _MAX_SQUARINGS:
        raise MagnitudeError(f"norm {norm1:.3g} too large for scaling and squaring")
    U, V = _pade_uv(A / 2.0**s, 13)
    X = np.linalg.solve(V - U, V + U)
    with np.errstate(over="ignore", invalid="ignore"):
        for _ in range(s):
            X = X @ X
    if not np.all(np.isfinite(X)):
        raise MagnitudeError("matrix exponential overflowed")
    return X


# --------------------------------------------------------------------------
# spectrum
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Spectrum:
    """Eigenvalues of a matrix together with two distances used as log diagnostics."""

    eigenvalues: np.ndarray
    min_modulus: float
    dist_to_neg_axis: float

    @property
    def spectral_radius(self) -> float:
        return float(np.abs(self.eigenvalues).max())


def _dist_to_neg_axis(lam: np.ndarray) -> np.ndarray:
    return np.where(lam.real <= 0.0, np.abs(lam.imag), np.abs(lam))


def spectrum(A) -> Spectrum:
    """Eigenvalues, smallest modulus and distance to the half-line ``(-inf, 0]``."""
    A = _as_square(A)
    lam = np.linalg.eigvals(A)
    return Spectrum(
        eigenvalues=lam,
        min_modulus=float(np.abs(lam).min()),
        dist_to_neg_axis=float(_dist_to_neg_axis(lam).min()),
    )


# --------------------------------------------------------------------------
# logarithm
# --------------------------------------------------------------------------


def sqrtm_db(A, tol: float = 1e-14, max_iter: int = 100) -> np.ndarray:
    """Principal square root by the product form of the Denman-Beavers iteration."""
    A = _as_square(A)
    ident = np.eye(A.shape[0])
    M = A.copy()
    Y = A.copy()
    for _ in range(max_iter):
        Minv = np.linalg.inv(M)
        Y = 0.5 * Y @ (ident + Minv)
        M = 0.5 * (ident + 0.5 * (M + Minv))
        if np.abs(M - ident).sum(axis=0).max() <= tol:
            return Y
    raise MatrixFunctionError("Denman-Beavers iteration did not converge")


_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(10)
# nodes and weights mapped from [-1, 1] to [0, 1]
_GL_NODES = 0.5 * (_GL_NODES + 1.0)
_GL_WEIGHTS = 0.5 * _GL_WEIGHTS


def _log_near_identity(X: np.ndarray) -> np.ndarray:
    # log(I + X) = X * int_0^1 (I + tX)^{-1} dt, by Gauss-Legendre quadrature
    # (equivalently the diagonal Padé approximant of matching degree).
    ident = np.eye(X.shape[0])
    out = np.zeros_like(X)
    for t, w in zip(_GL_NODES, _GL_WEIGHTS):
        out += w * np.linalg.solve((ident + t * X).T, X.T).T
    return out


def _check_log_domain(A: np.ndarray) -> None:
    lam = np.linalg.eigvals(A)
    if np.abs(lam).min() < SINGULAR_TOL:
        raise SingularMatrixError("matrix is singular; logarithm undefined")
    on_cut = (np.abs(lam.imag) < CUT_IMAG_TOL) & (lam.real <= CUT_REAL_TOL)
    if on_cut.any():
        bad = lam[on_cut][0].real
        raise NegativeEigenvalueError(
            f"eigenvalue {bad:.6g} on the negative real axis; no principal real logarithm"
        )


def mat_log_principal(A, radius: float = 0.25, max_roots: int = 64) -> np.ndarray:
    """Principal real logarithm by inverse scaling and squaring.

    Square roots are taken until ``||A^(1/2^k) - I||_1 < radius``; the
    logarithm of the root is then evaluated by quadrature of the integral
    representation and scaled back by ``2^k``.

    Raises
    ------
    SingularMatrixError
        An eigenvalue has modulus below ``1e-12``.
    NegativeEigenvalueError
        An eigenvalue lies on the closed negative real half-line.
    """
    A = _as_square(A)
    _check_log_domain(A)
    ident = np.eye(A.shape[0])
    X = A
    k = 0
    while np.abs(X - ident).sum(axis=0).max() >= radius:
        if k >= max_roots:
            raise MatrixFunctionError("too many square roots needed")
        X = sqrtm_db(X)
        k += 1
    return 2.0**k * _log_near_identity(X - ident)


def mercator_log(A, terms: int) -> np.ndarray:
    """Partial sum of ``B - B^2/2 + B^3/3 - ...`` with ``B = A - I``.

    Raises
    ------
    DivergenceRiskError
        When the spectral radius of ``A - I`` is not below 1.
    """
    if terms < 1:
        raise ValueError("terms must be positive")
    A = _as_square(A)
    B = A - np.eye(A.shape[0])
    rho = np.abs(np.linalg.eigvals(B)).max()
    if rho >= 1.0:
        raise DivergenceRiskError(f"spectral radius of A - I is {rho:.4g} >= 1")
    out = np.zeros_like(B)
    power = np.eye(B.shape[0])
    for k in range(1, terms + 1):
        power = power @ B
        out += (power if k % 2 else -power) / k
    return out


# --------------------------------------------------------------------------
# embeddability diagnostics
# --------------------------------------------------------------------------


def is_m_matrix_inverse(P, tol: float = 1e-12) -> bool:
    """True when ``P^{-1} = sI - B`` with ``B >= 0`` and ``s > rho(B)``.

    Singular input gives False.
    """
    P = _as_square(P)
    try:
        Pinv = np.linalg.inv(P)
    except np.linalg.LinAlgError:
        return False
    if not np.all(np.isfinite(Pinv)) or np.linalg.cond(P) > 1e12:
        return False
    scale = max(1.0, np.abs(Pinv).max())
    off = Pinv - np.diag(np.diag(Pinv))
    if off.max() > tol * scale:
        return False
    s = np.diag(Pinv).max()
    B = s * np.eye(P.shape[0]) - Pinv
    B[B < 0] = 0.0
    return bool(s > np.abs(np.linalg.eigvals(B)).max())


class Uniqueness(str, enum.Enum):
    UNIQUE = "unique"
    INCONCLUSIVE = "inconclusive"


def generator_uniqueness_check(P) -> Uniqueness:
    """Sufficient conditions for a unique generator of an embeddable ``P``.

    ``UNIQUE`` if ``min_i P_ii > 1/2`` or
    ``min_i P_ii * det(P) > exp(-pi) * prod_i P_ii``.
    """
    P = _as_square(P)
    d = np.diag(P)
    dmin = d.min()
    if dmin > 0.5:
        return Uniqueness.UNIQUE
    if dmin * np.linalg.det(P) > np.exp(-np.pi) * np.prod(d):
        return Uniqueness.UNIQUE
    return Uniqueness.INCONCLUSIVE


def spectral_norm(U, tol: float = 1e-10, max_iter: int = 10_000) -> float:
    """Largest singular value by power iteration on ``U^T U``."""
    U = np.asarray(U, dtype=float)
    M = U.T @ U
    n = M.shape[0]
    if not M.any():
        return 0.0
    # fixed, generic starting vector keeps the result deterministic
    x = 1.0 + 0.1 * np.sqrt(np.arange(2, n + 2))
    x /= np.linalg.norm(x)
    lam = 0.0
    for _ in range(max_iter):
        y = M @ x
        ny = np.linalg.norm(y)
        if ny == 0.0:
            break
        new = float(x @ y)
        x = y / ny
        if abs(new - lam) <= tol * max(new, 1e-300):
            lam = new
            break
        lam = new
    # final Rayleigh quotient on the converged direction
    lam = max(lam, float(x @ (M @ x)))
    return float(np.sqrt(lam))
