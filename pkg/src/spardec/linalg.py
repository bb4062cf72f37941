"""Guarded dense factorizations used by the estimators and baselines.

Every symmetric positive definite solve in the package goes through
:class:`SpdFactor` so that near-singular systems are rejected by an actual
condition estimate (LAPACK ``dpocon`` / ``dgecon``) instead of surfacing as
garbage solutions or uninformative LinAlgErrors.
"""

from __future__ import annotations

import numpy as np
from scipy.linalg import cho_factor, cho_solve, eigh, lu_factor, lu_solve
from scipy.linalg import lapack, solve_triangular

from .exceptions import SingularSystemError

# Solves whose reciprocal condition estimate falls below 1/MAX_CONDITION
# are treated as singular.
MAX_CONDITION = 1e12


# Symmetric Gram products are formed with plain matmul throughout: the
# vendored BLAS runs dgemm faster than dsyrk at the sizes this package
# meets, and every consumer reads the full (numerically symmetric) matrix.


class SpdFactor:
    """Cholesky factorization of a symmetric positive definite matrix.

    Parameters
    ----------
    mat : ndarray, shape (k, k)
        Symmetric matrix to factor. Only the lower triangle is read.
    context : str
        Name of the system being factored, used in error messages.
    max_condition : float
        Condition-number bound above which the system is rejected.

    Raises
    ------
    SingularSystemError
        If the matrix is not numerically positive definite or its
        1-norm condition estimate exceeds ``max_condition``.
    """

    def __init__(self, mat: np.ndarray, context: str = "system",
                 max_condition: float = MAX_CONDITION):
        mat = np.asarray(mat, dtype=float)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
            raise ValueError(f"{context}: expected a square matrix, got {mat.shape}")
        self.shape = mat.shape
        self.context = context
        k = mat.shape[0]
        if k == 0:
            self._factor = None
            return
        anorm = np.linalg.norm(mat, 1)
        try:
            self._factor = cho_factor(mat, lower=True, check_finite=False)
        except np.linalg.LinAlgError:
            self._factor = None
            self._fallback(mat, max_condition)
            return
        rcond, info = lapack.dpocon(self._factor[0], anorm, uplo=b"L")
        if info != 0 or not np.isfinite(rcond) or rcond < 1.0 / max_condition:
            raise SingularSystemError(
                f"{self.context}: condition estimate {1.0 / max(rcond, 1e-300):.3e} "
                f"exceeds {max_condition:.1e}")

    def _fallback(self, mat: np.ndarray, max_condition: float) -> None:
        # Cholesky refused the matrix outright. Rank-reveal with a symmetric
        # eigendecomposition; accept only if the spectrum is genuinely
        # positive and well conditioned (tiny negative rounding aside the
        # matrix is then usable), otherwise report it singular.
        w, v = eigh(mat, check_finite=False)
        wmax = float(w[-1]) if w.size else 0.0
        wmin = float(w[0]) if w.size else 0.0
        if wmax <= 0 or wmin <= wmax / max_condition:
            raise SingularSystemError(
                f"{self.context}: not positive definite "
                f"(eigenvalue range [{wmin:.3e}, {wmax:.3e}])")
        self._eig = (w, v)

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        """Solve ``mat @ y = rhs`` for one or many right-hand sides."""
        rhs = np.asarray(rhs, dtype=float)
        if self.shape[0] == 0:
            return np.zeros_like(rhs)
        if self._factor is not None:
            return cho_solve(self._factor, rhs, check_finite=False)
        w, v = self._eig
        return v @ ((v.T @ rhs).T / w).T

    def half_solve(self, rhs: np.ndarray) -> np.ndarray:
        """Apply the inverse half-factor: ``U`` with ``U^T U = rhs^T M^-1 rhs``.

        For the Cholesky path this is ``L^-1 rhs``; for the eigenvalue
        fallback, ``diag(w^-1/2) V^T rhs``. Either way
        ``half_solve(B).T @ half_solve(C) == B.T @ solve(C)``.
        """
        rhs = np.asarray(rhs, dtype=float)
        if self.shape[0] == 0:
            return np.zeros_like(rhs)
        if self._factor is not None:
            return solve_triangular(self._factor[0], rhs, lower=True,
                                    check_finite=False)
        w, v = self._eig
        return ((v.T @ rhs).T / np.sqrt(w)).T

    def half_solve_back(self, rhs: np.ndarray) -> np.ndarray:
        """Apply the transposed inverse half-factor, completing a solve:
        ``half_solve_back(half_solve(b)) == solve(b)``."""
        rhs = np.asarray(rhs, dtype=float)
        if self.shape[0] == 0:
            return np.zeros_like(rhs)
        if self._factor is not None:
            return solve_triangular(self._factor[0], rhs, lower=True,
                                    trans="T", check_finite=False)
        w, v = self._eig
        return v @ ((rhs.T / np.sqrt(w)).T)


class LuFactor:
    """LU factorization with a ``dgecon`` condition gate, for square
    indefinite systems (the direct KKT path)."""

    def __init__(self, mat: np.ndarray, context: str = "system",
                 max_condition: float = MAX_CONDITION):
        mat = np.asarray(mat, dtype=float)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
            raise ValueError(f"{context}: expected a square matrix, got {mat.shape}")
        self.shape = mat.shape
        self.context = context
        anorm = np.linalg.norm(mat, 1)
        try:
            self._factor = lu_factor(mat, check_finite=False)
        except np.linalg.LinAlgError as exc:
            raise SingularSystemError(f"{context}: {exc}") from exc
        rcond, info = lapack.dgecon(self._factor[0], anorm)
        if info != 0 or not np.isfinite(rcond) or rcond < 1.0 / max_condition:
            raise SingularSystemError(
                f"{context}: condition estimate {1.0 / max(rcond, 1e-300):.3e} "
                f"exceeds {max_condition:.1e}")

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        return lu_solve(self._factor, np.asarray(rhs, dtype=float),
                        check_finite=False)


def nullspace_basis(mat: np.ndarray) -> np.ndarray:
    """Orthonormal basis of the null space of ``mat`` via SVD.

    For an empty (0 x n) input this is the full space: the identity-shaped
    orthonormal basis returned by the underlying SVD.
    """
    mat = np.asarray(mat, dtype=float)
    if mat.shape[0] == 0:
        return np.eye(mat.shape[1])
    from scipy.linalg import null_space

    return null_space(mat)
