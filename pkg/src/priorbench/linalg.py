"""Moment estimation and the PSD matrix square root.

The eigendecomposition is a cyclic Jacobi iteration, which is ample for the
small (D <= 16) symmetric matrices this package works with and keeps the
square root free of backend-specific behavior.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateInputError, InvalidMatrixError

SYMMETRY_TOL = 1e-8
EIGENVALUE_FLOOR = -1e-8
JACOBI_OFFDIAG_TOL = 1e-10
_JACOBI_MAX_SWEEPS = 100


@dataclass
class GaussianStats:
    """First two moments of a sample set."""

    mean: np.ndarray       # [D]
    covariance: np.ndarray  # [D x D], symmetric PSD

    @property
    def dim(self) -> int:
        return self.mean.shape[0]


def estimate_moments(samples: np.ndarray) -> GaussianStats:
    """Column means and unbiased (N-1) sample covariance of an [N x D] set."""
    samples = np.asarray(samples, dtype=np.float64)
    if samples.ndim != 2:
        raise ValueError(f"expected [N x D] samples, got shape {samples.shape}")
    n = samples.shape[0]
    if n < 2:
        raise DegenerateInputError(f"need at least 2 samples for a covariance, got {n}")
    mean = samples.mean(axis=0)
    centered = samples - mean
    cov = centered.T @ centered / (n - 1)
    cov = 0.5 * (cov + cov.T)
    return GaussianStats(mean=mean, covariance=cov)


def _check_symmetric(m: np.ndarray, tol: float) -> np.ndarray:
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise InvalidMatrixError(f"expected a square matrix, got shape {m.shape}")
    asym = np.max(np.abs(m - m.T)) if m.size else 0.0
    if asym > tol:
        raise InvalidMatrixError(f"matrix is asymmetric: max |m - m.T| = {asym:.3e} > {tol:.0e}")
    return 0.5 * (m + m.T)


def jacobi_eigh(m: np.ndarray, tol: float = JACOBI_OFFDIAG_TOL):
    """Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.

    Sweeps over all off-diagonal pairs until the off-diagonal Frobenius norm
    falls below ``tol``.  Returns (eigenvalues, eigenvectors) with
    ``m ~= V @ diag(w) @ V.T``; eigenvalues are not sorted.
    """
    a = _check_symmetric(m, SYMMETRY_TOL).copy()
    d = a.shape[0]
    v = np.eye(d)
    if d < 2:
        return np.diag(a).copy(), v
    for _ in range(_JACOBI_MAX_SWEEPS):
        # rounding can push the subtraction a hair below zero near convergence
        off = np.sqrt(max(0.0, np.sum(a**2) - np.sum(np.diag(a) ** 2)))
        if off <= tol:
            break
        for p in range(d - 1):
            for q in range(p + 1, d):
                apq = a[p, q]
                if abs(apq) <= tol / (d * d):
                    continue
                theta = 0.5 * (a[q, q] - a[p, p]) / apq
                if theta >= 0.0:
                    t = 1.0 / (theta + np.sqrt(theta * theta + 1.0))
                else:
                    t = -1.0 / (-theta + np.sqrt(theta * theta + 1.0))
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                # rotate rows/columns p and q in place
                row_p, row_q = a[p, :].copy(), a[q, :].copy()
                a[p, :] = c * row_p - s * row_q
                a[q, :] = s * row_p + c * row_q
                col_p, col_q = a[:, p].copy(), a[:, q].copy()
                a[:, p] = c * col_p - s * col_q
                a[:, q] = s * col_p + c * col_q
                vp, vq = v[:, p].copy(), v[:, q].copy()
                v[:, p] = c * vp - s * vq
                v[:, q] = s * vp + c * vq
    return np.diag(a).copy(), v


def psd_matrix_sqrt(m: np.ndarray) -> np.ndarray:
    """Symmetric PSD square root S with S @ S ~= m.

    ``m`` must be symmetric within 1e-8; eigenvalues in [-1e-8, 0) are
    clamped to zero, anything more negative raises InvalidMatrixError.
    """
    sym = _check_symmetric(m, SYMMETRY_TOL)
    w, v = jacobi_eigh(sym)
    low = float(np.min(w)) if w.size else 0.0
    if low < EIGENVALUE_FLOOR:
        raise InvalidMatrixError(
            f"matrix is indefinite: smallest eigenvalue {low:.3e} < {EIGENVALUE_FLOOR:.0e}"
        )
    root = v @ np.diag(np.sqrt(np.clip(w, 0.0, None))) @ v.T
    return 0.5 * (root + root.T)
