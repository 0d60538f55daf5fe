"""Moment estimation, Jacobi eigendecomposition, PSD square root.

numpy.linalg.eigh serves as the independent oracle for the hand-rolled
Jacobi routine throughout.
"""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from priorbench.errors import DegenerateInputError, InvalidMatrixError
from priorbench.linalg import (GaussianStats, estimate_moments, jacobi_eigh,
                               psd_matrix_sqrt)
from priorbench.rng import SeededRng


def test_estimate_moments_hand_example():
    # rows (0,0), (2,2), (4,4): mean (2,2), unbiased cov [[4,4],[4,4]]
    stats = estimate_moments(np.array([[0.0, 0.0], [2.0, 2.0], [4.0, 4.0]]))
    np.testing.assert_allclose(stats.mean, [2.0, 2.0])
    np.testing.assert_allclose(stats.covariance, [[4.0, 4.0], [4.0, 4.0]])
    assert stats.dim == 2


def test_estimate_moments_rejects_single_row():
    with pytest.raises(DegenerateInputError):
        estimate_moments(np.array([[1.0, 2.0]]))


def test_jacobi_diagonal_matrix():
    w, v = jacobi_eigh(np.diag([4.0, 9.0, 1.0]))
    np.testing.assert_allclose(sorted(w), [1.0, 4.0, 9.0], atol=1e-12)
    np.testing.assert_allclose(v @ v.T, np.eye(3), atol=1e-12)


def test_jacobi_matches_numpy_oracle():
    rng = SeededRng(17)
    for d in (1, 2, 3, 5, 8, 16):
        m = rng.standard_normal(d, d)
        a = 0.5 * (m + m.T)
        w, v = jacobi_eigh(a)
        w_ref = np.linalg.eigvalsh(a)
        np.testing.assert_allclose(np.sort(w), w_ref, atol=1e-8)
        # eigenvector property and orthogonality
        np.testing.assert_allclose(a @ v, v @ np.diag(w), atol=1e-8)
        np.testing.assert_allclose(v.T @ v, np.eye(d), atol=1e-10)


def test_jacobi_rejects_asymmetric():
    with pytest.raises(InvalidMatrixError):
        jacobi_eigh(np.array([[1.0, 2.0], [0.0, 1.0]]))


def test_psd_sqrt_known_diagonal():
    root = psd_matrix_sqrt(np.diag([4.0, 9.0]))
    np.testing.assert_allclose(root, np.diag([2.0, 3.0]), atol=1e-10)


def test_psd_sqrt_squares_back():
    rng = SeededRng(23)
    for d in (2, 4, 8, 16):
        b = rng.standard_normal(d, d)
        a = b @ b.T
        root = psd_matrix_sqrt(a)
        np.testing.assert_allclose(root @ root, a, atol=1e-7)
        np.testing.assert_allclose(root, root.T, atol=1e-12)


def test_psd_sqrt_tolerates_tiny_negative_eigenvalues():
    a = np.diag([1.0, -0.5e-8])  # within the clamp floor
    root = psd_matrix_sqrt(a)
    np.testing.assert_allclose(root @ root, np.diag([1.0, 0.0]), atol=1e-8)


def test_psd_sqrt_rejects_indefinite():
    with pytest.raises(InvalidMatrixError):
        psd_matrix_sqrt(np.diag([1.0, -0.5]))


@settings(deadline=None, max_examples=30)
@given(seed=st.integers(min_value=0, max_value=2**32),
       d=st.integers(min_value=1, max_value=10))
def test_psd_sqrt_property(seed, d):
    b = SeededRng(seed).standard_normal(d, d)
    a = b @ b.T + 1e-6 * np.eye(d)
    root = psd_matrix_sqrt(a)
    w = np.linalg.eigvalsh(root)
    assert np.all(w >= -1e-9)
    np.testing.assert_allclose(root @ root, a, atol=1e-6 * max(1.0, np.abs(a).max()))


def test_gaussian_stats_dim():
    s = GaussianStats(mean=np.zeros(3), covariance=np.eye(3))
    assert s.dim == 3
