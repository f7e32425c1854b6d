"""Small shared linear-algebra helpers."""
from __future__ import annotations

import numpy as np


def sym(a: np.ndarray) -> np.ndarray:
    """Symmetrize a square matrix, averaging away accumulation noise."""
    return 0.5 * (a + a.T)


def fix_eigvec_signs(vectors: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    """Flip eigenvector columns so the first component with magnitude > tol is nonnegative.

    Eigenvector signs are arbitrary; pinning them makes decompositions
    deterministic and therefore serializable and testable.
    """
    vectors = np.array(vectors, copy=True)
    for j in range(vectors.shape[1]):
        col = vectors[:, j]
        significant = np.flatnonzero(np.abs(col) > tol)
        if significant.size and col[significant[0]] < 0:
            vectors[:, j] = -col
    return vectors


def eigh_by_abs(matrix: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Symmetric eigendecomposition sorted by absolute eigenvalue, descending.

    Ties keep the original (ascending-eigenvalue) order of ``numpy.linalg.eigh``.
    Columns of the returned eigenvector matrix follow the sign convention of
    :func:`fix_eigvec_signs`.
    """
    evals, evecs = np.linalg.eigh(sym(np.asarray(matrix, dtype=float)))
    order = np.argsort(-np.abs(evals), kind="stable")
    return evals[order], fix_eigvec_signs(evecs[:, order])
