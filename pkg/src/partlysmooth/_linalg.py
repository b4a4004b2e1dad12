"""Small dense linear algebra helpers used throughout the package."""

from __future__ import annotations

import numpy as np

RANK_TOL = 1e-10


def orth_basis(vectors: np.ndarray, tol: float = RANK_TOL) -> np.ndarray:
    """Orthonormal basis (columns) of the span of the given row vectors."""
    vectors = np.atleast_2d(np.asarray(vectors, float))
    if vectors.size == 0:
        return np.zeros((vectors.shape[1] if vectors.ndim == 2 else 0, 0))
    u, s, vh = np.linalg.svd(vectors, full_matrices=False)
    if s.size == 0 or s[0] == 0.0:
        return np.zeros((vectors.shape[1], 0))
    rank = int(np.sum(s > tol * s[0]))
    return vh[:rank].T


def null_basis(mat: np.ndarray, tol: float = RANK_TOL) -> np.ndarray:
    """Orthonormal basis (columns) of the null space of ``mat``."""
    mat = np.atleast_2d(np.asarray(mat, float))
    m, n = mat.shape
    if m == 0 or mat.size == 0:
        return np.eye(n)
    _, s, vh = np.linalg.svd(mat, full_matrices=True)
    smax = s[0] if s.size else 0.0
    rank = int(np.sum(s > tol * smax)) if smax > 0 else 0
    return vh[rank:].T


def subspace_rank(vectors: np.ndarray, tol: float = RANK_TOL) -> int:
    vectors = np.atleast_2d(np.asarray(vectors, float))
    if vectors.size == 0:
        return 0
    s = np.linalg.svd(vectors, compute_uv=False)
    if s.size == 0 or s[0] == 0.0:
        return 0
    return int(np.sum(s > tol * s[0]))


def spans_contained(inner: np.ndarray, outer: np.ndarray, tol: float = 1e-8) -> bool:
    """Whether span(rows of inner) is contained in span(rows of outer)."""
    inner = np.atleast_2d(np.asarray(inner, float))
    if inner.size == 0:
        return True
    basis = orth_basis(outer)
    for v in inner:
        nv = np.linalg.norm(v)
        if nv == 0.0:
            continue
        resid = v - basis @ (basis.T @ v)
        if np.linalg.norm(resid) > tol * nv:
            return False
    return True


def spans_equal(a: np.ndarray, b: np.ndarray, tol: float = 1e-8) -> bool:
    """Subspace equality by mutual containment of spanning sets."""
    return spans_contained(a, b, tol) and spans_contained(b, a, tol)
