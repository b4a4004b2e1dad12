"""Smooth manifolds given by local defining maps.

A manifold of codimension ``m`` in ``R^n`` is represented near a point by a
map ``phi: R^n -> R^m`` whose zero set is the manifold and whose Jacobian has
full row rank there.  The tangent space is ``ker dphi(x)`` and the normal
space is ``range dphi(x)^T``.  Charts are immutable and all operations are
pure, so instances are safe to share between threads.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import NotInRange, RankDeficient

# Scale-invariant threshold for the surjectivity (full row rank) test.
RANK_TOL = 1e-8
# Default residual tolerance for multiplier solves.
RESIDUAL_TOL = 1e-8
# Absolute tolerance for "phi(x) = 0".
ON_MANIFOLD_TOL = 1e-9


@dataclass(frozen=True)
class ManifoldChart:
    """Local defining map of a manifold, with first and second derivatives.

    ``phi(x)`` returns a vector of length ``codim``, ``jacobian(x)`` the
    ``codim x ambient_dim`` matrix of its derivatives, and
    ``hessian_tensor(x)`` an array of shape ``(codim, n, n)`` stacking the
    symmetric Hessians of the components of ``phi``.  ``codim == 0`` is
    allowed and describes an open subset of the ambient space.
    """

    ambient_dim: int
    codim: int
    phi: Callable[[np.ndarray], np.ndarray]
    jacobian: Callable[[np.ndarray], np.ndarray]
    hessian_tensor: Callable[[np.ndarray], np.ndarray]
    center: np.ndarray | None = None
    validity_radius: float = np.inf
    on_manifold_tol: float = ON_MANIFOLD_TOL

    def __post_init__(self):
        if not 0 <= self.codim <= self.ambient_dim:
            raise ValueError("codim must lie in [0, ambient_dim]")

    def is_valid(self, x: np.ndarray) -> bool:
        """Whether ``x`` lies inside the chart's validity ball."""
        if self.center is None or not np.isfinite(self.validity_radius):
            return True
        return float(np.linalg.norm(np.asarray(x, float) - self.center)) <= self.validity_radius

    def on_manifold(self, x: np.ndarray, tol: float | None = None) -> bool:
        """Whether ``phi(x)`` vanishes to within tolerance."""
        tol = self.on_manifold_tol if tol is None else tol
        if self.codim == 0:
            return True
        return float(np.linalg.norm(self.phi(np.asarray(x, float)))) <= tol

    def normal_basis(self, x: np.ndarray) -> np.ndarray:
        """Orthonormal basis of the normal space, as columns of an ``(n, m)`` array."""
        x = np.asarray(x, float)
        if self.codim == 0:
            return np.zeros((self.ambient_dim, 0))
        jt = np.asarray(self.jacobian(x), float).T
        u, s, _ = np.linalg.svd(jt, full_matrices=False)
        rank = int(np.sum(s > RANK_TOL * s[0])) if s.size else 0
        if rank < self.codim:
            raise RankDeficient(
                f"jacobian rank {rank} < codim {self.codim} at x={x!r}")
        return u[:, : self.codim]


@dataclass(frozen=True)
class TangentBasis:
    """Orthonormal basis of the tangent space at a point.

    ``basis`` has shape ``(n, n - m)`` with the basis vectors as columns.
    """

    point: np.ndarray
    basis: np.ndarray

    @property
    def dim(self) -> int:
        return self.basis.shape[1]

    def project(self, u: np.ndarray) -> np.ndarray:
        """Orthogonal projection of ``u`` onto the tangent space."""
        u = np.asarray(u, float)
        return self.basis @ (self.basis.T @ u)

    def reduce(self, mat: np.ndarray) -> np.ndarray:
        """Compress an ambient bilinear form to tangent coordinates (``B^T M B``)."""
        return self.basis.T @ np.asarray(mat, float) @ self.basis


def tangent_basis(chart: ManifoldChart, x: np.ndarray) -> TangentBasis:
    """Orthonormal basis of ``ker dphi(x)``.

    Raises ``RankDeficient`` when the Jacobian does not have full row rank,
    which signals that the chart is not valid at ``x``.
    """
    x = np.asarray(x, float)
    n = chart.ambient_dim
    if chart.codim == 0:
        return TangentBasis(point=x, basis=np.eye(n))
    jac = np.asarray(chart.jacobian(x), float)
    if jac.shape != (chart.codim, n):
        raise ValueError(f"jacobian shape {jac.shape} != ({chart.codim}, {n})")
    _, s, vh = np.linalg.svd(jac, full_matrices=True)
    smax = s[0] if s.size else 0.0
    rank = int(np.sum(s > RANK_TOL * smax)) if smax > 0 else 0
    if rank < chart.codim:
        raise RankDeficient(f"jacobian rank {rank} < codim {chart.codim} at x={x!r}")
    # Rows of vh beyond the rank span the null space; vh is orthogonal, so the
    # resulting basis is orthonormal by construction.
    return TangentBasis(point=x, basis=vh[chart.codim:].T)


def project_tangent(chart: ManifoldChart, x: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Orthogonal projection of ``u`` onto the tangent space at ``x``."""
    return tangent_basis(chart, x).project(u)


def solve_multiplier(
    chart: ManifoldChart,
    x: np.ndarray,
    rhs: np.ndarray,
    residual_tol: float = RESIDUAL_TOL,
) -> np.ndarray:
    """Solve ``dphi(x)^T mu = rhs`` for the multiplier ``mu``.

    The solution is unique because the Jacobian is surjective.  When ``rhs``
    is not in the range of the adjoint (i.e. not a normal vector at ``x``)
    the least-squares residual exceeds tolerance and ``NotInRange`` is
    raised, which makes "rhs in N_M(x)" a testable condition.
    """
    x = np.asarray(x, float)
    rhs = np.asarray(rhs, float)
    if chart.codim == 0:
        if np.linalg.norm(rhs) > residual_tol * (1.0 + np.linalg.norm(rhs)):
            raise NotInRange("normal space is trivial but rhs != 0")
        return np.zeros(0)
    jt = np.asarray(chart.jacobian(x), float).T  # (n, m)
    s = np.linalg.svd(jt, compute_uv=False)
    smax = s[0] if s.size else 0.0
    rank = int(np.sum(s > RANK_TOL * smax)) if smax > 0 else 0
    if rank < chart.codim:
        raise RankDeficient(f"adjoint rank {rank} < codim {chart.codim} at x={x!r}")
    mu, *_ = np.linalg.lstsq(jt, rhs, rcond=None)
    residual = float(np.linalg.norm(jt @ mu - rhs))
    if residual > residual_tol * (1.0 + float(np.linalg.norm(rhs))):
        raise NotInRange(
            f"rhs is not in range(dphi^T): residual {residual:.3e}")
    return mu


def affine_chart(
    rows: np.ndarray,
    offsets: np.ndarray | None = None,
    *,
    center: np.ndarray | None = None,
    validity_radius: float = np.inf,
) -> ManifoldChart:
    """Chart of the affine subspace ``{x : rows @ x = offsets}``.

    ``rows`` must have full row rank; the Hessian tensor is identically zero.
    """
    rows = np.atleast_2d(np.asarray(rows, float))
    m, n = rows.shape
    offs = np.zeros(m) if offsets is None else np.asarray(offsets, float)
    hess = np.zeros((m, n, n))
    return ManifoldChart(
        ambient_dim=n,
        codim=m,
        phi=lambda x, _r=rows, _o=offs: _r @ np.asarray(x, float) - _o,
        jacobian=lambda x, _r=rows: _r,
        hessian_tensor=lambda x, _h=hess: _h,
        center=None if center is None else np.asarray(center, float),
        validity_radius=validity_radius,
    )


def full_space_chart(n: int) -> ManifoldChart:
    """Codimension-zero chart: manifold equals an open subset of ``R^n``."""
    return ManifoldChart(
        ambient_dim=n,
        codim=0,
        phi=lambda x: np.zeros(0),
        jacobian=lambda x: np.zeros((0, n)),
        hessian_tensor=lambda x: np.zeros((0, n, n)),
    )
