"""Concrete catalog entries: l1 norm, smooth quadratics, pointwise maxima,
and smooth functions restricted to a manifold."""

from __future__ import annotations

import itertools
from typing import Hashable, Iterator

import numpy as np

from .._linalg import orth_basis
from ..errors import DegenerateActiveSet, UnsupportedPoint
from ..manifold import ManifoldChart, affine_chart, full_space_chart
from .model import FunctionModel, Representative
from .reps import SubdifferentialRep

ACTIVE_TOL = 1e-9


class L1Norm(FunctionModel):
    """Weighted l1 norm ``lam * ||x||_1``."""

    def __init__(self, dim: int, lam: float = 1.0):
        if lam <= 0:
            raise ValueError("lam must be positive")
        self.dim = int(dim)
        self.lam = float(lam)
        self.convex = True
        self.prox_regularity_modulus = 0.0

    def eval(self, x):
        return self.lam * float(np.sum(np.abs(np.asarray(x, float))))

    def _support(self, x):
        x = np.asarray(x, float)
        return np.abs(x) > ACTIVE_TOL * (1.0 + np.linalg.norm(x))

    def subdifferential(self, x):
        x = np.asarray(x, float)
        supp = self._support(x)
        zeros = np.flatnonzero(~supp)
        if zeros.size > 16:
            raise UnsupportedPoint("too many inactive coordinates for an explicit vertex list")
        base = self.lam * np.sign(x) * supp
        verts = []
        for signs in itertools.product((-1.0, 1.0), repeat=zeros.size):
            v = base.copy()
            v[zeros] = self.lam * np.asarray(signs)
            verts.append(v)
        return SubdifferentialRep(np.array(verts))

    def nearest_subgradient(self, x, v):
        x = np.asarray(x, float)
        v = np.asarray(v, float)
        supp = self._support(x)
        out = np.clip(v, -self.lam, self.lam)
        out[supp] = self.lam * np.sign(x[supp])
        return out

    def active_chart(self, x, v):
        x = np.asarray(x, float)
        self.check_subgradient(x, v)
        supp = self._support(x)
        zeros = np.flatnonzero(~supp)
        if zeros.size == 0:
            return full_space_chart(self.dim)
        rows = np.eye(self.dim)[zeros]
        on_support = np.abs(x[supp])
        radius = 0.5 * float(np.min(on_support)) if on_support.size else np.inf
        return affine_chart(rows, center=x, validity_radius=radius)

    def representative(self, x, v):
        x = np.asarray(x, float)
        grad = self.lam * np.sign(x) * self._support(x)
        hess = np.zeros((self.dim, self.dim))
        return Representative(
            value=lambda y, g=grad: float(g @ np.asarray(y, float)),
            gradient=lambda y, g=grad: g.copy(),
            hessian=lambda y, h=hess: h.copy(),
        )

    def active_signature(self, x) -> Hashable:
        x = np.asarray(x, float)
        supp = self._support(x)
        return tuple(int(np.sign(xi)) if s else 0 for xi, s in zip(x, supp))

    def prox_closed_form(self, r, z):
        z = np.asarray(z, float)
        return np.sign(z) * np.maximum(np.abs(z) - r * self.lam, 0.0)


class SmoothQuadratic(FunctionModel):
    """Smooth quadratic ``x^T A x / 2 + b^T x + c`` (codimension-zero entry)."""

    def __init__(self, a_mat: np.ndarray, b: np.ndarray | None = None, c: float = 0.0):
        a_mat = np.atleast_2d(np.asarray(a_mat, float))
        self.dim = a_mat.shape[0]
        self.a_mat = 0.5 * (a_mat + a_mat.T)
        self.b = np.zeros(self.dim) if b is None else np.asarray(b, float)
        self.c = float(c)
        eigmin = float(np.min(np.linalg.eigvalsh(self.a_mat)))
        self.convex = eigmin >= -1e-12
        self.prox_regularity_modulus = max(0.0, -eigmin)

    def eval(self, x):
        x = np.asarray(x, float)
        return float(0.5 * x @ self.a_mat @ x + self.b @ x + self.c)

    def gradient(self, x):
        return self.a_mat @ np.asarray(x, float) + self.b

    def subdifferential(self, x):
        return SubdifferentialRep(self.gradient(x)[None, :])

    def nearest_subgradient(self, x, v):
        return self.gradient(x)

    def active_chart(self, x, v):
        self.check_subgradient(x, v)
        return full_space_chart(self.dim)

    def representative(self, x, v):
        return Representative(
            value=self.eval,
            gradient=self.gradient,
            hessian=lambda y: self.a_mat.copy(),
        )

    def active_signature(self, x) -> Hashable:
        return "smooth"

    def prox_closed_form(self, r, z):
        z = np.asarray(z, float)
        return np.linalg.solve(np.eye(self.dim) + r * self.a_mat, z - r * self.b)


class MaxOfSmooth(FunctionModel):
    """Pointwise maximum of quadratic pieces ``q_j(x) = x^T A_j x / 2 + b_j^T x + c_j``.

    The subdifferential is the convex hull of the active gradients; the active
    manifold is the common zero set of the active-piece gaps, which requires
    the active gradient differences to have full rank.
    """

    def __init__(self, pieces: list[tuple[np.ndarray, np.ndarray, float]]):
        if not pieces:
            raise ValueError("need at least one piece")
        self.pieces = []
        dim = None
        rho = 0.0
        convex = True
        for a_mat, b, c in pieces:
            a_mat = np.atleast_2d(np.asarray(a_mat, float))
            a_mat = 0.5 * (a_mat + a_mat.T)
            b = np.asarray(b, float)
            dim = b.shape[0] if dim is None else dim
            eigmin = float(np.min(np.linalg.eigvalsh(a_mat)))
            rho = max(rho, -eigmin)
            convex = convex and eigmin >= -1e-12
            self.pieces.append((a_mat, b, float(c)))
        self.dim = int(dim)
        self.convex = convex
        self.prox_regularity_modulus = max(0.0, rho)

    def piece_value(self, j, x):
        a_mat, b, c = self.pieces[j]
        x = np.asarray(x, float)
        return float(0.5 * x @ a_mat @ x + b @ x + c)

    def piece_gradient(self, j, x):
        a_mat, b, _ = self.pieces[j]
        return a_mat @ np.asarray(x, float) + b

    def eval(self, x):
        return max(self.piece_value(j, x) for j in range(len(self.pieces)))

    def active_set(self, x, tol: float = ACTIVE_TOL):
        vals = [self.piece_value(j, x) for j in range(len(self.pieces))]
        top = max(vals)
        scale = 1.0 + abs(top)
        return [j for j, vj in enumerate(vals) if top - vj <= tol * scale]

    def subdifferential(self, x):
        x = np.asarray(x, float)
        grads = np.array([self.piece_gradient(j, x) for j in self.active_set(x)])
        return SubdifferentialRep(grads)

    def active_chart(self, x, v):
        x = np.asarray(x, float)
        self.check_subgradient(x, v)
        active = self.active_set(x)
        j0 = active[0]
        others = active[1:]
        if not others:
            return full_space_chart(self.dim)
        diff_rows = np.array([self.piece_gradient(j, x) - self.piece_gradient(j0, x)
                              for j in others])
        if orth_basis(diff_rows).shape[1] < len(others):
            raise DegenerateActiveSet(
                f"active gradient differences are rank deficient at x={x!r}")
        return self._gap_chart(j0, others, x)

    def _gap_chart(self, j0: int, others: list[int], anchor: np.ndarray) -> ManifoldChart:
        a0, b0, c0 = self.pieces[j0]

        def phi(y, _o=tuple(others)):
            y = np.asarray(y, float)
            return np.array([self.piece_value(j, y) - self.piece_value(j0, y) for j in _o])

        def jac(y, _o=tuple(others)):
            y = np.asarray(y, float)
            return np.array([self.piece_gradient(j, y) - self.piece_gradient(j0, y) for j in _o])

        def hess(y, _o=tuple(others)):
            return np.array([self.pieces[j][0] - a0 for j in _o])

        # Validity ends where an inactive piece catches up with the maximum.
        inactive = [j for j in range(len(self.pieces)) if j != j0 and j not in others]
        radius = np.inf
        if inactive:
            top = self.piece_value(j0, anchor)
            gaps = []
            for j in inactive:
                gap = top - self.piece_value(j, anchor)
                slope = 1.0 + np.linalg.norm(self.piece_gradient(j, anchor)
                                             - self.piece_gradient(j0, anchor))
                gaps.append(gap / (2.0 * slope))
            radius = float(min(gaps))
        return ManifoldChart(
            ambient_dim=self.dim,
            codim=len(others),
            phi=phi,
            jacobian=jac,
            hessian_tensor=hess,
            center=np.asarray(anchor, float),
            validity_radius=radius,
        )

    def representative(self, x, v):
        j0 = self.active_set(x)[0]
        a_mat, b, c = self.pieces[j0]
        return Representative(
            value=lambda y: self.piece_value(j0, y),
            gradient=lambda y: self.piece_gradient(j0, y),
            hessian=lambda y: a_mat.copy(),
        )

    def active_signature(self, x) -> Hashable:
        return tuple(self.active_set(x))

    def prox_candidates(self, r, z, warm):
        z = np.asarray(z, float)
        warm = np.asarray(warm, float)
        order = sorted(range(len(self.pieces)),
                       key=lambda j: -self.piece_value(j, warm))
        for size in range(1, len(order) + 1):
            group = sorted(order[:size])
            j0, others = group[0], group[1:]
            if others:
                diff_rows = np.array([self.piece_gradient(j, warm) - self.piece_gradient(j0, warm)
                                      for j in others])
                if orth_basis(diff_rows).shape[1] < len(others):
                    continue
            a_mat, b, c = self.pieces[j0]
            rep = Representative(
                value=lambda y, _j=j0: self.piece_value(_j, y),
                gradient=lambda y, _j=j0: self.piece_gradient(_j, y),
                hessian=lambda y, _a=a_mat: _a.copy(),
            )
            chart = full_space_chart(self.dim) if not others else self._gap_chart(j0, others, warm)
            yield chart, rep


class ManifoldRestriction(FunctionModel):
    """Smooth function plus the indicator of an explicitly charted manifold.

    Exercises curved charts: the subdifferential is the affine set
    ``grad fhat(x) + N_M(x)`` and every subgradient lies in its relative
    interior.  ``rho`` must be declared by the caller (curvature-dependent).
    """

    def __init__(self, chart: ManifoldChart, rep: Representative, rho: float = 0.0,
                 convex: bool = False):
        self.dim = chart.ambient_dim
        self.chart = chart
        self.rep = rep
        self.convex = convex
        self.prox_regularity_modulus = float(rho)

    def eval(self, x):
        x = np.asarray(x, float)
        if not self.chart.on_manifold(x, tol=1e-8):
            return np.inf
        return float(self.rep.value(x))

    def subdifferential(self, x):
        x = np.asarray(x, float)
        if not self.chart.on_manifold(x, tol=1e-8):
            raise UnsupportedPoint("point is not on the manifold")
        normal = self.chart.normal_basis(x)
        grad = np.asarray(self.rep.gradient(x), float)
        return SubdifferentialRep(grad[None, :], lineality=normal.T)

    def nearest_subgradient(self, x, v):
        x = np.asarray(x, float)
        if not self.chart.on_manifold(x, tol=1e-8):
            return None
        normal = self.chart.normal_basis(x)
        grad = np.asarray(self.rep.gradient(x), float)
        diff = np.asarray(v, float) - grad
        return grad + normal @ (normal.T @ diff)

    def active_chart(self, x, v):
        self.check_subgradient(x, v)
        return self.chart

    def representative(self, x, v):
        return self.rep

    def active_signature(self, x) -> Hashable:
        return "manifold"

    def prox_candidates(self, r, z, warm):
        yield self.chart, self.rep


def model_from_config(spec: dict) -> FunctionModel:
    """Build a catalog entry from a plain-data description (used by the CLI).

    Supported kinds: ``l1`` (dim, lam), ``quadratic`` (matrix, offset, constant),
    ``max_quadratics`` (pieces: list of {matrix, offset, constant}) and
    ``cplq`` (pieces: list of {halfspaces, offsets, matrix, linear, constant}).
    """
    from .cplq import CplqFunction, CplqModel

    kind = spec.get("kind")
    if kind == "l1":
        return L1Norm(dim=int(spec["dim"]), lam=float(spec.get("lam", 1.0)))
    if kind == "quadratic":
        return SmoothQuadratic(
            np.asarray(spec["matrix"], float),
            None if spec.get("offset") is None else np.asarray(spec["offset"], float),
            float(spec.get("constant", 0.0)),
        )
    if kind == "max_quadratics":
        pieces = [
            (np.asarray(p["matrix"], float), np.asarray(p["offset"], float),
             float(p.get("constant", 0.0)))
            for p in spec["pieces"]
        ]
        return MaxOfSmooth(pieces)
    if kind == "cplq":
        pieces = [
            (np.asarray(p["halfspaces"], float), np.asarray(p["offsets"], float),
             np.asarray(p["matrix"], float), np.asarray(p["linear"], float),
             float(p.get("constant", 0.0)))
            for p in spec["pieces"]
        ]
        return CplqModel(CplqFunction(pieces))
    raise ValueError(f"unknown function kind: {kind!r}")
