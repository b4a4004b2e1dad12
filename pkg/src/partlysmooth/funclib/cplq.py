"""Convex piecewise linear-quadratic functions and the partial-smoothness check.

A function is described by finitely many polyhedral pieces ``C_i = {x : H_i x
<= c_i}`` carrying quadratic data ``(A_i, a_i, alpha_i)``.  The half-space
collection used for the active-manifold construction is exactly the union of
the user-supplied piece rows together with their negations; the piece rows
must therefore jointly describe the function's domain (true for every
construction shipped here).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Hashable

import numpy as np
from scipy.optimize import linprog

from .._linalg import orth_basis, subspace_rank
from ..errors import EmptySet, PointOutsideDomain, UnsupportedPoint
from ..manifold import ManifoldChart, affine_chart, full_space_chart
from .model import FunctionModel, Representative
from .reps import SubdifferentialRep, halfspaces_to_vrep, vcone_to_halfspaces

TIGHT_TOL = 1e-9
RI_WITNESS_CAP = 1.0


@dataclass(frozen=True)
class CplqPiece:
    halfspaces: np.ndarray  # (k, n) rows h with <h, x> <= offset
    offsets: np.ndarray     # (k,)
    matrix: np.ndarray      # (n, n) symmetric
    linear: np.ndarray      # (n,)
    constant: float

    def contains(self, x: np.ndarray, tol: float = TIGHT_TOL) -> bool:
        if self.halfspaces.shape[0] == 0:
            return True
        scale = 1.0 + float(np.linalg.norm(x))
        return bool(np.all(self.halfspaces @ x - self.offsets <= tol * scale))

    def tight_rows(self, x: np.ndarray, tol: float = TIGHT_TOL) -> np.ndarray:
        if self.halfspaces.shape[0] == 0:
            return np.zeros(0, dtype=int)
        scale = 1.0 + float(np.linalg.norm(x))
        resid = np.abs(self.halfspaces @ x - self.offsets)
        return np.flatnonzero(resid <= tol * scale)

    def value(self, x: np.ndarray) -> float:
        x = np.asarray(x, float)
        return float(0.5 * x @ self.matrix @ x + self.linear @ x + self.constant)

    def gradient(self, x: np.ndarray) -> np.ndarray:
        return self.matrix @ np.asarray(x, float) + self.linear


class CplqFunction:
    """Piecewise linear-quadratic function given by polyhedral pieces."""

    def __init__(self, pieces):
        self.pieces: list[CplqPiece] = []
        dim = None
        for entry in pieces:
            h, c, a_mat, a_vec, alpha = entry
            h = np.atleast_2d(np.asarray(h, float))
            c = np.asarray(c, float).ravel()
            a_mat = np.atleast_2d(np.asarray(a_mat, float))
            a_vec = np.asarray(a_vec, float)
            n = a_vec.shape[0]
            if h.size == 0:
                h = h.reshape(0, n)
            if h.shape[0] and np.any(np.linalg.norm(h, axis=1) < 1e-12):
                raise ValueError("half-space normals must be nonzero")
            dim = n if dim is None else dim
            self.pieces.append(CplqPiece(h, c, 0.5 * (a_mat + a_mat.T), a_vec, float(alpha)))
        if dim is None:
            raise ValueError("need at least one piece")
        self.dim = int(dim)

    def active_indices(self, x: np.ndarray) -> list[int]:
        x = np.asarray(x, float)
        return [i for i, p in enumerate(self.pieces) if p.contains(x)]

    def eval(self, x: np.ndarray) -> float:
        x = np.asarray(x, float)
        for p in self.pieces:
            if p.contains(x):
                return p.value(x)
        return np.inf

    def tight_normals_union(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """All tight half-space rows (and offsets) across every piece.

        The collection contains each row's negation as well, so a tight row
        contributes the equality ``<h, y> = c`` to the local manifold.
        """
        rows, offs = [], []
        for p in self.pieces:
            for k in p.tight_rows(np.asarray(x, float)):
                rows.append(p.halfspaces[k])
                offs.append(p.offsets[k])
        return (np.array(rows).reshape(-1, self.dim), np.array(offs))

    def manifold_chart(self, x: np.ndarray) -> ManifoldChart:
        """Chart of the affine active manifold through ``x``.

        A maximal independent subset of the tight normals is selected; the
        redundant rows describe the same affine subspace and would only break
        the surjectivity requirement.
        """
        x = np.asarray(x, float)
        rows, offs = self.tight_normals_union(x)
        keep_rows, keep_offs = _independent_rows(rows, offs)
        radius = self._pattern_radius(x)
        if keep_rows.shape[0] == 0:
            chart = full_space_chart(self.dim)
            return ManifoldChart(
                ambient_dim=self.dim, codim=0, phi=chart.phi, jacobian=chart.jacobian,
                hessian_tensor=chart.hessian_tensor, center=x, validity_radius=radius)
        return affine_chart(keep_rows, keep_offs, center=x, validity_radius=radius)

    def _pattern_radius(self, x: np.ndarray) -> float:
        """Half the distance until some non-tight half-space changes status."""
        radius = np.inf
        scale = 1.0 + float(np.linalg.norm(x))
        for p in self.pieces:
            if p.halfspaces.shape[0] == 0:
                continue
            resid = np.abs(p.halfspaces @ x - p.offsets)
            norms = np.linalg.norm(p.halfspaces, axis=1)
            loose = resid > TIGHT_TOL * scale
            if np.any(loose):
                radius = min(radius, float(np.min(resid[loose] / (2.0 * norms[loose]))))
        return radius


@dataclass(frozen=True)
class CplqCheckResult:
    partly_smooth: bool
    cond1_per_piece: list[bool]
    cond2_feasible: bool
    cond2_margin: float
    cond2_witness: np.ndarray | None


def cplq_check(f: CplqFunction, x: np.ndarray, tol: float = 1e-9) -> CplqCheckResult:
    """Decide partial smoothness of a CPLQ function at ``x``.

    Condition 1 asks that each active piece's normal cone spans the full
    normal space of the local affine manifold; condition 2 asks the shifted
    relative interiors of those cones to share a common point, found here by
    a margin-maximizing LP over the cone coefficients.
    """
    x = np.asarray(x, float)
    active = f.active_indices(x)
    if not active:
        raise PointOutsideDomain(f"x={x!r} is outside the domain")

    union_rows, _ = f.tight_normals_union(x)
    union_rank = subspace_rank(union_rows)
    cond1 = []
    for i in active:
        p = f.pieces[i]
        tight = p.halfspaces[p.tight_rows(x)]
        cond1.append(subspace_rank(tight) == union_rank)

    feasible, margin, witness = _common_ri_point(f, x, active)
    partly = all(cond1) and feasible and margin > tol
    return CplqCheckResult(
        partly_smooth=bool(partly),
        cond1_per_piece=cond1,
        cond2_feasible=bool(feasible),
        cond2_margin=float(margin),
        cond2_witness=witness,
    )


def _common_ri_point(f: CplqFunction, x: np.ndarray, active: list[int]):
    """Maximize ``t`` s.t. some ``v`` lies in every shifted cone with all
    generator coefficients at least ``t`` (strict positivity with margin)."""
    n = f.dim
    blocks = []
    bases = []
    for i in active:
        p = f.pieces[i]
        tight = p.halfspaces[p.tight_rows(x)]
        blocks.append(tight)
        bases.append(p.gradient(x))
    sizes = [b.shape[0] for b in blocks]
    nmu = sum(sizes)
    nvar = n + nmu + 1
    t_idx = nvar - 1
    c = np.zeros(nvar)
    c[t_idx] = -1.0
    a_eq, b_eq = [], []
    offset = n
    a_ub, b_ub = [], []
    for base, tight, size in zip(bases, blocks, sizes):
        row = np.zeros((n, nvar))
        row[:, :n] = np.eye(n)
        if size:
            row[:, offset:offset + size] = -tight.T
        a_eq.append(row)
        b_eq.append(base)
        for k in range(size):
            ub = np.zeros(nvar)
            ub[t_idx] = 1.0
            ub[offset + k] = -1.0
            a_ub.append(ub)  # t - mu_k <= 0
            b_ub.append(0.0)
        offset += size
    a_eq = np.vstack(a_eq)
    b_eq = np.concatenate(b_eq)
    bounds = [(None, None)] * n + [(0, None)] * nmu + [(0, RI_WITNESS_CAP)]
    res = linprog(c, A_ub=np.array(a_ub) if a_ub else None,
                  b_ub=np.array(b_ub) if b_ub else None,
                  A_eq=a_eq, b_eq=b_eq, bounds=bounds, method="highs")
    if not res.success:
        return False, 0.0, None
    return True, float(res.x[t_idx]), res.x[:n].copy()


def _independent_rows(rows: np.ndarray, offs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    keep_r, keep_o = [], []
    for row, off in zip(rows, offs):
        trial = np.array(keep_r + [row])
        if subspace_rank(trial) > len(keep_r):
            keep_r.append(row)
            keep_o.append(off)
    n = rows.shape[1] if rows.size else 0
    return np.array(keep_r).reshape(-1, n), np.array(keep_o)


class CplqModel(FunctionModel):
    """Catalog adapter exposing a ``CplqFunction`` through the model protocol."""

    def __init__(self, f: CplqFunction):
        self.f = f
        self.dim = f.dim
        self.convex = True
        self.prox_regularity_modulus = 0.0

    def eval(self, x):
        return self.f.eval(x)

    def subdifferential(self, x):
        x = np.asarray(x, float)
        active = self.f.active_indices(x)
        if not active:
            raise UnsupportedPoint(f"x={x!r} is outside the domain")
        # Intersection over active pieces of (gradient_i + cone of tight
        # normals), assembled in H-form and converted back to generators.
        a_rows, b_vals = [], []
        for i in active:
            p = self.f.pieces[i]
            tight = p.halfspaces[p.tight_rows(x)]
            d_rows = vcone_to_halfspaces(tight)
            base = p.gradient(x)
            for d in d_rows:
                a_rows.append(d)
                b_vals.append(float(d @ base))
        try:
            return halfspaces_to_vrep(np.array(a_rows), np.array(b_vals))
        except EmptySet as exc:
            raise UnsupportedPoint("piece data yields an empty subdifferential") from exc

    def active_chart(self, x, v):
        x = np.asarray(x, float)
        self.check_subgradient(x, v)
        return self.f.manifold_chart(x)

    def representative(self, x, v):
        x = np.asarray(x, float)
        active = self.f.active_indices(x)
        if not active:
            raise UnsupportedPoint(f"x={x!r} is outside the domain")
        p = self.f.pieces[active[0]]
        return Representative(
            value=p.value,
            gradient=p.gradient,
            hessian=lambda y, _a=p.matrix: _a.copy(),
        )

    def active_signature(self, x) -> Hashable:
        x = np.asarray(x, float)
        sig = []
        for i, p in enumerate(self.f.pieces):
            sig.append((i, tuple(int(k) for k in p.tight_rows(x)), p.contains(x)))
        return tuple(sig)

    def prox_closed_form(self, r, z):
        """Exact prox by enumerating active constraint sets per piece.

        Each piece contributes a strictly convex QP; the best feasible KKT
        point across pieces is the global proximal point.
        """
        z = np.asarray(z, float)
        best, best_val = None, np.inf
        for p in self.f.pieces:
            y = _piece_prox(p, z, r)
            if y is None:
                continue
            val = p.value(y) + 0.5 / r * float(np.sum((y - z) ** 2))
            if val < best_val - 1e-14 or best is None:
                best, best_val = y, val
        if best is None:
            raise UnsupportedPoint("no piece admits a feasible proximal point")
        return best


def _piece_prox(p: CplqPiece, z: np.ndarray, r: float) -> np.ndarray | None:
    """Minimize ``p.value(y) + |y - z|^2 / (2 r)`` over the piece polyhedron."""
    n = z.shape[0]
    q_mat = p.matrix + np.eye(n) / r
    q_vec = p.linear - z / r
    k = p.halfspaces.shape[0]
    if k > 14:
        raise UnsupportedPoint("piece has too many half-spaces for exact enumeration")
    best, best_val = None, np.inf
    scale = 1.0 + float(np.linalg.norm(z))
    for mask in range(1 << k):
        active = [j for j in range(k) if mask >> j & 1]
        h_act = p.halfspaces[active]
        m = len(active)
        kkt = np.zeros((n + m, n + m))
        kkt[:n, :n] = q_mat
        rhs = np.concatenate([-q_vec, p.offsets[active]])
        if m:
            kkt[:n, n:] = h_act.T
            kkt[n:, :n] = h_act
        try:
            sol = np.linalg.solve(kkt, rhs)
        except np.linalg.LinAlgError:
            continue
        y, nu = sol[:n], sol[n:]
        if m and np.any(nu < -1e-9):
            continue
        if k and np.any(p.halfspaces @ y - p.offsets > 1e-9 * scale):
            continue
        val = p.value(y) + 0.5 / r * float(np.sum((y - z) ** 2))
        if val < best_val:
            best, best_val = y, val
    return best
