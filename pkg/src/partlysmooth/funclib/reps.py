"""Finite polyhedral descriptions of subdifferentials.

A set is stored in V-form as ``conv(vertices) + cone(rays) + span(lineality)``.
All catalog subdifferentials are polyhedral, so membership, relative-interior
and normal-cone queries reduce to small linear programs over this
description.  Conversions between H-form and V-form cones use a plain double
description sweep, which is entirely adequate at the dimensions (<= ~6) this
package works in.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linprog, minimize

from .._linalg import orth_basis, null_basis
from ..errors import DimensionMismatch, EmptySet

MEMBER_TOL = 1e-9
RI_MARGIN_TOL = 1e-9
# Cap for the margin LP; hitting it means the margin is unbounded.
MARGIN_CAP = 1e10


@dataclass(frozen=True)
class RiResult:
    inside: bool
    margin: float


@dataclass(frozen=True)
class SubdifferentialRep:
    """Polytope-plus-cone V-form description of a closed convex set.

    ``vertices`` is ``(k, n)`` with k >= 1, ``rays`` is ``(r, n)`` and
    ``lineality`` is ``(l, n)``; the represented set is
    ``conv(vertices) + cone(rays) + span(lineality)``.
    """

    vertices: np.ndarray
    rays: np.ndarray = field(default=None)  # type: ignore[assignment]
    lineality: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        v = np.atleast_2d(np.asarray(self.vertices, float))
        if v.shape[0] == 0:
            raise EmptySet("a representation needs at least one vertex")
        n = v.shape[1]
        r = np.zeros((0, n)) if self.rays is None else np.atleast_2d(np.asarray(self.rays, float))
        l = np.zeros((0, n)) if self.lineality is None else np.atleast_2d(np.asarray(self.lineality, float))
        if r.size == 0:
            r = r.reshape(0, n)
        if l.size == 0:
            l = l.reshape(0, n)
        if r.shape[1] != n or l.shape[1] != n:
            raise DimensionMismatch("vertices, rays and lineality must share the ambient dimension")
        object.__setattr__(self, "vertices", v)
        object.__setattr__(self, "rays", r)
        object.__setattr__(self, "lineality", l)

    # -- basic structure ---------------------------------------------------

    @property
    def dim(self) -> int:
        return self.vertices.shape[1]

    @property
    def affine_base(self) -> np.ndarray:
        return self.vertices[0]

    @property
    def kind(self) -> str:
        if self.rays.shape[0] == 0 and self.lineality.shape[0] == 0:
            return "polytope"
        if self.vertices.shape[0] == 1 and np.allclose(self.vertices[0], 0.0):
            return "cone"
        return "polytope+cone"

    def parallel_basis(self) -> np.ndarray:
        """Orthonormal basis (columns) of the subspace parallel to the affine hull."""
        rows = np.vstack([
            self.vertices - self.vertices[0],
            self.rays,
            self.lineality,
        ])
        return orth_basis(rows)

    def is_singleton(self, tol: float = MEMBER_TOL) -> bool:
        return self.parallel_basis().shape[1] == 0

    def translate(self, shift: np.ndarray) -> "SubdifferentialRep":
        shift = np.asarray(shift, float)
        return SubdifferentialRep(self.vertices + shift, self.rays, self.lineality)

    # -- LP-backed queries ---------------------------------------------------

    def _combination_blocks(self) -> tuple[np.ndarray, int, int, int]:
        """Stacked generator matrix and block sizes (k, r, l)."""
        k, r, l = self.vertices.shape[0], self.rays.shape[0], self.lineality.shape[0]
        gen = np.vstack([self.vertices, self.rays, self.lineality])  # (k+r+l, n)
        return gen, k, r, l

    def membership(self, v: np.ndarray, tol: float = MEMBER_TOL) -> tuple[bool, float]:
        """Test ``v`` in the set; returns (member, l1 residual).

        Solves ``min sum(e+ + e-)`` subject to the combination equalities,
        so it always has a solution and the optimum is the l1 distance from
        ``v`` to the set.
        """
        v = np.asarray(v, float)
        if v.shape != (self.dim,):
            raise DimensionMismatch(f"expected vector of length {self.dim}")
        gen, k, r, l = self._combination_blocks()
        n = self.dim
        # variables: lam (k), tau (r), sig+ (l), sig- (l), e+ (n), e- (n)
        nvar = k + r + 2 * l + 2 * n
        c = np.zeros(nvar)
        c[k + r + 2 * l:] = 1.0
        a_eq = np.zeros((n + 1, nvar))
        a_eq[:n, :k] = self.vertices.T
        a_eq[:n, k:k + r] = self.rays.T
        a_eq[:n, k + r:k + r + l] = self.lineality.T
        a_eq[:n, k + r + l:k + r + 2 * l] = -self.lineality.T
        a_eq[:n, k + r + 2 * l:k + r + 2 * l + n] = np.eye(n)
        a_eq[:n, k + r + 2 * l + n:] = -np.eye(n)
        a_eq[n, :k] = 1.0
        b_eq = np.concatenate([v, [1.0]])
        res = linprog(c, A_eq=a_eq, b_eq=b_eq, bounds=[(0, None)] * nvar, method="highs")
        if not res.success:  # pragma: no cover - the slack LP is always feasible
            raise RuntimeError(f"membership LP failed: {res.message}")
        residual = float(res.fun)
        return residual <= tol * (1.0 + float(np.linalg.norm(v))), residual

    def relative_interior(self, v: np.ndarray, tol: float = RI_MARGIN_TOL) -> RiResult:
        """Relative-interior test with margin.

        The margin is the largest ``t`` such that ``v +/- t d`` stays in the
        set for every direction ``d`` in an orthonormal basis of the parallel
        subspace.  It is zero exactly on the relative boundary and reported
        as ``inf`` for singletons (the relative interior of a point is the
        point itself).
        """
        v = np.asarray(v, float)
        member, _ = self.membership(v)
        if not member:
            return RiResult(inside=False, margin=0.0)
        par = self.parallel_basis()
        q = par.shape[1]
        if q == 0:
            return RiResult(inside=True, margin=np.inf)
        gen, k, r, l = self._combination_blocks()
        n = self.dim
        per = k + r + 2 * l  # combination variables per membership constraint
        nvar = 2 * q * per + 1
        t_idx = nvar - 1
        c = np.zeros(nvar)
        c[t_idx] = -1.0  # maximize t
        rows = []
        rhs = []
        for i in range(q):
            for sign in (+1.0, -1.0):
                blk = (2 * i + (0 if sign > 0 else 1)) * per
                a = np.zeros((n + 1, nvar))
                a[:n, blk:blk + k] = self.vertices.T
                a[:n, blk + k:blk + k + r] = self.rays.T
                a[:n, blk + k + r:blk + k + r + l] = self.lineality.T
                a[:n, blk + k + r + l:blk + per] = -self.lineality.T
                a[:n, t_idx] = -sign * par[:, i]
                a[n, blk:blk + k] = 1.0
                rows.append(a)
                rhs.append(np.concatenate([v, [1.0]]))
        a_eq = np.vstack(rows)
        b_eq = np.concatenate(rhs)
        bounds = [(0, None)] * (nvar - 1) + [(0, MARGIN_CAP)]
        res = linprog(c, A_eq=a_eq, b_eq=b_eq, bounds=bounds, method="highs")
        if not res.success:
            # v is a member but no positive step exists; treat as boundary.
            return RiResult(inside=False, margin=0.0)
        margin = float(res.x[t_idx])
        if margin >= MARGIN_CAP * 0.99:
            return RiResult(inside=True, margin=np.inf)
        return RiResult(inside=margin > tol, margin=margin if margin > 0.0 else 0.0)

    def project(self, v: np.ndarray) -> tuple[np.ndarray, float]:
        """Euclidean projection of ``v`` onto the set; returns (point, distance)."""
        v = np.asarray(v, float)
        member, _ = self.membership(v)
        if member:
            return v.copy(), 0.0
        gen, k, r, l = self._combination_blocks()
        nvar = k + r + l

        def combo(z):
            return self.vertices.T @ z[:k] + self.rays.T @ z[k:k + r] + self.lineality.T @ z[k + r:]

        def obj(z):
            d = combo(z) - v
            return float(d @ d)

        def grad(z):
            d = combo(z) - v
            return 2.0 * gen @ d

        z0 = np.zeros(nvar)
        z0[:k] = 1.0 / k
        cons = [{"type": "eq", "fun": lambda z: np.sum(z[:k]) - 1.0,
                 "jac": lambda z: np.concatenate([np.ones(k), np.zeros(r + l)])}]
        bounds = [(0, None)] * (k + r) + [(None, None)] * l
        res = minimize(obj, z0, jac=grad, bounds=bounds, constraints=cons,
                       method="SLSQP", options={"maxiter": 500, "ftol": 1e-16})
        point = combo(res.x)
        return point, float(np.linalg.norm(point - v))

    def normal_cone(self, v: np.ndarray, tol: float = MEMBER_TOL) -> "SubdifferentialRep":
        """Normal cone at a member point, returned in generator (V-)form."""
        v = np.asarray(v, float)
        member, resid = self.membership(v)
        if not member:
            raise EmptySet(f"point is not a member (l1 residual {resid:.2e})")
        # H-form of the normal cone: <p_i - v, eta> <= 0, <ray, eta> <= 0,
        # <line, eta> = 0, then convert to generators.
        ineq = np.vstack([self.vertices - v, self.rays])
        rays, lin = cone_generators(ineq, self.lineality)
        zero = np.zeros((1, self.dim))
        return SubdifferentialRep(zero, rays, lin)

    def support(self, w: np.ndarray) -> float:
        """Support function ``sup {<v, w> : v in set}`` (``inf`` when unbounded)."""
        w = np.asarray(w, float)
        if self.lineality.shape[0] and np.max(np.abs(self.lineality @ w)) > 1e-12 * (1 + np.linalg.norm(w)):
            return np.inf
        if self.rays.shape[0] and np.max(self.rays @ w) > 1e-12 * (1 + np.linalg.norm(w)):
            return np.inf
        return float(np.max(self.vertices @ w))


def cone_generators(ineq: np.ndarray, eq: np.ndarray | None = None,
                    max_rays: int = 4000) -> tuple[np.ndarray, np.ndarray]:
    """Generators of the cone ``{y : ineq @ y <= 0, eq @ y = 0}``.

    Returns ``(rays, lineality)``: the cone equals
    ``cone(rays) + span(lineality)``.  Uses the double description sweep
    without adjacency bookkeeping, followed by an LP pruning pass, which is
    plenty for the small systems arising from catalog subdifferentials.
    """
    ineq = np.atleast_2d(np.asarray(ineq, float))
    n = ineq.shape[1]
    if n == 0 and eq is not None:
        n = np.atleast_2d(np.asarray(eq, float)).shape[1]
    if n == 0:
        raise ValueError("ambient dimension could not be inferred")
    ineq = ineq.reshape(-1, n)
    rows = [r for r in ineq if np.linalg.norm(r) > 0]
    if eq is not None:
        eqm = np.atleast_2d(np.asarray(eq, float)).reshape(-1, n)
        for r in eqm:
            if np.linalg.norm(r) > 0:
                rows.extend([r, -r])
    all_rows = np.array(rows).reshape(-1, n)

    # Lineality space is the null space of the full constraint matrix.
    lin = null_basis(all_rows).T if all_rows.shape[0] else np.eye(n)
    if lin.shape[0] == n:
        return np.zeros((0, n)), lin

    rays = [e for e in np.vstack([np.eye(n), -np.eye(n)])]
    for a in all_rows:
        a = a / np.linalg.norm(a)
        vals = [float(a @ r) for r in rays]
        keep = [r for r, s in zip(rays, vals) if s <= 1e-12]
        pos = [(r, s) for r, s in zip(rays, vals) if s > 1e-12]
        neg = [(r, s) for r, s in zip(rays, vals) if s < -1e-12]
        for rp, sp in pos:
            for rn, sn in neg:
                combo = sp * rn - sn * rp
                nc = np.linalg.norm(combo)
                if nc > 1e-12:
                    keep.append(combo / nc)
        rays = _dedupe_rays(keep)
        if len(rays) > max_rays:
            raise RuntimeError("double description exceeded the ray budget")

    # Remove the lineality component and degenerate rays.
    if lin.shape[0]:
        lbasis = lin.T  # (n, l)
        rays = [r - lbasis @ (lbasis.T @ r) for r in rays]
    rays = _dedupe_rays([r for r in rays if np.linalg.norm(r) > 1e-10])
    rays = _prune_redundant_rays(rays, lin, n)
    return (np.array(rays).reshape(-1, n), lin)


def _dedupe_rays(rays: list[np.ndarray]) -> list[np.ndarray]:
    out: list[np.ndarray] = []
    seen = set()
    for r in rays:
        nr = np.linalg.norm(r)
        if nr <= 1e-12:
            continue
        key = tuple(np.round(r / nr, 9))
        if key not in seen:
            seen.add(key)
            out.append(r / nr)
    return out


def _prune_redundant_rays(rays: list[np.ndarray], lin: np.ndarray, n: int) -> list[np.ndarray]:
    """Drop rays expressible as nonnegative combinations of the others."""
    kept = list(rays)
    i = 0
    while i < len(kept):
        others = kept[:i] + kept[i + 1:]
        if not others:
            break
        target = kept[i]
        gens = np.array(others).T  # (n, m)
        m = gens.shape[1]
        l = lin.shape[0]
        a_eq = np.hstack([gens, lin.T, -lin.T]) if l else gens
        nvar = m + 2 * l
        res = linprog(np.zeros(nvar), A_eq=a_eq, b_eq=target,
                      bounds=[(0, None)] * m + [(0, None)] * (2 * l),
                      method="highs")
        if res.success and np.linalg.norm(a_eq @ res.x - target) <= 1e-9:
            kept.pop(i)
        else:
            i += 1
    return kept


def halfspaces_to_vrep(a_ub: np.ndarray, b_ub: np.ndarray) -> SubdifferentialRep:
    """V-form of the (nonempty) polyhedron ``{x : a_ub @ x <= b_ub}``.

    Works through the homogenization cone ``{(x, t) : a_ub x - b_ub t <= 0,
    -t <= 0}``; generators with positive last coordinate become vertices and
    the rest become rays/lineality.
    """
    a_ub = np.atleast_2d(np.asarray(a_ub, float))
    b_ub = np.asarray(b_ub, float).ravel()
    m, n = a_ub.shape
    hom = np.hstack([a_ub, -b_ub.reshape(-1, 1)])
    hom = np.vstack([hom, np.concatenate([np.zeros(n), [-1.0]])])
    rays, lin = cone_generators(hom)
    # Lineality generators of the homogenized cone have t = 0 (t >= 0 is a
    # constraint), so they map to lineality of the polyhedron.
    verts, pr_rays = [], []
    for g in rays:
        if g[n] > 1e-10:
            verts.append(g[:n] / g[n])
        elif np.linalg.norm(g[:n]) > 1e-10:
            pr_rays.append(g[:n])
    lin_dirs = [g[:n] for g in lin if np.linalg.norm(g[:n]) > 1e-10]
    if not verts:
        raise EmptySet("polyhedron is empty")
    return SubdifferentialRep(
        np.array(verts),
        np.array(pr_rays).reshape(-1, n),
        orth_basis(np.array(lin_dirs).reshape(-1, n)).T,
    )


def vcone_to_halfspaces(generators: np.ndarray, lineality: np.ndarray | None = None) -> np.ndarray:
    """H-form rows ``D`` with ``cone(generators) + span(lineality) = {y : D y <= 0}``.

    Obtained by generating the polar cone and polarizing back.
    """
    generators = np.atleast_2d(np.asarray(generators, float))
    n = generators.shape[1]
    ineq = generators.reshape(-1, n)
    eq = None if lineality is None else np.atleast_2d(np.asarray(lineality, float)).reshape(-1, n)
    # Polar of cone(G) + span(L): {y : <g, y> <= 0, <l, y> = 0}.
    polar_rays, polar_lin = cone_generators(ineq, eq)
    rows = [r for r in polar_rays]
    for l in polar_lin:
        rows.extend([l, -l])
    return np.array(rows).reshape(-1, n)
