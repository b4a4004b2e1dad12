"""Sensitivity analysis of the generalized equation ``0 in psi(p, x) + df(x)``.

The reduced map ``B = P_T (d_x psi + Lagrangian Hessian) P_T`` on the tangent
space of the active manifold decides metric regularity; when it is
nonsingular the solution map is single-valued near the reference pair, stays
on the manifold, and its Jacobian and parameter semiderivative have the
closed forms implemented here.  A finite-difference path check validates the
semiderivative independently.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from ._newton import newton_on_manifold
from .errors import NotASolution, RiViolated, SingularReducedMap
from .funclib.model import FunctionModel
from .manifold import tangent_basis
from .second_order import LagrangianData, lagrangian_at

SOLUTION_TOL = 1e-9


@dataclass(frozen=True)
class GEProblem:
    """Perturbed generalized equation with derivative oracles.

    ``psi(p, x)`` maps a finite-dimensional parameter and an ambient point to
    an ambient vector; ``dpsi_dx`` returns the ``n x n`` Jacobian in ``x`` and
    ``dpsi_dp`` the ``n x param_dim`` Jacobian in ``p``.
    """

    fm: FunctionModel
    psi: Callable[[np.ndarray, np.ndarray], np.ndarray]
    dpsi_dx: Callable[[np.ndarray, np.ndarray], np.ndarray]
    dpsi_dp: Callable[[np.ndarray, np.ndarray], np.ndarray]
    param_dim: int


def tilt_problem(fm: FunctionModel, curvature: float = 0.0) -> GEProblem:
    """Tilt perturbation ``psi(p, x) = x - p`` with an optional cubic term
    ``curvature * x_1^3 e_1`` (used for finite-difference order checks)."""
    n = fm.dim

    def psi(p, x):
        x = np.asarray(x, float)
        out = x - np.asarray(p, float)
        if curvature != 0.0:
            out = out.copy()
            out[0] += curvature * x[0] ** 3
        return out

    def dpsi_dx(p, x):
        jac = np.eye(n)
        if curvature != 0.0:
            jac = jac.copy()
            jac[0, 0] += 3.0 * curvature * float(np.asarray(x, float)[0]) ** 2
        return jac

    def dpsi_dp(p, x):
        return -np.eye(n)

    return GEProblem(fm=fm, psi=psi, dpsi_dx=dpsi_dx, dpsi_dp=dpsi_dp, param_dim=n)


def affine_problem(fm: FunctionModel, m_x: np.ndarray, m_p: np.ndarray,
                   offset: np.ndarray | None = None) -> GEProblem:
    """Affine family ``psi(p, x) = m_x x + m_p p + offset``."""
    m_x = np.atleast_2d(np.asarray(m_x, float))
    m_p = np.atleast_2d(np.asarray(m_p, float))
    n = m_x.shape[0]
    off = np.zeros(n) if offset is None else np.asarray(offset, float)
    return GEProblem(
        fm=fm,
        psi=lambda p, x: m_x @ np.asarray(x, float) + m_p @ np.asarray(p, float) + off,
        dpsi_dx=lambda p, x: m_x,
        dpsi_dp=lambda p, x: m_p,
        param_dim=m_p.shape[1],
    )


@dataclass(frozen=True)
class RegularityReport:
    regular: bool
    min_singular_value: float
    tangent_dim: int
    lagrangian: LagrangianData = field(repr=False)


def _solution_data(ge: GEProblem, x, p, tol: float = SOLUTION_TOL) -> LagrangianData:
    x = np.asarray(x, float)
    v = -np.asarray(ge.psi(p, x), float)
    rep = ge.fm.subdifferential(x)
    member, resid = rep.membership(v, tol)
    if not member:
        raise NotASolution(f"GE residual {resid:.3e} at x={x!r}")
    ri = rep.relative_interior(v)
    if not ri.inside:
        raise RiViolated(f"-psi(p, x) has relative-interior margin {ri.margin:.2e}")
    return lagrangian_at(ge.fm, x, v)


def _reduced_map(ge: GEProblem, lag: LagrangianData, p) -> np.ndarray:
    jac = np.asarray(ge.dpsi_dx(p, lag.point), float)
    return lag.tangent.reduce(jac + lag.hessian)


def check_regularity(ge: GEProblem, x_bar, p_bar) -> RegularityReport:
    """Metric-regularity test: nonsingularity of the reduced map on the tangent
    space, reported through its smallest singular value."""
    lag = _solution_data(ge, x_bar, p_bar)
    d = lag.tangent.dim
    if d == 0:
        return RegularityReport(regular=True, min_singular_value=np.inf,
                                tangent_dim=0, lagrangian=lag)
    sv = np.linalg.svd(_reduced_map(ge, lag, p_bar), compute_uv=False)
    regular = bool(sv[-1] > 1e-10 * max(1.0, sv[0]))
    return RegularityReport(regular=regular, min_singular_value=float(sv[-1]),
                            tangent_dim=d, lagrangian=lag)


def solution_jacobian(ge: GEProblem, x, p) -> np.ndarray:
    """Jacobian of the solution map with respect to the equation right-hand
    side, in ambient coordinates; range lies in the tangent space."""
    lag = _solution_data(ge, x, p)
    basis = lag.tangent.basis
    if basis.shape[1] == 0:
        n = lag.point.size
        return np.zeros((n, n))
    reduced = _reduced_map(ge, lag, p)
    sv = np.linalg.svd(reduced, compute_uv=False)
    if sv[-1] <= 1e-12 * max(1.0, sv[0]):
        raise SingularReducedMap("reduced map is singular on the tangent space")
    return basis @ np.linalg.solve(reduced, basis.T)


def semiderivative(ge: GEProblem, x_bar, p_bar, q) -> np.ndarray:
    """Directional derivative of the solution map at ``p_bar`` for direction ``q``."""
    jac = solution_jacobian(ge, x_bar, p_bar)
    rhs = np.asarray(ge.dpsi_dp(p_bar, x_bar), float) @ np.asarray(q, float)
    return -jac @ rhs


def solve_ge(ge: GEProblem, p, x0, tol: float = 1e-11) -> np.ndarray:
    """Solve the generalized equation near ``x0`` by reduced Newton.

    The active chart is taken at the nearest graph pair of ``x0``; the
    computed point must lie on the manifold and satisfy the
    relative-interior condition, otherwise the solve is rejected.
    """
    x0 = np.asarray(x0, float)
    v0 = ge.fm.nearest_subgradient(x0, -np.asarray(ge.psi(p, x0), float))
    if v0 is None:
        raise NotASolution("cannot evaluate the subdifferential near x0")
    chart = ge.fm.active_chart(x0, v0)
    rep = ge.fm.representative(x0, v0)

    x, _ = newton_on_manifold(
        chart,
        field=lambda y: np.asarray(ge.psi(p, y), float) + np.asarray(rep.gradient(y), float),
        field_jacobian=lambda y: np.asarray(ge.dpsi_dx(p, y), float)
        + np.asarray(rep.hessian(y), float),
        x0=x0,
        tol=tol,
    )
    v = -np.asarray(ge.psi(p, x), float)
    sub = ge.fm.subdifferential(x)
    member, resid = sub.membership(v, max(SOLUTION_TOL, 10 * tol))
    if not member:
        raise NotASolution(f"Newton point fails the inclusion (residual {resid:.2e})")
    ri = sub.relative_interior(v)
    if not ri.inside:
        raise RiViolated(f"solution left the validity region (margin {ri.margin:.2e})")
    return x


@dataclass(frozen=True)
class PathCheckReport:
    steps: np.ndarray
    discrepancies: np.ndarray
    max_discrepancy: float
    loglog_slope: float | None


def solution_path_check(ge: GEProblem, p_bar, q, steps, x_bar=None) -> PathCheckReport:
    """Finite-difference validation of the semiderivative along ``p_bar + t q``.

    Reports ``|(s(p + t q) - s(p))/t - Ds(p)(q)|`` per step and the log-log
    slope of the decay (defined when at least two discrepancies are nonzero).
    """
    p_bar = np.asarray(p_bar, float)
    q = np.asarray(q, float)
    steps = np.asarray(steps, float)
    if x_bar is None:
        raise ValueError("x_bar (the reference solution) is required")
    x_bar = np.asarray(x_bar, float)
    ds = semiderivative(ge, x_bar, p_bar, q)
    discrepancies = []
    for t in steps:
        xt = solve_ge(ge, p_bar + t * q, x_bar)
        discrepancies.append(float(np.linalg.norm((xt - x_bar) / t - ds)))
    disc = np.array(discrepancies)
    slope = None
    mask = disc > 1e-14
    if np.sum(mask) >= 2:
        slope = float(np.polyfit(np.log(steps[mask]), np.log(disc[mask]), 1)[0])
    return PathCheckReport(steps=steps, discrepancies=disc,
                           max_discrepancy=float(np.max(disc)), loglog_slope=slope)
