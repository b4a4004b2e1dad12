"""Proximal mappings, their exact Jacobians, and manifold identification.

The proximal point solves ``0 in (x - z)/r + df(x)``; the Jacobian of the
prox map at ``z`` is the inverse of ``I + r * Lagrangian Hessian`` on the
tangent space of the active manifold, composed with the tangent projector.
Every solve is verified a posteriori through the subdifferential membership
LP, and a finite-difference Jacobian is provided as an independent oracle.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._newton import newton_on_manifold
from .errors import (
    NewtonDiverged,
    NoCandidateManifold,
    RiViolated,
    SingularReducedMap,
)
from .funclib.model import FunctionModel
from .manifold import ManifoldChart, tangent_basis
from .second_order import lagrangian_at

PROX_TOL = 1e-10
# Stay inside r < 1/rho with margin when a prox-regularity modulus is declared.
R_SAFETY = 0.5


@dataclass(frozen=True)
class ProxResult:
    input: np.ndarray
    r: float
    output: np.ndarray
    residual: float
    subgradient: np.ndarray
    chart_used: ManifoldChart | None
    iterations: int = 0


def _validate_r(fm: FunctionModel, r: float):
    if r <= 0:
        raise ValueError("r must be positive")
    rho = fm.prox_regularity_modulus
    if rho > 0 and r * rho >= R_SAFETY:
        raise ValueError(f"r={r} too large for prox-regularity modulus rho={rho}"
                         f" (require r * rho < {R_SAFETY})")


def _warm_start(fm: FunctionModel, r: float, z: np.ndarray, iters: int = 100) -> np.ndarray:
    """Subgradient descent on the Moreau objective to locate the active region."""
    y = z.copy()
    step = 0.5 * r
    for k in range(iters):
        g = fm.nearest_subgradient(y, (z - y) / r)
        if g is None:
            break
        y = y - step / (1.0 + k / 10.0) * (g + (y - z) / r)
    return y


def prox(fm: FunctionModel, r: float, z, x0=None, tol: float = PROX_TOL) -> ProxResult:
    """Proximal point of ``fm`` at ``z`` with parameter ``r``.

    Uses the catalog closed form when available, otherwise enumerates
    candidate active manifolds and runs reduced Newton on each until the
    subgradient inclusion verifies.
    """
    z = np.asarray(z, float)
    _validate_r(fm, r)

    closed = fm.prox_closed_form(r, z)
    if closed is not None:
        x = np.asarray(closed, float)
        v = (z - x) / r
        rep = fm.subdifferential(x)
        member, resid = rep.membership(v, tol)
        if not member:  # pragma: no cover - closed forms are exact
            raise NoCandidateManifold(f"closed form failed verification ({resid:.2e})")
        chart = _chart_or_none(fm, x, v)
        return ProxResult(input=z, r=r, output=x, residual=resid,
                          subgradient=v, chart_used=chart)

    warm = np.asarray(x0, float) if x0 is not None else _warm_start(fm, r, z)
    last_err: Exception | None = None
    for chart, rep in fm.prox_candidates(r, z, warm):
        try:
            x, iters = newton_on_manifold(
                chart,
                field=lambda y: np.asarray(rep.gradient(y), float) + (y - z) / r,
                field_jacobian=lambda y: np.asarray(rep.hessian(y), float) + np.eye(z.size) / r,
                x0=warm,
            )
        except NewtonDiverged as exc:
            last_err = exc
            continue
        v = (z - x) / r
        sub = fm.subdifferential(x)
        member, resid = sub.membership(v, tol)
        if member and chart.on_manifold(x, tol=1e-8):
            return ProxResult(input=z, r=r, output=x, residual=resid,
                              subgradient=v, chart_used=chart, iterations=iters)
    if last_err is not None:
        raise NewtonDiverged(str(last_err))
    raise NoCandidateManifold("no candidate manifold verified the prox inclusion")


def _chart_or_none(fm: FunctionModel, x: np.ndarray, v: np.ndarray) -> ManifoldChart | None:
    try:
        return fm.active_chart(x, v)
    except Exception:
        return None


def prox_jacobian(fm: FunctionModel, r: float, z, result: ProxResult | None = None) -> np.ndarray:
    """Exact Jacobian of the prox map in ambient coordinates.

    Requires the prox subgradient to lie in the relative interior of the
    subdifferential at the output (positive margin); the result is symmetric
    PSD with rank equal to the tangent dimension for convex entries.
    """
    z = np.asarray(z, float)
    res = result if result is not None else prox(fm, r, z)
    x, v = res.output, res.subgradient
    ri = fm.subdifferential(x).relative_interior(v)
    if not ri.inside:
        raise RiViolated(f"prox subgradient has margin {ri.margin:.2e}")
    lag = lagrangian_at(fm, x, v)
    basis = lag.tangent.basis
    d = basis.shape[1]
    if d == 0:
        return np.zeros((z.size, z.size))
    reduced = np.eye(d) + r * lag.tangent.reduce(lag.hessian)
    sv = np.linalg.svd(reduced, compute_uv=False)
    if sv[-1] <= 1e-12 * max(1.0, sv[0]):
        raise SingularReducedMap("I + r * reduced Hessian is singular on the tangent space")
    return basis @ np.linalg.solve(reduced, basis.T)


def prox_jacobian_fd(fm: FunctionModel, r: float, z, h: float = 1e-5) -> np.ndarray:
    """Central-difference Jacobian of the prox map, column by column."""
    z = np.asarray(z, float)
    n = z.size
    cols = []
    for i in range(n):
        e = np.zeros(n)
        e[i] = h
        xp = prox(fm, r, z + e).output
        xm = prox(fm, r, z - e).output
        cols.append((xp - xm) / (2.0 * h))
    return np.column_stack(cols)


def identification_test(
    fm: FunctionModel,
    x_bar,
    v_bar,
    r: float,
    *,
    num_samples: int = 200,
    radius: float = 0.05,
    seed: int = 0,
    manifold_tol: float = 1e-8,
) -> float:
    """Fraction of sampled prox inputs whose output lands on the active manifold.

    Samples ``z`` in a ball around ``x_bar + r v_bar``; each sample uses its
    own counter-based stream so the result is independent of evaluation
    order.
    """
    x_bar = np.asarray(x_bar, float)
    v_bar = np.asarray(v_bar, float)
    ri = fm.subdifferential(x_bar).relative_interior(v_bar)
    if not ri.inside:
        raise RiViolated(f"reference subgradient margin {ri.margin:.2e}")
    chart = fm.active_chart(x_bar, v_bar)
    center = x_bar + r * v_bar
    hits = 0
    for s in range(num_samples):
        rng = np.random.Generator(np.random.Philox(key=np.array([seed, s], dtype=np.uint64)))
        u = rng.standard_normal(x_bar.size)
        nu = np.linalg.norm(u)
        if nu > 0:
            u = u / nu
        z = center + radius * rng.uniform(0.0, 1.0) * u
        out = prox(fm, r, z).output
        if chart.on_manifold(out, tol=manifold_tol):
            hits += 1
    return hits / float(num_samples)
