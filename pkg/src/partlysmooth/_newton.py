"""Reduced Newton solver for stationarity systems on a charted manifold.

Solves the square system consisting of the chart equations together with the
tangent-projected stationarity of a vector field: ``phi(y) = 0`` and
``B(y)^T psi(y) = 0`` where ``B(y)`` is a tangent basis.  The Newton matrix
stacks the chart Jacobian over the projected field Jacobian corrected by the
multiplier curvature term; iterates are damped by Armijo backtracking on the
squared residual.
"""

from __future__ import annotations

from typing import Callable

import numpy as np

from .errors import NewtonDiverged
from .manifold import ManifoldChart, tangent_basis

NEWTON_TOL = 1e-11
MAX_ITER = 100


def newton_on_manifold(
    chart: ManifoldChart,
    field: Callable[[np.ndarray], np.ndarray],
    field_jacobian: Callable[[np.ndarray], np.ndarray],
    x0: np.ndarray,
    *,
    tol: float = NEWTON_TOL,
    max_iter: int = MAX_ITER,
) -> tuple[np.ndarray, int]:
    """Find ``y`` with ``phi(y) = 0`` and ``field(y)`` normal to the manifold.

    Returns the solution and the iteration count; raises ``NewtonDiverged``
    when the residual does not reach tolerance.
    """
    y = np.asarray(x0, float).copy()
    n = chart.ambient_dim

    def residual(pt: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        tb = tangent_basis(chart, pt)
        g = np.asarray(field(pt), float)
        phi = np.asarray(chart.phi(pt), float) if chart.codim else np.zeros(0)
        return np.concatenate([phi, tb.basis.T @ g]), g, tb.basis

    res, g, basis = residual(y)
    scale = 1.0 + float(np.linalg.norm(g))
    for it in range(max_iter):
        if np.linalg.norm(res) <= tol * scale:
            return y, it
        if chart.codim:
            jac_phi = np.asarray(chart.jacobian(y), float)
            mu, *_ = np.linalg.lstsq(jac_phi.T, -g, rcond=None)
            curv = np.tensordot(mu, np.asarray(chart.hessian_tensor(y), float), axes=1)
        else:
            jac_phi = np.zeros((0, n))
            curv = np.zeros((n, n))
        jac_field = np.asarray(field_jacobian(y), float) + curv
        newton_mat = np.vstack([jac_phi, basis.T @ jac_field])
        try:
            step = np.linalg.solve(newton_mat, -res)
        except np.linalg.LinAlgError:
            step, *_ = np.linalg.lstsq(newton_mat, -res, rcond=None)
        # Armijo backtracking on the squared residual.
        base = float(res @ res)
        alpha = 1.0
        for _ in range(30):
            trial = y + alpha * step
            try:
                res_t, g_t, basis_t = residual(trial)
            except Exception:
                alpha *= 0.5
                continue
            if float(res_t @ res_t) <= (1.0 - 1e-4 * alpha) * base or alpha < 1e-8:
                y, res, g, basis = trial, res_t, g_t, basis_t
                break
            alpha *= 0.5
        else:
            raise NewtonDiverged("backtracking stalled")
        scale = 1.0 + float(np.linalg.norm(g))
    if np.linalg.norm(res) <= tol * scale:
        return y, max_iter
    raise NewtonDiverged(f"residual {np.linalg.norm(res):.3e} after {max_iter} iterations")
