"""Numeric demonstrations of two instructive one- and two-dimensional functions.

The first is the integral of a dyadic piecewise affine function: smooth in a
strict first-order sense at the origin yet carrying kinks at every dyadic
point ``2^i``, so second-order quotient families behave well at zero and jump
across each kink.  The second is ``|x1^3 x2^2|``, whose second-order
quotients converge everywhere even though the function has no smooth active
structure at the origin; the module emits the Hessian-continuity diagnostic
rather than asserting any negative claim.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Hashable

import numpy as np

from .errors import RangeClamped, UnsupportedPoint
from .funclib.model import FunctionModel, Representative
from .funclib.reps import SubdifferentialRep
from .manifold import full_space_chart

# Dyadic pieces below 2^I_MIN are numerically invisible in doubles and the
# function is extended by exact zero there; above 2^(I_MAX+1) the last piece
# is continued affinely.
I_MIN = -40
I_MAX = 20


def _dyadic_index(x: float) -> int:
    mantissa, exp = math.frexp(x)  # x = mantissa * 2^exp, mantissa in [0.5, 1)
    return exp - 1


def g_eval(x: float) -> float:
    """Continuous piecewise affine ramp: 0 for x <= 0, slope 3 * 2^i on [2^i, 2^(i+1))."""
    x = float(x)
    if x <= 0.0:
        return 0.0
    i = _dyadic_index(x)
    if i < I_MIN:
        warnings.warn("argument below the dyadic range; exact-zero extension", RangeClamped)
        return 0.0
    if i > I_MAX:
        warnings.warn("argument above the dyadic range; last piece extended", RangeClamped)
        i = I_MAX
    base = math.ldexp(1.0, 2 * i)       # 2^(2i)
    slope = 3.0 * math.ldexp(1.0, i)    # 3 * 2^i
    return base + slope * (x - math.ldexp(1.0, i))


def f_integral_eval(x: float) -> float:
    """Closed-form integral of the ramp from 0 to ``x``.

    Piece sums telescope geometrically: the integral up to ``2^i`` equals
    ``5 * 8^i / 14``, and the remainder is a local quadratic.
    """
    x = float(x)
    if x <= 0.0:
        return 0.0
    i = _dyadic_index(x)
    if i < I_MIN:
        warnings.warn("argument below the dyadic range; exact-zero extension", RangeClamped)
        return 0.0
    if i > I_MAX:
        warnings.warn("argument above the dyadic range; last piece extended", RangeClamped)
        i = I_MAX
    left = math.ldexp(1.0, i)
    head = 5.0 * math.ldexp(1.0, 3 * i) / 14.0
    d = x - left
    return head + math.ldexp(1.0, 2 * i) * d + 1.5 * math.ldexp(1.0, i) * d * d


@dataclass(frozen=True)
class BoundCheckReport:
    max_bound_quotient: float
    num_pairs: int
    ok: bool


def strict_diff_bound_check(t_grid: np.ndarray | None = None) -> BoundCheckReport:
    """Check ``0 <= (g(t) - g(u)) / (t - u) <= 3 max(t, u)`` on sampled pairs.

    Reports the largest ratio of the difference quotient to its bound, which
    stays at or below one when the strict-differentiability estimate holds.
    """
    if t_grid is None:
        ks = np.arange(1, 21)
        base = np.ldexp(1.0, -ks)
        t_grid = np.sort(np.concatenate([base, 1.5 * base, [0.0, -0.25, -1.0]]))
    t_grid = np.asarray(t_grid, float)
    worst = 0.0
    pairs = 0
    ok = True
    for a in range(t_grid.size):
        for b in range(a):
            t, u = float(t_grid[a]), float(t_grid[b])
            if t <= u:
                continue
            pairs += 1
            diff = g_eval(t) - g_eval(u)
            quot = diff / (t - u)
            if quot < -1e-15:
                ok = False
            if diff == 0.0:
                continue
            bound = 3.0 * max(t, u)
            if bound <= 0.0:
                ok = False
                continue
            worst = max(worst, quot / bound)
    return BoundCheckReport(max_bound_quotient=worst, num_pairs=pairs, ok=ok and worst <= 1.0 + 1e-12)


@dataclass(frozen=True)
class KinkSlopes:
    left_slope: float
    right_slope: float

    @property
    def ratio(self) -> float:
        return self.right_slope / self.left_slope


def kink_slopes(i: int) -> KinkSlopes:
    """One-sided difference-quotient slopes of the ramp at the kink ``2^i``."""
    if not I_MIN < i <= I_MAX:
        warnings.warn("kink index outside the dyadic range", RangeClamped)
        i = min(max(i, I_MIN + 1), I_MAX)
    xk = math.ldexp(1.0, i)
    h = math.ldexp(1.0, i - 2)
    left = (g_eval(xk) - g_eval(xk - h)) / h
    right = (g_eval(xk + h) - g_eval(xk)) / h
    return KinkSlopes(left_slope=left, right_slope=right)


def abs_cubic_hessian(x1: float, x2: float) -> np.ndarray:
    """Hessian of ``|x1^3 x2^2|`` away from ``x1 = 0`` (zero on that line)."""
    s = math.copysign(1.0, x1) if x1 != 0.0 else 0.0
    return s * np.array([
        [6.0 * x1 * x2 * x2, 6.0 * x1 * x1 * x2],
        [6.0 * x1 * x1 * x2, 2.0 * x1 ** 3],
    ])


def abs_cubic_d2(x1: float, x2: float, w) -> float:
    """Second subderivative of ``|x1^3 x2^2|``: zero on the crease line,
    the Hessian quadratic form elsewhere."""
    w = np.asarray(w, float)
    if x1 == 0.0:
        return 0.0
    h = abs_cubic_hessian(x1, x2)
    return float(w @ h @ w)


@dataclass(frozen=True)
class UniformConvergenceReport:
    x1_values: np.ndarray
    max_discrepancy: np.ndarray
    linear_rate_bound: float


def abs_cubic_uniform_convergence(
    x1_values: np.ndarray | None = None, grid: int = 21
) -> UniformConvergenceReport:
    """Sup-distance of the quotient form from the zero form as ``x1 -> 0``.

    The Hessian entries all carry a factor of ``x1``, so the discrepancy over
    ``|x2| <= 1, |w| <= 1`` decays linearly; the report carries the observed
    ``max/|x1|`` bound.
    """
    if x1_values is None:
        x1_values = np.ldexp(1.0, -np.arange(1, 13))
    x1_values = np.asarray(x1_values, float)
    ws = [np.array([c, s]) for c, s in zip(np.cos(np.linspace(0, 2 * np.pi, grid)),
                                           np.sin(np.linspace(0, 2 * np.pi, grid)))]
    x2s = np.linspace(-1.0, 1.0, grid)
    sup = []
    for x1 in x1_values:
        worst = 0.0
        for x2 in x2s:
            for w in ws:
                worst = max(worst, abs(abs_cubic_d2(float(x1), float(x2), w)))
        sup.append(worst)
    sup_arr = np.array(sup)
    rate = float(np.max(sup_arr / np.abs(x1_values)))
    return UniformConvergenceReport(x1_values=x1_values, max_discrepancy=sup_arr,
                                    linear_rate_bound=rate)


class PiecewiseAffineIntegral(FunctionModel):
    """The ramp integral as a catalog entry (1-D, C^1, convex).

    The derivative is the ramp itself, so the subdifferential is a singleton
    everywhere; away from kinks the function is locally quadratic and carries
    a codimension-zero chart whose validity ends at the nearest kink.
    """

    def __init__(self):
        self.dim = 1
        self.convex = True
        self.prox_regularity_modulus = 0.0

    def eval(self, x):
        return f_integral_eval(float(np.asarray(x, float).ravel()[0]))

    def gradient_value(self, x: float) -> float:
        return g_eval(float(x))

    def subdifferential(self, x):
        x0 = float(np.asarray(x, float).ravel()[0])
        return SubdifferentialRep(np.array([[g_eval(x0)]]))

    def nearest_subgradient(self, x, v):
        x0 = float(np.asarray(x, float).ravel()[0])
        return np.array([g_eval(x0)])

    def _kink_distance(self, x0: float) -> float:
        if x0 <= 0.0:
            return abs(x0) if x0 < 0.0 else 0.0
        i = _dyadic_index(x0)
        lo, hi = math.ldexp(1.0, i), math.ldexp(1.0, i + 1)
        return min(x0 - lo, hi - x0)

    def active_chart(self, x, v):
        x0 = float(np.asarray(x, float).ravel()[0])
        self.check_subgradient(np.array([x0]), v)
        dist = self._kink_distance(x0)
        if dist <= 0.0:
            raise UnsupportedPoint("no smooth chart at a kink of the ramp")
        chart = full_space_chart(1)
        return type(chart)(
            ambient_dim=1, codim=0, phi=chart.phi, jacobian=chart.jacobian,
            hessian_tensor=chart.hessian_tensor,
            center=np.array([x0]), validity_radius=0.5 * dist)

    def representative(self, x, v):
        x0 = float(np.asarray(x, float).ravel()[0])
        if self._kink_distance(x0) <= 0.0:
            raise UnsupportedPoint("no C^2 representative at a kink of the ramp")
        if x0 < 0.0:
            slope = 0.0
        else:
            slope = 3.0 * math.ldexp(1.0, _dyadic_index(x0))
        f0 = self.eval(np.array([x0]))
        g0 = g_eval(x0)

        def value(y, _x0=x0, _f0=f0, _g0=g0, _s=slope):
            d = float(np.asarray(y, float).ravel()[0]) - _x0
            return _f0 + _g0 * d + 0.5 * _s * d * d

        return Representative(
            value=value,
            gradient=lambda y, _x0=x0, _g0=g0, _s=slope: np.array(
                [_g0 + _s * (float(np.asarray(y, float).ravel()[0]) - _x0)]),
            hessian=lambda y, _s=slope: np.array([[_s]]),
        )

    def active_signature(self, x) -> Hashable:
        x0 = float(np.asarray(x, float).ravel()[0])
        if x0 <= 0.0:
            return ("flat",)
        return ("piece", _dyadic_index(x0))
