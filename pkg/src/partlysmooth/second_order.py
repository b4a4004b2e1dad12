"""Second-order difference quotients, closed-form second subderivatives and
graphical derivatives on the active manifold, a numeric liminf oracle, a
strict-stability probe for the quotient family, and the quadratic growth test.

The closed forms evaluate the Lagrangian Hessian restricted to the tangent
space; every formula here is paired with the sampling oracle
``second_subderivative_numeric`` so tests can compare the two routes
independently.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import RiViolated, UnsupportedPoint
from .funclib.model import FunctionModel
from .manifold import ManifoldChart, TangentBasis, tangent_basis, solve_multiplier

# Extended-real encoding in numeric paths: values at or above the cap mean
# "+infinity"; results carry an explicit flag as well.
INF_CAP = 1e12
DIVERGE_ABS = 1e5
TANGENCY_TOL = 1e-8


@dataclass(frozen=True)
class LagrangianData:
    """Multiplier and ambient Lagrangian Hessian at a graph pair ``(x, v)``."""

    point: np.ndarray
    subgradient: np.ndarray
    multiplier: np.ndarray
    hessian: np.ndarray          # ambient matrix of d2_xx L(x, mu)
    tangent: TangentBasis
    chart: ManifoldChart

    def reduced(self) -> np.ndarray:
        """Hessian compressed to tangent coordinates."""
        return self.tangent.reduce(self.hessian)


def difference_quotient(fm: FunctionModel, x, v, t: float, w) -> float:
    """Second-order difference quotient ``(f(x+tw) - f(x) - t<v,w>) / (t^2/2)``.

    Returns ``inf`` when the step leaves the domain; never raises.
    """
    if t <= 0:
        raise ValueError("t must be positive")
    x = np.asarray(x, float)
    w = np.asarray(w, float)
    v = np.asarray(v, float)
    fx = fm.eval(x)
    fstep = fm.eval(x + t * w)
    if not np.isfinite(fstep):
        return np.inf
    return (fstep - fx - t * float(v @ w)) / (0.5 * t * t)


def lagrangian_at(fm: FunctionModel, x, v) -> LagrangianData:
    """Assemble the multiplier and Lagrangian Hessian at ``(x, v)``.

    ``NotInRange`` propagates from the multiplier solve when ``v - grad
    fhat(x)`` is not a normal vector, i.e. normal sharpness fails at ``x``.
    """
    x = np.asarray(x, float)
    v = np.asarray(v, float)
    chart = fm.active_chart(x, v)
    rep = fm.representative(x, v)
    tb = tangent_basis(chart, x)
    mu = solve_multiplier(chart, x, v - np.asarray(rep.gradient(x), float))
    hess = np.asarray(rep.hessian(x), float)
    if chart.codim > 0 and mu.size:
        hess = hess + np.tensordot(mu, np.asarray(chart.hessian_tensor(x), float), axes=1)
    hess = 0.5 * (hess + hess.T)
    return LagrangianData(point=x, subgradient=v, multiplier=mu, hessian=hess,
                          tangent=tb, chart=chart)


def _require_ri(fm: FunctionModel, x, v):
    rep = fm.subdifferential(np.asarray(x, float))
    ri = rep.relative_interior(np.asarray(v, float))
    if not ri.inside:
        raise RiViolated(f"v is not in the relative interior (margin {ri.margin:.2e})")
    return ri


def second_subderivative(fm: FunctionModel, x, v, w) -> float:
    """Closed-form second subderivative: the Lagrangian Hessian quadratic form
    on tangent directions, ``inf`` elsewhere."""
    _require_ri(fm, x, v)
    lag = lagrangian_at(fm, x, v)
    w = np.asarray(w, float)
    wn = np.linalg.norm(w)
    if wn > 0 and np.linalg.norm(w - lag.tangent.project(w)) > TANGENCY_TOL * wn:
        return np.inf
    return float(w @ lag.hessian @ w)


@dataclass(frozen=True)
class GraphicalDerivativeSet:
    """Value of the subgradient graphical derivative: an affine set
    ``base + span(normal_basis)`` on tangent directions, empty otherwise."""

    empty: bool
    base: np.ndarray | None = None
    normal_basis: np.ndarray | None = None  # (n, m) columns

    def contains(self, u, tol: float = 1e-9) -> bool:
        if self.empty:
            return False
        d = np.asarray(u, float) - self.base
        if self.normal_basis is None or self.normal_basis.shape[1] == 0:
            return bool(np.linalg.norm(d) <= tol * (1 + np.linalg.norm(u)))
        resid = d - self.normal_basis @ (self.normal_basis.T @ d)
        return bool(np.linalg.norm(resid) <= tol * (1 + np.linalg.norm(u)))


def graphical_derivative(fm: FunctionModel, x, v, w) -> GraphicalDerivativeSet:
    """Graphical derivative of the subgradient map at ``(x, v)`` in direction ``w``."""
    _require_ri(fm, x, v)
    lag = lagrangian_at(fm, x, v)
    w = np.asarray(w, float)
    wn = np.linalg.norm(w)
    if wn > 0 and np.linalg.norm(w - lag.tangent.project(w)) > TANGENCY_TOL * wn:
        return GraphicalDerivativeSet(empty=True)
    x = np.asarray(x, float)
    return GraphicalDerivativeSet(
        empty=False,
        base=lag.hessian @ w,
        normal_basis=lag.chart.normal_basis(x),
    )


# ---------------------------------------------------------------------------
# numeric liminf oracle
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class QuotientEstimate:
    """Result of the sampling oracle for the second subderivative.

    ``value`` is capped at ``INF_CAP`` with ``infinite`` set when the sampled
    quotients blow up.  ``level_minima`` and ``center_path`` keep the
    per-refinement diagnostics used by the estimator.
    """

    value: float
    infinite: bool
    level_minima: np.ndarray = field(repr=False, default=None)  # type: ignore[assignment]
    center_path: np.ndarray = field(repr=False, default=None)  # type: ignore[assignment]


def sample_unit_directions(n: int, count: int, seed: int = 0) -> np.ndarray:
    """Deterministic unit directions; in one dimension just ``{+1, -1}``."""
    if n == 1:
        return np.array([[1.0], [-1.0]])
    rng = np.random.Generator(np.random.Philox(key=np.array([seed, 0x5eed], dtype=np.uint64)))
    dirs = rng.standard_normal((count, n))
    norms = np.linalg.norm(dirs, axis=1, keepdims=True)
    return dirs / np.maximum(norms, 1e-12)


def second_subderivative_numeric(
    fm: FunctionModel,
    x,
    v,
    w,
    *,
    t0: float = 0.1,
    max_levels: int = 20,
    ball_radius: float = 0.1,
    ball_samples: int = 32,
    oracle_tol: float = 1e-6,
    seed: int = 0,
) -> QuotientEstimate:
    """Sampling estimate of the liminf of second-order difference quotients.

    The grid is geometric in both the step ``t = t0 * 2^-j`` and the ball
    radius around ``w``.  The estimate is upper biased: finitely many sampled
    directions can only overestimate the infimum over a neighborhood.  Three
    regimes are distinguished per refinement level ``j`` with ball minimum
    ``m_j`` and center value ``c_j = quotient(t_j, w)``:

    * blow-up: the minima grow geometrically or exceed an absolute threshold,
      so the liminf is reported as ``+inf`` (capped value);
    * settled center: ``c_j`` is constant across the numerically valid levels
      and the ball minima close the gap to it geometrically, so the constant
      is returned (this path keeps full precision for quotients that do not
      depend on ``t``);
    * otherwise the minimum over the finest numerically valid levels is
      returned, where validity bounds the floating-point error
      ``~eps * scale / (t^2/2)`` of each quotient against ``oracle_tol``.
    """
    x = np.asarray(x, float)
    v = np.asarray(v, float)
    w = np.asarray(w, float)
    f0 = fm.eval(x)
    if not np.isfinite(f0):
        raise UnsupportedPoint("f(x) must be finite")
    dirs = sample_unit_directions(x.size, ball_samples, seed)
    eps = np.finfo(float).eps

    minima, centers, noise = [], [], []
    for j in range(max_levels):
        t = t0 * 2.0 ** (-j)
        rad = ball_radius * 2.0 ** (-j)
        half_t2 = 0.5 * t * t
        samples = [w] + [w + rad * d for d in dirs]
        vals, mags = [], [abs(f0)]
        for wp in samples:
            fstep = fm.eval(x + t * wp)
            lin = t * float(v @ wp)
            if not np.isfinite(fstep):
                vals.append(INF_CAP)
                continue
            mags.extend([abs(fstep), abs(lin)])
            vals.append(min((fstep - f0 - lin) / half_t2, INF_CAP))
        centers.append(vals[0])
        minima.append(min(vals))
        noise.append(4.0 * eps * max(mags) / half_t2)

    m = np.array(minima)
    c = np.array(centers)
    nz = np.array(noise)

    # Hard infeasibility: every sampled step left the domain.
    if np.all(m >= INF_CAP):
        return QuotientEstimate(INF_CAP, True, m, c)

    # Blow-up detection on the tail of the minima sequence.
    if m[-1] >= DIVERGE_ABS:
        return QuotientEstimate(INF_CAP, True, m, c)
    tail = m[-4:]
    if np.all(tail[:-1] > 0) and np.all(tail[1:] >= 1.6 * tail[:-1]) and tail[-1] > 1e3:
        return QuotientEstimate(INF_CAP, True, m, c)

    valid = np.flatnonzero(nz <= oracle_tol * (1.0 + np.abs(m)))
    if valid.size == 0:
        valid = np.array([0])

    # Settled-center shortcut: quotient constant in t with vanishing ball gap.
    c_valid = c[valid]
    if np.all(np.isfinite(c_valid)) and np.all(c_valid < INF_CAP):
        tol_c = oracle_tol * (1.0 + abs(c_valid[0]))
        if np.max(np.abs(c_valid - c_valid[0])) <= tol_c:
            gaps = c[valid] - m[valid]
            settled = True
            for a, b in zip(gaps[:-1], gaps[1:]):
                if not (b <= 0.75 * a + tol_c):
                    settled = False
                    break
            if settled and gaps[-1] <= max(tol_c, 0.75 ** max(valid.size - 1, 1) * (gaps[0] + tol_c)):
                return QuotientEstimate(float(c_valid[0]), False, m, c)

    take = valid[-3:]
    est = float(np.min(m[take]))
    return QuotientEstimate(est, est >= 0.5 * INF_CAP, m, c)


# ---------------------------------------------------------------------------
# strict stability probe
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class StrictProbeReport:
    stable: bool
    worst_discrepancy: float
    offending_pair: tuple[np.ndarray, np.ndarray] | None
    domain_jump: bool
    level_discrepancies: list[float]


def strict_ted_probe(
    fm: FunctionModel,
    x,
    v,
    *,
    neighborhood_radius: float = 1e-2,
    num_pairs: int = 8,
    direction_grid: np.ndarray | None = None,
    levels: int = 3,
    shrink: float = 4.0,
    probe_tol: float = 1e-5,
    seed: int = 2024,
    oracle_kwargs: dict | None = None,
) -> StrictProbeReport:
    """Probe stability of the second-order quotients along the subgradient graph.

    Graph pairs are sampled in balls of geometrically shrinking radius around
    ``(x, v)``; at each pair the numeric oracle evaluates the second
    subderivative over a direction grid.  The family is flagged unstable when
    effective domains (finite vs blow-up) differ between pairs at any radius,
    or when value discrepancies against the center neither fall below
    tolerance nor shrink with the radius.  Boundary subgradients show up as
    domain jumps; kinks of the underlying function show up as value plateaus.
    """
    x = np.asarray(x, float)
    v = np.asarray(v, float)
    n = x.size
    if direction_grid is None:
        grid = [e for e in np.eye(n)] + [-e for e in np.eye(n)]
        if n > 1:
            diag = np.ones(n) / np.sqrt(n)
            grid += [diag, -diag]
        direction_grid = np.array(grid)
    okw = {"ball_samples": 12, "max_levels": 18, "t0": 0.05}
    if oracle_kwargs:
        okw.update(oracle_kwargs)

    def estimates(px, pv):
        out = []
        for w in direction_grid:
            out.append(second_subderivative_numeric(fm, px, pv, w, **okw))
        return out

    center_est = estimates(x, v)
    center_dom = [not e.infinite for e in center_est]
    center_scale = max([abs(e.value) for e in center_est if not e.infinite] + [0.0])
    threshold = probe_tol * (1.0 + center_scale)

    disc_levels: list[float] = []
    worst = 0.0
    offender = None
    domain_jump = False
    for lvl in range(levels):
        radius = neighborhood_radius / (shrink ** lvl)
        rng = np.random.Generator(np.random.Philox(
            key=np.array([seed, lvl], dtype=np.uint64)))
        pairs = fm.graph_pairs(x, v, radius, num_pairs, rng)
        disc = 0.0
        for (px, pv) in pairs[1:]:  # element 0 is the center pair
            ests = estimates(px, pv)
            doms = [not e.infinite for e in ests]
            if doms != center_dom:
                domain_jump = True
                worst = np.inf
                offender = (px, pv)
                continue
            for e, ce, dom in zip(ests, center_est, doms):
                if not dom:
                    continue
                d = abs(e.value - ce.value)
                if d > disc:
                    disc = d
                if d > worst:
                    worst = d
                    offender = (px, pv)
        disc_levels.append(disc)

    if domain_jump:
        return StrictProbeReport(False, np.inf, offender, True, disc_levels)

    final_disc = disc_levels[-1]
    decaying = all(
        b <= 0.6 * a + threshold for a, b in zip(disc_levels[:-1], disc_levels[1:])
    )
    stable = final_disc <= threshold or decaying
    return StrictProbeReport(bool(stable), float(final_disc),
                             None if stable else offender, False, disc_levels)


@dataclass(frozen=True)
class QuadraticGrowthResult:
    holds: bool
    min_eigenvalue: float


def quadratic_growth_check(fm: FunctionModel, x) -> QuadraticGrowthResult:
    """Quadratic growth at a critical point with ``0`` in the relative interior
    of the subdifferential: positive definiteness of the reduced Hessian."""
    x = np.asarray(x, float)
    zero = np.zeros(x.size)
    _require_ri(fm, x, zero)
    lag = lagrangian_at(fm, x, zero)
    if lag.tangent.dim == 0:
        return QuadraticGrowthResult(holds=True, min_eigenvalue=np.inf)
    eigs = np.linalg.eigvalsh(lag.reduced())
    return QuadraticGrowthResult(holds=bool(eigs[0] > 0.0), min_eigenvalue=float(eigs[0]))
