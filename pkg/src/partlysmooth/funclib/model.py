"""Base protocol for catalog function models.

A function model bundles everything the second-order machinery needs from a
partly smooth function: an extended-real evaluator, an exact polyhedral
subdifferential oracle, a C^2 representative valid near a reference pair,
and a chart of the active manifold.  Models are immutable and every query is
pure, so they are safe to share across threads.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Hashable, Iterator

import numpy as np

from ..errors import NotASubgradient, UnsupportedPoint
from ..manifold import ManifoldChart, tangent_basis
from .reps import SubdifferentialRep


@dataclass(frozen=True)
class Representative:
    """C^2 data of a smooth representative ``fhat`` with ``fhat = f`` on the manifold."""

    value: Callable[[np.ndarray], float]
    gradient: Callable[[np.ndarray], np.ndarray]
    hessian: Callable[[np.ndarray], np.ndarray]


class FunctionModel:
    """Abstract catalog entry; concrete entries implement the oracles below."""

    dim: int
    convex: bool = True
    # Prox-regularity modulus rho; declared metadata, 0 for convex entries.
    prox_regularity_modulus: float = 0.0

    # -- required oracles ----------------------------------------------------

    def eval(self, x: np.ndarray) -> float:
        raise NotImplementedError

    def subdifferential(self, x: np.ndarray) -> SubdifferentialRep:
        raise NotImplementedError

    def representative(self, x: np.ndarray, v: np.ndarray) -> Representative:
        raise NotImplementedError

    def active_chart(self, x: np.ndarray, v: np.ndarray) -> ManifoldChart:
        raise NotImplementedError

    # -- optional structure ----------------------------------------------------

    def prox_closed_form(self, r: float, z: np.ndarray) -> np.ndarray | None:
        """Closed-form proximal point when the entry has one, else None."""
        return None

    def prox_candidates(
        self, r: float, z: np.ndarray, warm: np.ndarray
    ) -> Iterator[tuple[ManifoldChart, Representative]]:
        """Candidate active manifolds for the Newton prox solver."""
        v_guess = self.nearest_subgradient(warm, (np.asarray(z, float) - warm) / r)
        if v_guess is None:
            return iter(())
        chart = self.active_chart(warm, v_guess)
        return iter([(chart, self.representative(warm, v_guess))])

    def active_signature(self, x: np.ndarray) -> Hashable:
        """Hashable label of the active structure at ``x`` (e.g. a support set)."""
        raise NotImplementedError

    def nearest_subgradient(self, x: np.ndarray, v: np.ndarray) -> np.ndarray | None:
        """Euclidean-nearest element of the subdifferential at ``x`` to ``v``.

        Returns None when the subdifferential is unavailable at ``x`` (for
        instance outside the domain).
        """
        try:
            rep = self.subdifferential(np.asarray(x, float))
        except UnsupportedPoint:
            return None
        point, _ = rep.project(np.asarray(v, float))
        return point

    # -- shared helpers --------------------------------------------------------

    def check_subgradient(self, x: np.ndarray, v: np.ndarray, tol: float = 1e-9) -> SubdifferentialRep:
        rep = self.subdifferential(np.asarray(x, float))
        member, resid = rep.membership(np.asarray(v, float), tol)
        if not member:
            raise NotASubgradient(f"membership residual {resid:.3e} at x={x!r}")
        return rep

    def graph_pairs(
        self,
        x: np.ndarray,
        v: np.ndarray,
        radius: float,
        count: int,
        rng: np.random.Generator,
    ) -> list[tuple[np.ndarray, np.ndarray]]:
        """Sample pairs of the subgradient graph inside a ball around ``(x, v)``.

        Half of the budget perturbs along the active manifold (using the local
        graph structure), half perturbs in ambient space and projects the dual
        component back onto the subdifferential; ambient pairs whose dual
        component moves farther than ``radius`` are discarded.  The center
        pair is always included.
        """
        x = np.asarray(x, float)
        v = np.asarray(v, float)
        pairs: list[tuple[np.ndarray, np.ndarray]] = [(x.copy(), v.copy())]

        chart = None
        try:
            chart = self.active_chart(x, v)
        except (UnsupportedPoint, NotASubgradient):
            chart = None
        if chart is not None:
            basis = tangent_basis(chart, x).basis
            for _ in range(count // 2):
                step = np.zeros(self.dim)
                if basis.shape[1] > 0:
                    coef = rng.standard_normal(basis.shape[1])
                    nrm = np.linalg.norm(coef)
                    if nrm > 0:
                        step = basis @ (coef / nrm * radius * rng.uniform(0.1, 1.0))
                y = retract_to_manifold(chart, x + step)
                if y is None:
                    continue
                v_target = v + radius * _random_unit(rng, self.dim) * rng.uniform(0.0, 1.0)
                vy = self.nearest_subgradient(y, v_target)
                if vy is None or np.linalg.norm(vy - v) > radius:
                    continue
                pairs.append((y, vy))

        for _ in range(count - len(pairs) + 1):
            y = x + radius * _random_unit(rng, self.dim) * rng.uniform(0.1, 1.0)
            if not np.isfinite(self.eval(y)):
                continue
            vy = self.nearest_subgradient(y, v)
            if vy is None or np.linalg.norm(vy - v) > radius:
                continue
            pairs.append((y, vy))
        return pairs[: count + 1]


def retract_to_manifold(chart: ManifoldChart, y: np.ndarray,
                        tol: float = 1e-12, max_iter: int = 30) -> np.ndarray | None:
    """Gauss-Newton projection of ``y`` onto the zero set of the chart map."""
    y = np.asarray(y, float).copy()
    if chart.codim == 0:
        return y
    for _ in range(max_iter):
        val = np.asarray(chart.phi(y), float)
        if np.linalg.norm(val) <= tol:
            return y
        jac = np.asarray(chart.jacobian(y), float)
        step, *_ = np.linalg.lstsq(jac, val, rcond=None)
        y = y - step
    return y if np.linalg.norm(chart.phi(y)) <= 1e-9 else None


def _random_unit(rng: np.random.Generator, n: int) -> np.ndarray:
    u = rng.standard_normal(n)
    nrm = np.linalg.norm(u)
    while nrm < 1e-12:  # pragma: no cover - essentially impossible
        u = rng.standard_normal(n)
        nrm = np.linalg.norm(u)
    return u / nrm
