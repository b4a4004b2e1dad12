"""Second-order variational toolkit for partly smooth functions."""

__version__ = "0.1.0"

from . import errors
from .manifold import (
    ManifoldChart,
    TangentBasis,
    affine_chart,
    full_space_chart,
    project_tangent,
    solve_multiplier,
    tangent_basis,
)

__all__ = [
    "errors",
    "ManifoldChart",
    "TangentBasis",
    "affine_chart",
    "full_space_chart",
    "project_tangent",
    "solve_multiplier",
    "tangent_basis",
    "__version__",
]
