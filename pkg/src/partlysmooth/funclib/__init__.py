"""Catalog of partly smooth functions with exact subdifferential oracles."""

from .reps import RiResult, SubdifferentialRep, cone_generators, halfspaces_to_vrep
from .model import FunctionModel, Representative
from .catalog import (
    L1Norm,
    ManifoldRestriction,
    MaxOfSmooth,
    SmoothQuadratic,
    model_from_config,
)
from .cplq import CplqFunction, CplqModel, CplqCheckResult, cplq_check

from .. import errors as _errors


def subdifferential(fm: FunctionModel, x) -> SubdifferentialRep:
    """Exact polyhedral description of the subdifferential at ``x``."""
    return fm.subdifferential(x)


def relative_interior_test(rep: SubdifferentialRep, v) -> RiResult:
    """Relative-interior membership with margin; see ``SubdifferentialRep``."""
    return rep.relative_interior(v)


def active_chart(fm: FunctionModel, x, v):
    """Chart of the active manifold at ``x`` for the subgradient ``v``."""
    return fm.active_chart(x, v)


def critical_cone(fm: FunctionModel, x, v) -> SubdifferentialRep:
    """Critical cone as the normal cone to the subdifferential at ``v``."""
    rep = fm.subdifferential(x)
    member, resid = rep.membership(v)
    if not member:
        raise _errors.NotASubgradient(f"v is not a subgradient (residual {resid:.2e})")
    return rep.normal_cone(v)


__all__ = [
    "SubdifferentialRep",
    "RiResult",
    "cone_generators",
    "halfspaces_to_vrep",
    "FunctionModel",
    "Representative",
    "L1Norm",
    "SmoothQuadratic",
    "MaxOfSmooth",
    "ManifoldRestriction",
    "CplqFunction",
    "CplqModel",
    "CplqCheckResult",
    "cplq_check",
    "model_from_config",
    "subdifferential",
    "relative_interior_test",
    "active_chart",
    "critical_cone",
]
