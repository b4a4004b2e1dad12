"""Exception types shared across the toolkit."""


class PartlySmoothError(Exception):
    """Base class for all toolkit errors."""


class RankDeficient(PartlySmoothError):
    """Chart Jacobian has numerical rank below the declared codimension."""


class NotInRange(PartlySmoothError):
    """Right-hand side is not in the range of the adjoint Jacobian (not a normal vector)."""


class UnsupportedPoint(PartlySmoothError):
    """Catalog entry cannot describe the subdifferential exactly at this point."""


class EmptySet(PartlySmoothError):
    """Queried polyhedral set is empty."""


class NotASubgradient(PartlySmoothError):
    """Vector fails the subdifferential membership test."""


class DegenerateActiveSet(PartlySmoothError):
    """Active gradient differences are rank deficient; no valid manifold chart."""


class PointOutsideDomain(PartlySmoothError):
    """Point lies outside the function domain."""


class RiViolated(PartlySmoothError):
    """Relative-interior condition fails; closed-form results are not guaranteed."""


class NoCandidateManifold(PartlySmoothError):
    """Proximal solver exhausted its candidate active manifolds."""


class NewtonDiverged(PartlySmoothError):
    """Reduced Newton iteration failed to reach tolerance."""


class SingularReducedMap(PartlySmoothError):
    """Reduced linear map on the tangent space is singular."""


class NotASolution(PartlySmoothError):
    """Point does not solve the generalized equation at the given parameter."""


class ManifoldAmbiguous(PartlySmoothError):
    """Warm-start iterations did not settle on a single active manifold."""


class DimensionMismatch(PartlySmoothError):
    """Operands were built for different ambient spaces."""


class ConfigInvalid(PartlySmoothError):
    """Experiment configuration failed validation."""


class RangeClamped(UserWarning):
    """Evaluation outside the supported dyadic range; value was clamped."""
