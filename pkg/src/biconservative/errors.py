"""Exception types shared across the package."""


class GeometryError(ValueError):
    """Base class for numerical-geometry failures."""


class DomainError(GeometryError):
    """Point lies outside a chart's validity box."""


class DegenerateMetricError(GeometryError):
    """Induced metric is (numerically) singular: not an immersion here."""


class FrameAmbiguityError(GeometryError):
    """Principal frame is ill-defined at the requested clustering tolerance."""


class FocalError(GeometryError):
    """Evolution factor reached the focal threshold."""


class MinimalSeedError(GeometryError):
    """Seed curvatures sum to zero; the evolution would be minimal."""


class IntegrationError(GeometryError):
    """ODE integrator could not make progress."""


class NoRegularValueError(GeometryError):
    """Mean curvature has no regular value (CMC input)."""
