"""Exception hierarchy shared by all segdyn modules."""


class SegdynError(Exception):
    """Base class for all segdyn errors."""


class NonPositiveDimension(SegdynError):
    """A physical parameter that must be strictly positive is not."""


class SlopeOutOfRange(SegdynError):
    """Density slope outside the open interval keeping the density positive."""


class OnSegment(SegdynError):
    """Evaluation point lies on (or numerically on) the segment."""


class AxisSingularity(SegdynError):
    """Cylindrical chart is singular: r ~ 0 with nonzero angular momentum."""


class DomainViolation(SegdynError):
    """Arguments outside the admissible (s, d) or parameter domain."""


class ZeroAngularMomentum(SegdynError):
    """Operation undefined for c = 0."""


class QuadratureNotConverged(SegdynError):
    """Adaptive quadrature error estimate above the requested bound."""


class NewtonDiverged(SegdynError):
    """Newton iteration failed to reach the residual tolerance."""


class StepSizeUnderflow(SegdynError):
    """Integrator step size collapsed away from the collision set."""


class MaxStepsExceeded(SegdynError):
    """Propagation exceeded the configured step budget."""


class OutsideEnergyShell(SegdynError):
    """Section seed has no real lift at the requested energy."""


class NoReturn(SegdynError):
    """Orbit left the section domain (collision/escape) before returning."""


class AxisCrossing(SegdynError):
    """Reduced trajectory reached r = 0; azimuth reconstruction undefined."""
