"""Exception types shared by all lpgrad modules."""


class InvalidArgument(ValueError):
    """A precondition on an operation's arguments was violated."""


class InvalidSurface(ValueError):
    """A conformal factor sample violated positivity or boundedness."""


class EvaluationError(RuntimeError):
    """An integrand produced a non-finite value; the message names the node."""


class OutOfDomain(ValueError):
    """A query (ball radius, point) left the computed lattice domain."""


class ScheduleOverflow(RuntimeError):
    """No epsilon above the floor attains the requested integral threshold."""


class InconclusiveResolution(RuntimeError):
    """A quadrature error bar crosses a pass/fail threshold; refine the grid."""
