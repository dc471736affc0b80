"""Exception hierarchy shared by every stage of the planner."""


class PlannerError(Exception):
    """Base class for all planner errors."""


class InputError(PlannerError, ValueError):
    """Malformed user input (files, config, waypoints)."""


class InfeasibleSpeedError(PlannerError, ValueError):
    """Requested speed leaves no admissible wheel-speed combination."""


class DomainError(PlannerError, ValueError):
    """Spline parameter outside the curve's valid domain."""


class DegenerateTangentError(PlannerError, ValueError):
    """Tangent norm too small to define a heading or curvature."""


class SingularFitError(PlannerError):
    """Interpolation system could not be solved."""


class DegeneratePathError(PlannerError, ValueError):
    """Consecutive samples (or waypoints) are too close together."""


class BoundaryInfeasibleError(PlannerError):
    """Boundary conditions contradict the velocity caps or path geometry."""

    def __init__(self, message, family="boundary"):
        super().__init__(message)
        self.family = family


class StalledSegmentError(PlannerError):
    """A segment has (near) zero mean speed, so its duration is undefined."""


class GuardError(PlannerError):
    """Problem too large for the brute-force oracle."""


class NoFeasiblePathError(PlannerError):
    """The dynamic-programming oracle found no grid-feasible profile."""
