"""Exception types shared across the package."""


class HKTwistError(Exception):
    """Base class for all package errors."""


class DomainError(HKTwistError):
    """Input outside the mathematical domain of an operation."""


class SingularityError(DomainError):
    """Evaluation requested at a charge point / coordinate singularity."""


class BranchError(HKTwistError):
    """Branch bookkeeping failure (cut crossing without chart data, etc.)."""


class BranchTrackingError(BranchError):
    """Continuous argument tracking failed (step too coarse or path near 0)."""


class RayProximityError(HKTwistError):
    """Twistor parameter too close to a jump ray for direct evaluation."""


class InvariantViolationError(HKTwistError):
    """A quantity the theory guarantees nonzero/bounded failed its guard."""


class SolverError(HKTwistError):
    """Nonlinear solver failed to converge."""

    def __init__(self, message, residual_history=None):
        super().__init__(message)
        self.residual_history = list(residual_history or [])


class SeedRadiusError(HKTwistError):
    """Dominance margin at the requested seed radius is insufficient."""


class DegenerateFrameError(HKTwistError):
    """Wedge of flat sections fell below the degeneracy threshold."""


class LabelingUndefinedError(HKTwistError):
    """Sector labeling requested on the labeling cut ray."""


class PathError(HKTwistError):
    """Transport path leaves the solved grid or gets too close to a turning point."""
