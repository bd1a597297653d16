"""Exception hierarchy shared across the package.

Every error carries a short machine-parseable ``code`` so the CLI can exit
nonzero with a stable identifier.
"""

from __future__ import annotations


class DodgesimError(Exception):
    """Base class for all package errors."""

    code = "ERROR"


class EventOrderError(DodgesimError):
    """Event stream is not sorted by timestamp (ties by y, x, polarity)."""

    code = "EVENT_ORDER"


class GeometryError(DodgesimError):
    """Coordinates, intrinsics, or a transform violate the sensor geometry."""

    code = "GEOMETRY"


class SingularHomographyError(GeometryError):
    """Corner configuration induces a non-invertible homography."""

    code = "SINGULAR_HOMOGRAPHY"


class EmptyWindowError(DodgesimError):
    """An operation that needs events received an empty window."""

    code = "EMPTY_WINDOW"


class SolverError(DodgesimError):
    """Numerical solve produced a non-finite objective; trace attached."""

    code = "SOLVER"

    def __init__(self, message: str, trace=None):
        super().__init__(message)
        self.trace = trace


class DegenerateFrameError(DodgesimError):
    """Frame has too little event support for estimation."""

    code = "DEGENERATE_FRAME"


class NotApproachingError(DodgesimError):
    """Predicted trajectory never crosses the camera plane in forward time."""

    code = "NOT_APPROACHING"


class InsufficientMotionError(DodgesimError):
    """Object image speed is below the policy's minimum gate."""

    code = "INSUFFICIENT_MOTION"


class InfeasibleThrowError(DodgesimError):
    """No ballistic arc reaches the target within the requested speed."""

    code = "INFEASIBLE_THROW"


class ConfigError(DodgesimError):
    """Configuration failed validation; all violations are listed."""

    code = "CONFIG"

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


class EventFileError(DodgesimError):
    """Event file is malformed (bad magic, truncated record, unsorted)."""

    code = "EVENT_FILE"
