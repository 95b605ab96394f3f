"""Exception hierarchy shared by every stage of the pipeline."""


class HeadPoseError(Exception):
    """Base class. ``stage`` names the pipeline step that failed, when known."""

    def __init__(self, message, stage=None):
        super().__init__(message)
        self.stage = stage

    def __str__(self):
        msg = super().__str__()
        if self.stage:
            return f"[{self.stage}] {msg}"
        return msg


class InvalidInputError(HeadPoseError, ValueError):
    pass


class DegenerateGeometryError(HeadPoseError):
    """Coincident, coplanar or rank-deficient point configurations."""


class GimbalLockError(HeadPoseError):
    pass


class BehindCameraError(HeadPoseError):
    pass


class NumericalFailureError(HeadPoseError):
    """Non-finite objective or Jacobian inside the solver. Carries the trace so far."""

    def __init__(self, message, stage=None, trace=None):
        super().__init__(message, stage)
        self.trace = trace
