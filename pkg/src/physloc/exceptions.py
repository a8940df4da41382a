"""Exception types raised by physloc.

Every exception carries a short machine-readable ``code`` that the command
line front end prints on stderr.
"""


class PhyslocError(Exception):
    code = "PHYSLOC_ERROR"


class NonPositiveDepth(PhyslocError, ValueError):
    code = "NON_POSITIVE_DEPTH"


class DegenerateUpVector(PhyslocError, ValueError):
    code = "DEGENERATE_UP_VECTOR"


class InsufficientCorrespondences(PhyslocError, ValueError):
    code = "INSUFFICIENT_CORRESPONDENCES"


class DegenerateConfiguration(PhyslocError, ValueError):
    code = "DEGENERATE_CONFIGURATION"


class GridShapeMismatch(PhyslocError, ValueError):
    code = "GRID_SHAPE_MISMATCH"


class FrameIndexOutOfRange(PhyslocError, IndexError):
    code = "FRAME_INDEX_OUT_OF_RANGE"


class MissingGroundTruth(PhyslocError, ValueError):
    code = "MISSING_GROUND_TRUTH"


class EmptyEvaluationSet(PhyslocError, ValueError):
    code = "EMPTY_EVALUATION_SET"


class UnsatisfiableBounds(PhyslocError, RuntimeError):
    code = "UNSATISFIABLE_BOUNDS"


class InvalidInput(PhyslocError, ValueError):
    code = "INVALID_INPUT"


class StepLimitExceeded(PhyslocError, RuntimeError):
    """The adaptive integrator used up its step budget.

    ``t_reached`` is the last time the solver accepted a step at.
    """

    code = "STEP_LIMIT_EXCEEDED"

    def __init__(self, message, t_reached):
        super().__init__(message)
        self.t_reached = t_reached


class DivergedRecovery(PhyslocError, RuntimeError):
    code = "DIVERGED_RECOVERY"

    def __init__(self, message, trace):
        super().__init__(message)
        self.trace = list(trace)


class IOFailure(PhyslocError, OSError):
    code = "IO_ERROR"
