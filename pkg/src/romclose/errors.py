"""Exception hierarchy.

Every error carries the process exit code the command line maps it to, so
library callers and the CLI agree on what kind of failure happened.
"""


class RomCloseError(Exception):
    exit_code = 1


class ConfigInvalid(RomCloseError):
    exit_code = 2

    def __init__(self, message, path=None):
        self.path = path
        if path:
            message = f"{path}: {message}"
        super().__init__(message)


class UpstreamMissing(RomCloseError):
    exit_code = 3


class NumericalFailure(RomCloseError):
    exit_code = 4


class CflViolation(NumericalFailure):
    pass


class NonFiniteState(NumericalFailure):
    """NaN or Inf appeared while time stepping (a blow-up)."""

    def __init__(self, message, step=None, time=None):
        self.step = step
        self.time = time
        super().__init__(message)


class IoFailure(RomCloseError):
    exit_code = 5


class VersionMismatch(IoFailure):
    pass


class DimensionMismatch(RomCloseError, ValueError):
    pass


class RankTooLarge(RomCloseError, ValueError):
    pass


class RankNotStrictlySmaller(RankTooLarge):
    pass


class DegenerateSnapshots(NumericalFailure):
    pass


class InsufficientSamples(RomCloseError, ValueError):
    pass


class TimeOutOfRange(RomCloseError, ValueError):
    pass


class MisalignedTimes(RomCloseError, ValueError):
    pass


class IllConditionedWarning(UserWarning):
    """The regularized normal system of a closure fit is badly conditioned."""
