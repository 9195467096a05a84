"""Exception types shared across the package."""


class OptimizerError(Exception):
    """Base class for all soaa errors."""


class ConfigError(OptimizerError):
    """A hyperparameter or run setting violates its documented bounds."""


class ShapeError(OptimizerError):
    """An array has the wrong shape, or a parameter group is empty."""


class NumericsError(OptimizerError):
    """A non-finite value showed up where a finite one is required."""


class PreconditionError(OptimizerError):
    """An operation was called in a state it does not support."""


class GradientCheckError(OptimizerError):
    """An analytic gradient disagrees with finite differences."""


class CheckpointError(OptimizerError):
    """A checkpoint byte sequence could not be decoded.

    ``offset`` carries the byte position of the failure when known.
    """

    def __init__(self, message: str, offset: int | None = None):
        if offset is not None:
            message = f"{message} (at byte offset {offset})"
        super().__init__(message)
        self.offset = offset


class UnknownNameError(OptimizerError):
    """A problem or optimizer name is not registered.

    The message lists the known names so CLI users can self-correct.
    """
