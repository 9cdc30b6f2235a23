"""Exception types shared across the package."""


class FlowopError(Exception):
    """Base class for all package errors."""


class ShapeError(FlowopError, ValueError):
    """Operands have incompatible or invalid shapes."""


class ConfigError(FlowopError, ValueError):
    """A configuration value is out of range or inconsistent."""


class DataError(FlowopError, ValueError):
    """Input data violates a precondition (empty source, bad field kind, ...)."""


class DomainError(FlowopError, ValueError):
    """A mathematical precondition fails (zero norm, zero variance, ...)."""


class GradientError(FlowopError, RuntimeError):
    """Optimizer asked to step a parameter that has no gradient."""


class TrainingDiverged(FlowopError, RuntimeError):
    """Training loss became non-finite or exceeded the divergence threshold."""


class ContainerError(FlowopError, ValueError):
    """A serialized container is malformed.

    ``offset`` is the byte offset at which parsing failed.
    """

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at byte offset {offset})")
        self.offset = offset
