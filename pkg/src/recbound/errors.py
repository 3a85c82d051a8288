"""Exception types shared across the package."""


class RecboundError(Exception):
    """Base class for all recbound-specific failures."""


class PhaseSyntaxError(RecboundError):
    """Raised by the expression parser; carries the byte offset of the fault."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (byte offset {offset})")
        self.offset = offset


class PhaseEvalError(RecboundError):
    """Domain violation or overflow while evaluating a phase expression."""

    def __init__(self, message: str, n=None):
        if n is not None:
            message = f"{message} at n={n}"
        super().__init__(message)
        self.n = n


class SourceExhaustedError(RecboundError):
    """A finite sequence source was asked for terms beyond its horizon."""


class PoleError(RecboundError):
    """A cotangent argument fell within the guard radius of an integer."""


class OverflowGuardError(RecboundError):
    """A factorial-polynomial magnitude would exceed double range."""


class RefusedError(RecboundError):
    """A hypothesis the computation relies on failed a probe check."""


class ConfigError(RecboundError):
    """Experiment configuration is malformed or fails schema validation."""


class TransformError(RecboundError):
    """Coordinate transform missing or too ill-conditioned to trust."""
