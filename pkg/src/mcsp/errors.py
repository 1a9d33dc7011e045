"""Exception types shared across the pipeline stages."""


class ValidationError(ValueError):
    """Input violates a documented precondition (CLI exit code 1)."""


class NumericalError(ArithmeticError):
    """A numerical routine failed or an input is numerically degenerate (CLI exit code 2)."""


class StageError(Exception):
    """Wraps an error raised inside a named pipeline stage."""

    def __init__(self, stage, cause):
        self.stage = stage
        self.cause = cause
        super().__init__(f"[{stage}] {type(cause).__name__}: {cause}")
