"""Exception types shared across the package."""


class ValidationError(ValueError):
    """An argument or configuration violates a documented precondition."""


class NumericsError(RuntimeError):
    """Evaluation produced NaN/Inf or hit a forbidden singular configuration."""


class NearSingularityError(NumericsError):
    """An evaluation point sits too close to a kernel singularity."""


class ExprSyntaxError(ValidationError):
    """Malformed expression text; carries the offending character position."""

    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (at position {position})")
        self.position = position
