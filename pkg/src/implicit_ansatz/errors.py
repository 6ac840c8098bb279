"""Exception types shared across the package."""


class DomainViolation(ValueError):
    """An elementary function was evaluated outside its real domain."""


class ExpressionError(ValueError):
    """Malformed or unresolvable expression source."""

    def __init__(self, message, position=None):
        if position is not None:
            message = f"{message} (at offset {position})"
        super().__init__(message)
        self.position = position


class UnknownIdentifier(ExpressionError):
    pass


class UnknownFunction(ExpressionError):
    pass


class NonConvergence(RuntimeError):
    """Newton iteration failed to reach the requested tolerance."""


class SingularJacobian(NonConvergence):
    """The constraint Jacobian is numerically singular (envelope point)."""


class NullConstraintViolation(ValueError):
    def __init__(self, deviation, at):
        super().__init__(
            f"null constraint F0^2 - sum Fk^2 = 0 violated: deviation {deviation:.3g} at u = {at:.6g}"
        )
        self.deviation = deviation
        self.at = at


class HomogeneityViolation(ValueError):
    def __init__(self, weight, deviation):
        super().__init__(f"map is not homogeneous of weight {weight}: deviation {deviation:.3g}")
        self.weight = weight
        self.deviation = deviation


class ConfigError(ValueError):
    """Invalid scenario configuration."""
