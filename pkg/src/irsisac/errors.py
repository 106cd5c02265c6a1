"""Exception types shared across the package."""


class InvalidArgumentError(ValueError):
    pass


class SingularFIMError(ArithmeticError):
    """The Fisher information carries no angle information (Schur complement ~ 0)."""


class InfeasibleError(RuntimeError):
    pass


class ConfigError(ValueError):
    """Raised by the config parser; the message names the offending key."""
