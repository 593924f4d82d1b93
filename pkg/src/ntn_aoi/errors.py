"""Exception types raised across the package."""


class ParameterError(ValueError):
    """An input lies outside the domain an operation is defined on."""


class PermanentDisconnectionError(ArithmeticError):
    """The source is never covered (zero off-rate), so the age grows without bound."""


class StarvationError(RuntimeError):
    """A simulation produced fewer deliveries than needed to form an estimate."""
