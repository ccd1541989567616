"""Exception taxonomy shared across the package."""


class EvolmError(Exception):
    """Base class for all package-specific errors."""


class ShapeError(EvolmError, ValueError):
    """Operands have incompatible or invalid dimensions."""


class DomainError(EvolmError, ValueError):
    """Input values fall outside the operation's domain."""


class ParseError(EvolmError, ValueError):
    """Malformed textual specification."""


class StateError(EvolmError, RuntimeError):
    """Operation not permitted in the object's current state."""


class UndefinedRateError(EvolmError, ValueError):
    """A rate whose denominator is zero was requested."""
