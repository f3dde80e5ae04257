"""Exception types shared across the package."""


class QueppError(Exception):
    """Base class for errors raised by this package."""


class ParseError(QueppError):
    """Raised when circuit text cannot be parsed; carries the line number."""

    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


class InconsistentBranchError(QueppError):
    """A branch decision contradicts the commutation structure of the walk."""

    def __init__(self, rotation_index: int, message: str = ""):
        detail = message or "branch decision contradicts commutation"
        super().__init__(f"rotation {rotation_index}: {detail}")
        self.rotation_index = rotation_index


class CapabilityError(QueppError):
    """The requested execution exceeds what the backend can simulate."""


class ConsistencyError(QueppError):
    """Inputs that must describe the same ensemble do not agree."""


class DegenerateEtaError(QueppError):
    """A rescaling-factor estimator hit a degenerate denominator."""


class EnumerationLimitError(QueppError):
    """Exhaustive path enumeration would exceed the configured size limit."""


class ConfigError(QueppError):
    """A run configuration file is malformed or self-contradictory."""
