"""Exception hierarchy shared by all modules."""


class NPEError(Exception):
    """Base class for simulator errors."""


class ValidationError(NPEError, ValueError):
    """An input violates a documented invariant."""


class DomainViolationError(NPEError, ValueError):
    """A query point lies outside the closed domain."""


class InvalidExponentError(NPEError, ValueError):
    pass


class InvalidTimeError(NPEError, ValueError):
    pass


class TruncationError(NPEError):
    """Series truncation too short for the requested time.

    ``tail`` carries the estimated magnitude of the discarded tail.
    """

    def __init__(self, message, tail):
        super().__init__(message)
        self.tail = tail


class SolverError(NPEError):
    """A linear or elliptic solve failed; ``residual`` is the last relative residual."""

    def __init__(self, message, residual=float("nan")):
        super().__init__(message)
        self.residual = residual


class PositivityViolationError(NPEError):
    """A concentration update produced a value below the allowed floor."""


class InapplicableCheckError(NPEError):
    """A diagnostic check was requested outside its regime of validity."""


class ArityError(NPEError, ValueError):
    pass


class ConfigError(NPEError, ValueError):
    """Malformed configuration text. ``line`` is 1-based or None."""

    def __init__(self, message, line=None, key=None):
        loc = f" (line {line})" if line is not None else ""
        super().__init__(f"{message}{loc}")
        self.line = line
        self.key = key


class SimulationError(NPEError):
    """A run aborted; ``trajectory`` holds everything produced before the failure."""

    def __init__(self, message, trajectory=None, cause=None):
        super().__init__(message)
        self.trajectory = trajectory
        self.cause = cause


class InvalidCaseError(NPEError, ValueError):
    """A manufactured case violates its constraints (e.g. negative concentration)."""
