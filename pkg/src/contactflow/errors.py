"""Exception types shared across the package."""


class ContactFlowError(Exception):
    """Base class for all package-specific errors."""


class OrderingError(ContactFlowError, ValueError):
    """Positions that must be strictly increasing are not."""


class ShapeError(ContactFlowError, ValueError):
    """Sequence lengths are inconsistent or too short."""


class ParameterError(ContactFlowError, ValueError):
    """A scalar parameter is outside its admissible range."""


class DecayError(ContactFlowError, ValueError):
    """Initial momentum fails the y^-2 decay requirement at the domain edge."""


class DegeneracyError(ContactFlowError, RuntimeError):
    """The flow map collapsed (gamma = 0 away from the fixed point);
    signals under-resolution rather than bad input."""


class UsageError(ContactFlowError, ValueError):
    """Inputs handed to a diagnostic do not belong together."""


class EnsembleInvariantError(ContactFlowError, RuntimeError):
    """A particle state violates an ensemble invariant.

    Carries the first offending particle index so integrators can report
    where ordering or positivity was lost.
    """

    def __init__(self, message: str, index: int | None = None):
        super().__init__(message if index is None else f"{message} (index {index})")
        self.index = index


class ConfigError(ContactFlowError, ValueError):
    """A run configuration failed to parse or validate."""

    def __init__(self, message: str, field: str | None = None, line: int | None = None):
        loc = ""
        if field is not None:
            loc += f" [key: {field}]"
        if line is not None:
            loc += f" [line {line}]"
        super().__init__(message + loc)
        self.field = field
        self.line = line
