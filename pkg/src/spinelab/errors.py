"""Exception hierarchy shared by all spinelab modules."""


class SpinelabError(Exception):
    """Base class for all spinelab errors."""


class DomainError(SpinelabError):
    """Argument outside the mathematical domain of an operation."""


class EvaluationError(SpinelabError):
    """A user-supplied or derived function returned an unusable value."""


class SingularPointError(SpinelabError):
    """Evaluation requested exactly on a non-integrable singular set."""


class ToleranceNotMet(SpinelabError):
    """Adaptive subdivision exhausted before reaching the requested tolerance."""

    def __init__(self, message, value=None, error=None):
        super().__init__(message)
        self.value = value
        self.error = error


class DivisionInstability(SpinelabError):
    """Denominator of a quotient is too uncertain to divide by."""


class HypothesisError(SpinelabError):
    """A sampled hypothesis check (monotonicity, window, ...) failed."""


class GridError(SpinelabError):
    """A verification grid is empty or otherwise unusable."""


class InconclusiveError(SpinelabError):
    """Estimates that must agree (e.g. liminf along paths) disagree."""


class ConfigError(SpinelabError):
    """Invalid simulation or CLI configuration."""


class StartOutsideDomain(SpinelabError):
    """Simulation start point is not inside the domain."""


class ExcessCensoring(SpinelabError):
    """Too many simulated paths hit the step horizon to report an estimate."""
