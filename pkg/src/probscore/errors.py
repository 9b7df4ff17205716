"""Exception and warning types raised across the package."""


class ProbscoreError(Exception):
    """Base class for all package errors."""


class IngestError(ProbscoreError):
    """A forecast file could not be read into a table."""


class ValidationError(ProbscoreError):
    """Forecast data violates a structural requirement.

    Parameters
    ----------
    message : str
        Human readable summary.
    problems : list of str, optional
        Offending units or rows, one entry each.
    """

    def __init__(self, message, problems=None):
        super().__init__(message)
        self.problems = list(problems or [])

    def __str__(self):
        base = super().__str__()
        if not self.problems:
            return base
        shown = "; ".join(self.problems[:10])
        more = len(self.problems) - 10
        if more > 0:
            shown += f"; ... ({more} more)"
        return f"{base}: {shown}"


class ScoringError(ProbscoreError):
    """A score could not be computed for the given input."""


class UnsupportedMetricError(ScoringError):
    """A metric was requested for a forecast format that does not support it."""


class ScoringWarning(UserWarning):
    """A score was computed but needed a numerical safeguard (clamping, flooring)."""
