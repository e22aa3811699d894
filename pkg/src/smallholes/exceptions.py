"""Exception hierarchy.

Configuration-type problems derive from :class:`ValueError`; numerical
failures derive from :class:`NumericalError`. The CLI maps the former to
exit code 2 and the latter to exit code 3.
"""


class SmallHolesError(Exception):
    """Base class for every error raised by this package."""


class DomainError(SmallHolesError, ValueError):
    """Invalid domain description."""


class EpsOutOfRange(DomainError):
    pass


class HoleNotContained(DomainError):
    pass


class BadDimension(DomainError):
    pass


class EvaluationOutsideDomain(SmallHolesError, ValueError):
    pass


class SingularPoint(SmallHolesError, ValueError):
    pass


class CoincidentPoints(SmallHolesError, ValueError):
    pass


class PointOutsideBall(SmallHolesError, ValueError):
    pass


class TooCloseToCharge(SmallHolesError, ValueError):
    pass


class ExponentOutOfRange(SmallHolesError, ValueError):
    pass


class NumericalError(SmallHolesError, ArithmeticError):
    """A computation ran but could not meet its accuracy contract."""


class QuadratureNotConverged(NumericalError):
    pass


class IllConditioned(NumericalError):
    """Least-squares fit whose residual stays above tolerance after truncation.

    Carries the diagnostics needed for a condition report.
    """

    def __init__(self, message, *, condition=None, residual=None, rank=None):
        super().__init__(message)
        self.condition = condition
        self.residual = residual
        self.rank = rank

    def report(self):
        return {
            "error": "IllConditioned",
            "message": str(self),
            "condition_estimate": self.condition,
            "residual": self.residual,
            "rank": self.rank,
        }


class ZeroGradient(NumericalError):
    pass


class SweepTooShort(NumericalError):
    pass
