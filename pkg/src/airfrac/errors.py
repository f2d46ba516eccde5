"""Exception hierarchy shared by all modules."""


class AirfracError(Exception):
    """Base class for errors raised by airfrac."""


class DataError(AirfracError, ValueError):
    """Malformed, misaligned or out-of-range input data."""


class EstimationError(AirfracError, ValueError):
    """A fit could not be computed (rank deficiency, short sample, ...)."""


class DivisionHazardError(EstimationError):
    """A ratio-based quantity hit a zero denominator.

    The ratio estimator has no moments when emissions can be zero, so the
    offending year is reported instead of producing an infinite value.
    """

    def __init__(self, year, what="E_t"):
        self.year = year
        super().__init__(f"{what} is zero in year {year}; ratio G_t/E_t undefined")


class DegenerateLikelihoodError(EstimationError):
    """Gaussian likelihood is degenerate (zero prediction-error variance)."""
