"""Exception hierarchy shared by all solvers."""


class BanachMNIError(Exception):
    """Base class for errors raised by this package."""


class ParameterError(BanachMNIError, ValueError):
    """An argument is outside its admissible domain (bad p, length mismatch, ...)."""


class DegenerateInputError(BanachMNIError, ValueError):
    """The input is a degenerate case the operation is undefined for (e.g. zero functional)."""


class DegenerateOperatorError(DegenerateInputError):
    """The sampling functionals are numerically dependent (singular Gram matrix)."""


class InfeasibleError(BanachMNIError):
    """A linear program or interpolation system has no feasible point."""


class UnboundedError(BanachMNIError):
    """A linear program is unbounded below."""


class NumericalDualityError(BanachMNIError):
    """A dual certificate failed to reproduce a primal solution to tolerance."""


class NonConvergenceError(BanachMNIError):
    """An iterative solver stopped before reaching its tolerance.

    ``best_residual`` holds the smallest residual seen and ``report`` the
    corresponding partial result, when available.
    """

    def __init__(self, message, best_residual=float("nan"), report=None):
        super().__init__(message)
        self.best_residual = best_residual
        self.report = report


class OracleError(BanachMNIError):
    """A numeric test oracle could not bracket or resolve its minimizer."""


class SchemaError(BanachMNIError, ValueError):
    """A problem file violates the instance schema; ``path`` names the field."""

    def __init__(self, message, path=""):
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path


class ParseError(BanachMNIError, ValueError):
    """A problem file is not readable JSON."""


class DimensionMismatchError(BanachMNIError, ValueError):
    """Array lengths in a problem file disagree (e.g. data vs. number of rows)."""
