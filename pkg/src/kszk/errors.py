"""Exception types raised across the package."""


class ConfigurationError(ValueError):
    """Invalid domain, grid, solver or file configuration."""


class ShapeError(ValueError):
    """Array shapes do not match the mode grid."""


class FitError(ValueError):
    """Decay fit cannot be performed on the requested window."""


class SolverError(RuntimeError):
    """Time stepping failed (singular implicit operator, bad state)."""


class BlowUpError(SolverError):
    """Energy became non-finite or exceeded the blow-up threshold.

    The partially recorded series is kept on the exception so callers can
    still write it out.
    """

    def __init__(self, t, series, state=None):
        super().__init__(f"blow-up detected at t={t:.6g}")
        self.t = t
        self.series = series
        self.state = state
