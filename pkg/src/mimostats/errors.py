"""Exception and warning types shared across the package."""


class TruncationError(RuntimeError):
    """An infinite series could not be truncated within the term budget."""


class ConvergenceError(RuntimeError):
    """An iterative method did not converge."""


class InvalidSpectrumError(ValueError):
    """A target autocorrelation does not admit a usable power spectrum."""


class QuadratureBudgetError(RuntimeError):
    """A quadrature grid would exceed its node budget."""


class DegenerateConfigError(ValueError):
    """The requested quantity is undefined for this antenna configuration."""


class DegenerateVarianceError(ValueError):
    """A correlation estimator was applied to a series with zero variance."""


class NoCrossingsError(ValueError):
    """No down-crossings were observed, so a duration is undefined."""


class ClampWarning(RuntimeWarning):
    """A probability left [0, 1] by more than rounding before clamping."""


class SpectrumClipWarning(RuntimeWarning):
    """A noticeable fraction of spectral mass was clipped to zero."""
