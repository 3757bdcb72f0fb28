"""Exception hierarchy; the CLI maps these to exit codes."""


class StableEntropyError(Exception):
    """Base class for all library errors."""


class ConfigError(StableEntropyError):
    """Invalid configuration or parameters (CLI exit code 2)."""


class NumericalError(StableEntropyError):
    """A computation failed or lost reliability (CLI exit code 3)."""


class TruncationError(NumericalError):
    """The grid window cuts off too much of the density."""


class WrapAroundError(NumericalError):
    """Circular wrap detected in a padded convolution."""


class NegativeLobeError(NumericalError):
    """Fourier inversion produced negative values beyond round-off scale."""


class DivergentMomentError(NumericalError):
    """Requested moment diverges under the fitted tail."""


class QuadratureError(NumericalError):
    """Adaptive quadrature failed to converge within the node budget."""


class ExtrapolationError(NumericalError):
    """Tail-constant extrapolation failed to stabilize."""
