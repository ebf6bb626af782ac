"""Exception types shared across the package."""


class UkfseError(Exception):
    """Base class for all errors raised by this package."""


class CovarianceError(UkfseError):
    """A matrix failed the symmetric-PSD contract (asymmetry or negative eigenvalue)."""


class ChartDomainError(UkfseError):
    """A point lies outside the domain of a manifold chart (antipode / singularity)."""


class ConvergenceError(UkfseError):
    """An iterative solver (projection, intrinsic mean) failed to converge."""


class StepError(UkfseError):
    """A filter step could not be completed (non-finite output, singular innovation)."""


class ConfigError(UkfseError):
    """Invalid benchmark or filter configuration."""
