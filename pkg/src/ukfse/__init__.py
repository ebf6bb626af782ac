"""State estimation for systems on manifolds via stable embedding.

An augmented-state UKF in Euclidean space, a stable-embedding extension that
keeps estimates near the manifold, five comparison filters, the satellite
attitude testbed they are benchmarked on, and a reproducible Monte Carlo
harness.  Hot kernels have an optional compiled implementation; a pure-numpy
fallback is selected automatically when the extension is absent.
"""

__version__ = "0.1.0"

from .backend import available_backends, get_backend, have_native
from .errors import (
    ChartDomainError,
    ConfigError,
    ConvergenceError,
    CovarianceError,
    StepError,
    UkfseError,
)
from .filters import FilterInstance, FilterKind, make_filter, step_filter
from .guideline import GuidelineInput, check_conditions, delta, error_step, verify_attractor
from .numerics import Rng, cholesky_sqrt, sample_gaussian, symmetrize
from .satellite import Measurement, SatParams, SatState
from .ukf import SystemCallbacks, UkfEstimate, UkfParams, ukf_step

__all__ = [
    "__version__",
    "available_backends",
    "get_backend",
    "have_native",
    "ChartDomainError",
    "ConfigError",
    "ConvergenceError",
    "CovarianceError",
    "StepError",
    "UkfseError",
    "FilterInstance",
    "FilterKind",
    "make_filter",
    "step_filter",
    "GuidelineInput",
    "check_conditions",
    "delta",
    "error_step",
    "verify_attractor",
    "Rng",
    "cholesky_sqrt",
    "sample_gaussian",
    "symmetrize",
    "Measurement",
    "SatParams",
    "SatState",
    "SystemCallbacks",
    "UkfEstimate",
    "UkfParams",
    "ukf_step",
]
