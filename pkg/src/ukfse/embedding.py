"""Stable embedding of S3 x R3 into R7.

The ambient drift gets an extra -alpha * grad(V) term with
V(q, omega) = (||q||^2 - 1)^2 / 4, which vanishes exactly on the manifold and
makes it attractive for the extended flow.  Discretization is explicit Euler
with additive noise; noise covariances follow the h-scaling rules for
continuous-time noise models.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .satellite import Q_COLS, SatParams, drift_vec


def v_value(x: np.ndarray) -> np.ndarray:
    """(||q||^2 - 1)^2 / 4 for stacked states, batched."""
    x = np.asarray(x, dtype=float)
    q2 = np.sum(x[..., Q_COLS] ** 2, axis=-1)
    return 0.25 * (q2 - 1.0) ** 2


def v_gradient(x: np.ndarray) -> np.ndarray:
    """Gradient of v_value: ((||q||^2 - 1) q, 0), batched."""
    x = np.asarray(x, dtype=float)
    q = x[..., Q_COLS]
    q2 = np.sum(q**2, axis=-1, keepdims=True)
    grad = np.zeros_like(x)
    grad[..., Q_COLS] = (q2 - 1.0) * q
    return grad


def se_drift(x: np.ndarray, params: SatParams, alpha: float) -> np.ndarray:
    """Stably embedded drift: ambient satellite drift minus alpha * grad(V)."""
    if alpha == 0.0:
        return drift_vec(x, params)
    return drift_vec(x, params) - alpha * v_gradient(x)


def euler_step(
    x: np.ndarray,
    h: float,
    alpha: float,
    params: SatParams,
    w: np.ndarray | None = None,
) -> np.ndarray:
    """One explicit Euler step of the embedded drift plus additive noise w."""
    out = np.asarray(x, dtype=float) + h * se_drift(x, params, alpha)
    if w is not None:
        out = out + w
    return out


def discretize_noise(
    P_w_cont: np.ndarray, P_v_cont: np.ndarray, h: float
) -> tuple[np.ndarray, np.ndarray]:
    """Continuous-to-discrete noise scaling: (h * P_w, P_v / h)."""
    if h <= 0.0:
        raise ValueError("time step h must be positive")
    return h * np.asarray(P_w_cont, dtype=float), np.asarray(P_v_cont, dtype=float) / h


def satellite_process_noise(params: SatParams, h: float) -> np.ndarray:
    """Filter process-noise covariance diag(1e-8 I4, h sigma_omega^2 I3).

    The quaternion block is a fixed regularization independent of h; the rate
    block is the Euler-discretized continuous process noise.
    """
    d = np.concatenate([np.full(4, 1e-8), np.full(3, h * params.sigma_omega_c**2)])
    return np.diag(d)


@dataclass(frozen=True)
class StableEmbedding:
    """A manifold-as-zero-set description: V >= 0 with M = V^-1(0).

    alpha scales the restoring term; v_value/v_gradient are callables on the
    stacked ambient state so other manifolds can plug in.  Only the S3 x R3
    instance ships.
    """

    alpha: float
    v_value: Callable[[np.ndarray], np.ndarray]
    v_gradient: Callable[[np.ndarray], np.ndarray]

    def __post_init__(self):
        if self.alpha <= 0.0:
            raise ValueError("stable embedding constant alpha must be positive")


def s3r3_embedding(alpha: float) -> StableEmbedding:
    return StableEmbedding(alpha=alpha, v_value=v_value, v_gradient=v_gradient)
