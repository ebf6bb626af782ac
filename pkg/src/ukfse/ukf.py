"""Augmented-state unscented Kalman filter in Euclidean space.

The state is augmented with the process and measurement noise vectors, so
2L+1 sigma points are drawn from the block-diagonal covariance
diag(P, P_w, P_v) with L = n_x + n_w + n_v.  System callbacks are batched:
f(X, u, W) and g(X, u, V) map (m, n) arrays to (m, n') arrays so a whole
sigma set goes through in one call.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import CovarianceError, StepError
from .numerics import cholesky_sqrt, symmetrize

COND_LIMIT = 1e14
_JITTER = 1e-12


@dataclass(frozen=True)
class UkfParams:
    """Unscented-transform scaling parameters.

    lambda = gamma^2 (L + kappa) - L.  The center weights are
    W0_m = lambda/(L+lambda) and W0_c = W0_m + (1 - gamma^2 + beta); the
    off-center weights are 1/(2(L+lambda)), the unique choice for which the
    mean weights sum to one.
    """

    gamma: float = 0.01
    kappa: float = 0.0
    beta: float = 2.0

    def __post_init__(self):
        if self.gamma <= 0.0:
            raise ValueError("gamma must be positive")

    def lam(self, L: int) -> float:
        return self.gamma**2 * (L + self.kappa) - L

    def weights(self, L: int) -> tuple[np.ndarray, np.ndarray]:
        lam = self.lam(L)
        if L + lam <= 0.0:
            raise ValueError(f"L + lambda = {L + lam} must be positive")
        wm = np.full(2 * L + 1, 1.0 / (2.0 * (L + lam)))
        wc = wm.copy()
        wm[0] = lam / (L + lam)
        wc[0] = wm[0] + (1.0 - self.gamma**2 + self.beta)
        return wm, wc


@dataclass
class UkfEstimate:
    x: np.ndarray  # state estimate (n_x,)
    P: np.ndarray  # covariance (n_x, n_x)


@dataclass(frozen=True)
class SystemCallbacks:
    """Discrete-time system x' = f(x, u, w), y = g(x, u, v), batched over rows."""

    f: Callable[[np.ndarray, object, np.ndarray], np.ndarray]
    g: Callable[[np.ndarray, object, np.ndarray], np.ndarray]
    n_x: int
    n_y: int
    n_w: int
    n_v: int
    n_u: int = 0


@dataclass
class SigmaPointSet:
    points: np.ndarray        # (2L+1, L) augmented points
    weights_mean: np.ndarray  # (2L+1,)
    weights_cov: np.ndarray   # (2L+1,)
    n_x: int
    n_w: int
    n_v: int

    @property
    def L(self) -> int:
        return self.n_x + self.n_w + self.n_v

    def x_part(self) -> np.ndarray:
        return self.points[:, : self.n_x]

    def w_part(self) -> np.ndarray:
        return self.points[:, self.n_x : self.n_x + self.n_w]

    def v_part(self) -> np.ndarray:
        return self.points[:, self.n_x + self.n_w :]


@dataclass
class TimeUpdate:
    x_pred: np.ndarray   # predicted state mean
    P_pred: np.ndarray   # predicted state covariance (symmetrized)
    y_pred: np.ndarray   # predicted measurement mean
    x_points: np.ndarray  # propagated sigma states (2L+1, n_x)
    y_points: np.ndarray  # sigma measurements (2L+1, n_y)
    weights_mean: np.ndarray
    weights_cov: np.ndarray


def _block_diag(*mats: np.ndarray) -> np.ndarray:
    n = sum(m.shape[0] for m in mats)
    out = np.zeros((n, n))
    k = 0
    for m in mats:
        s = m.shape[0]
        out[k : k + s, k : k + s] = m
        k += s
    return out


def _as_cov(M) -> np.ndarray:
    M = np.asarray(M, dtype=float)
    if M.size == 0:
        return np.zeros((0, 0))
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise CovarianceError(f"expected a square covariance, got shape {M.shape}")
    return M


def generate_sigma_points(
    est: UkfEstimate,
    P_w: np.ndarray,
    P_v: np.ndarray,
    params: UkfParams,
) -> SigmaPointSet:
    """2L+1 sigma points of the augmented estimate (x_hat, 0, 0)."""
    x = np.asarray(est.x, dtype=float)
    P = np.asarray(est.P, dtype=float)
    P_w = _as_cov(P_w)
    P_v = _as_cov(P_v)
    n_x, n_w, n_v = x.size, P_w.shape[0], P_v.shape[0]
    L = n_x + n_w + n_v
    lam = params.lam(L)
    wm, wc = params.weights(L)

    Pa = _block_diag(P, P_w, P_v)
    try:
        S = cholesky_sqrt(Pa)
    except CovarianceError:
        # One retry with a tiny diagonal jitter before giving up.
        S = cholesky_sqrt(Pa + _JITTER * np.eye(L))
    spread = np.sqrt(L + lam) * S.T  # rows are scaled columns of S

    xa = np.concatenate([x, np.zeros(n_w), np.zeros(n_v)])
    points = np.empty((2 * L + 1, L))
    points[0] = xa
    points[1 : L + 1] = xa + spread
    points[L + 1 :] = xa - spread
    return SigmaPointSet(points, wm, wc, n_x, n_w, n_v)


def time_update(
    sp: SigmaPointSet,
    sys: SystemCallbacks,
    u,
    params: UkfParams,
) -> TimeUpdate:
    """Propagate the sigma set and form predicted state and measurement moments."""
    X = sys.f(sp.x_part(), u, sp.w_part())
    X = np.asarray(X, dtype=float)
    _check_finite(X, "state propagation")
    x_pred = sp.weights_mean @ X
    dX = X - x_pred
    P_pred = symmetrize((dX * sp.weights_cov[:, None]).T @ dX)

    Y = sys.g(X, u, sp.v_part())
    Y = np.asarray(Y, dtype=float)
    _check_finite(Y, "measurement prediction")
    y_pred = sp.weights_mean @ Y
    return TimeUpdate(x_pred, P_pred, y_pred, X, Y, sp.weights_mean, sp.weights_cov)


def measurement_update(tu: TimeUpdate, y: np.ndarray, params: UkfParams) -> UkfEstimate:
    """Kalman correction from the predicted moments; gain via linear solve."""
    y = np.asarray(y, dtype=float)
    dX = tu.x_points - tu.x_pred
    dY = tu.y_points - tu.y_pred
    wc = tu.weights_cov[:, None]
    P_yy = (dY * wc).T @ dY
    P_xy = (dX * wc).T @ dY

    cond = np.linalg.cond(P_yy)
    if not np.isfinite(cond) or cond > COND_LIMIT:
        raise StepError(f"innovation covariance is singular (cond={cond:.3e})")
    K = np.linalg.solve(P_yy, P_xy.T).T
    x = tu.x_pred + K @ (y - tu.y_pred)
    P = symmetrize(tu.P_pred - K @ P_yy @ K.T)
    return UkfEstimate(x=x, P=P)


def ukf_step(
    est: UkfEstimate,
    sys: SystemCallbacks,
    u,
    y: np.ndarray,
    P_w: np.ndarray,
    P_v: np.ndarray,
    params: UkfParams,
) -> UkfEstimate:
    """One full predict-correct cycle: sigma points, time update, measurement update."""
    sp = generate_sigma_points(est, P_w, P_v, params)
    tu = time_update(sp, sys, u, params)
    return measurement_update(tu, y, params)


def _check_finite(arr: np.ndarray, stage: str) -> None:
    if not np.all(np.isfinite(arr)):
        bad = int(np.nonzero(~np.all(np.isfinite(arr), axis=-1))[0][0])
        raise StepError(f"non-finite {stage} output at sigma point {bad}")
