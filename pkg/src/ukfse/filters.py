"""The six attitude filters benchmarked against each other.

Four share the ambient-space route: discretize the (optionally stably
embedded) extension of the satellite dynamics in R7 and run the augmented
UKF directly; they differ only in the embedding constant and whether the
posterior quaternion gets projected back to S3.  The other two run the UKF
arithmetic in a 3-coordinate attitude chart (6-dim chart state) and keep
every quaternion on the sphere by construction: one uses the Lie-algebra
chart fixed at the group identity, the other the Riemannian tangent chart at
the current estimate with an intrinsic weighted mean.
"""

from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass, replace

import numpy as np

from . import s3
from .embedding import euler_step, satellite_process_noise
from .errors import ConfigError
from .numerics import symmetrize
from .satellite import (
    Q_COLS,
    W_COLS,
    SatParams,
    angular_accel,
    measure_clean,
    measurement_noise_cov,
    omega_bo,
)
from .ukf import (
    SystemCallbacks,
    TimeUpdate,
    UkfEstimate,
    UkfParams,
    generate_sigma_points,
    measurement_update,
    time_update,
)

# Nominal initial condition of the testbed and the filter's prior covariance.
X0_MEAN = np.array([np.cos(np.pi / 4), np.sin(np.pi / 4), 0.0, 0.0, -0.01, 0.01, 0.01])
P0_TRUTH_DIAG = np.concatenate([np.full(4, 1e-8), np.full(3, 0.01**2)])
P0_FILTER_DIAG = np.concatenate([np.full(4, 1e-8), np.full(3, 0.01)])


class FilterKind(enum.Enum):
    STANDARD = "standard"
    PROJ_OPTIM = "proj-optim"
    PROJ_FORMULA = "proj-formula"
    UKF_SE = "ukf-se"
    LIE_ALGEBRA = "lie-algebra"
    TANGENT_SPACE = "tangent-space"

    @classmethod
    def from_name(cls, name: str) -> "FilterKind":
        for kind in cls:
            if kind.value == name:
                return kind
        raise ConfigError(f"unknown filter '{name}'; choices: "
                          + ",".join(k.value for k in cls))


AMBIENT_KINDS = frozenset(
    {FilterKind.STANDARD, FilterKind.PROJ_OPTIM, FilterKind.PROJ_FORMULA, FilterKind.UKF_SE}
)
CHART_KINDS = frozenset({FilterKind.LIE_ALGEBRA, FilterKind.TANGENT_SPACE})


def sigma_point_count(kind: FilterKind) -> int:
    """2L+1 for the augmented dimension L of the given filter."""
    # Ambient: L = 7 + 7 + 6; chart: L = 6 + 6 + 6.
    return 41 if kind in AMBIENT_KINDS else 37


@dataclass
class FilterInstance:
    kind: FilterKind
    est: UkfEstimate        # x is always (q, omega) in R7; P is 7x7 ambient or 6x6 chart
    params: UkfParams
    sat: SatParams
    h: float
    alpha: float            # used by UKF_SE only
    P_w: np.ndarray         # process-noise covariance matching the filter's state space
    P_v: np.ndarray         # measurement-noise covariance (6x6)


def chart_process_noise(sat: SatParams, h: float) -> np.ndarray:
    """Chart-state process noise: the 1e-8 quaternion block mapped isotropically
    to the 3 attitude-chart coordinates, plus the discretized rate noise."""
    d = np.concatenate([np.full(3, 1e-8), np.full(3, h * sat.sigma_omega_c**2)])
    return np.diag(d)


def make_filter(
    kind: FilterKind,
    sat: SatParams | None = None,
    h: float = 0.1,
    alpha: float = 2.0,
    params: UkfParams | None = None,
    x0: np.ndarray | None = None,
    P0: np.ndarray | None = None,
    rescale_pv: bool = False,
) -> FilterInstance:
    """Initial filter instance at the nominal prior."""
    sat = sat if sat is not None else SatParams()
    params = params if params is not None else UkfParams()
    x0 = np.asarray(x0, dtype=float) if x0 is not None else X0_MEAN.copy()
    if P0 is None:
        if kind in AMBIENT_KINDS:
            P0 = np.diag(P0_FILTER_DIAG)
        else:
            P0 = np.diag(np.concatenate([np.full(3, 1e-8), np.full(3, 0.01)]))
    P0 = np.asarray(P0, dtype=float)
    if kind is FilterKind.UKF_SE and not 0.0 < alpha * h < 2.0 / 3.0:
        warnings.warn(
            f"alpha*h = {alpha * h:.3g} outside (0, 2/3); the manifold error "
            "band is not guaranteed",
            stacklevel=2,
        )
    P_w = satellite_process_noise(sat, h) if kind in AMBIENT_KINDS else chart_process_noise(sat, h)
    P_v = measurement_noise_cov(sat, rescale_h=h if rescale_pv else None)
    return FilterInstance(
        kind=kind, est=UkfEstimate(x=x0, P=P0), params=params, sat=sat, h=h,
        alpha=alpha, P_w=P_w, P_v=P_v,
    )


def step_filter(inst: FilterInstance, y: np.ndarray, t: float) -> FilterInstance:
    """Advance one measurement interval; y is the measurement taken at time t."""
    if inst.kind is FilterKind.STANDARD:
        return step_standard(inst, y, t)
    if inst.kind is FilterKind.PROJ_OPTIM:
        return step_proj_optim(inst, y, t)
    if inst.kind is FilterKind.PROJ_FORMULA:
        return step_proj_formula(inst, y, t)
    if inst.kind is FilterKind.UKF_SE:
        return step_ukf_se(inst, y, t)
    if inst.kind is FilterKind.LIE_ALGEBRA:
        return step_lie_algebra(inst, y, t)
    return step_tangent_space(inst, y, t)


def _ambient_step(inst: FilterInstance, y: np.ndarray, t: float, alpha: float) -> FilterInstance:
    sat, h = inst.sat, inst.h

    def f(X, u, W):
        return euler_step(X, h, alpha, sat, W)

    def g(X, u, V):
        return measure_clean(X, t, sat) + V

    sys = SystemCallbacks(f=f, g=g, n_x=7, n_y=6, n_w=7, n_v=6)
    sp = generate_sigma_points(inst.est, inst.P_w, inst.P_v, inst.params)
    tu = time_update(sp, sys, None, inst.params)
    est = measurement_update(tu, y, inst.params)
    return replace(inst, est=est)


def step_standard(inst: FilterInstance, y: np.ndarray, t: float) -> FilterInstance:
    """Plain extension to R7 (no embedding term), standard UKF."""
    return _ambient_step(inst, y, t, alpha=0.0)


def step_ukf_se(inst: FilterInstance, y: np.ndarray, t: float) -> FilterInstance:
    """Stably embedded dynamics; otherwise identical to the standard route."""
    return _ambient_step(inst, y, t, alpha=inst.alpha)


def step_proj_formula(inst: FilterInstance, y: np.ndarray, t: float) -> FilterInstance:
    """Standard step, then normalize the posterior quaternion (covariance untouched)."""
    out = step_standard(inst, y, t)
    out.est.x[Q_COLS] = s3.project_formula(out.est.x[Q_COLS])
    return out


def step_proj_optim(inst: FilterInstance, y: np.ndarray, t: float) -> FilterInstance:
    """Standard step, then project the posterior quaternion by the iterative
    Lagrangian solver (covariance untouched)."""
    out = step_standard(inst, y, t)
    out.est.x[Q_COLS] = s3.project_optimize(out.est.x[Q_COLS])
    return out


def _propagate_on_manifold(Q, OM, W_om, h, sat):
    """Kraft-style discretization keeping quaternions on S3.

    q' = q * lie_exp(h/2 * omega_bo(q));  omega' = omega + h * omega_dot + w.
    """
    wbo = omega_bo(Q, OM, sat)
    Qp = s3.quat_multiply(Q, s3.lie_exp(0.5 * h * wbo))
    OMp = OM + h * angular_accel(Q, OM, sat) + W_om
    return Qp, OMp


def step_lie_algebra(inst: FilterInstance, y: np.ndarray, t: float) -> FilterInstance:
    """UKF in the Lie-algebra chart fixed at the group identity.

    Estimates far from the identity sit in a badly distorted region of this
    chart, which is exactly the failure mode the benchmark exhibits.
    """
    sat, h, params = inst.sat, inst.h, inst.params
    q_hat = inst.est.x[Q_COLS]
    z_hat = np.concatenate([s3.lie_log(q_hat), inst.est.x[W_COLS]])
    sp = generate_sigma_points(UkfEstimate(z_hat, inst.est.P), inst.P_w, inst.P_v, params)

    A = sp.points[:, 0:3]
    OM = sp.points[:, 3:6]
    W_a = sp.points[:, 6:9]
    W_om = sp.points[:, 9:12]
    V = sp.points[:, 12:18]

    Q = s3.lie_exp(A)
    Qp, OMp = _propagate_on_manifold(Q, OM, W_om, h, sat)
    Ap = s3.lie_log(Qp) + W_a
    Zp = np.concatenate([Ap, OMp], axis=1)

    z_pred = sp.weights_mean @ Zp
    dZ = Zp - z_pred
    P_pred = symmetrize((dZ * sp.weights_cov[:, None]).T @ dZ)

    X_meas = np.concatenate([s3.lie_exp(Ap), OMp], axis=1)
    Y = measure_clean(X_meas, t, sat) + V
    y_pred = sp.weights_mean @ Y

    tu = TimeUpdate(z_pred, P_pred, y_pred, Zp, Y, sp.weights_mean, sp.weights_cov)
    est_chart = measurement_update(tu, y, params)

    x = np.concatenate([s3.lie_exp(est_chart.x[:3]), est_chart.x[3:]])
    return replace(inst, est=UkfEstimate(x=x, P=est_chart.P))


def step_tangent_space(inst: FilterInstance, y: np.ndarray, t: float) -> FilterInstance:
    """UKF in the Riemannian tangent chart at the current estimate.

    Sigma perturbations are realized on the sphere through the exponential
    map, the predicted attitude mean is the weighted intrinsic mean, and
    covariance deviations are logarithm-map coordinates at that mean.
    """
    sat, h, params = inst.sat, inst.h, inst.params
    q_hat = inst.est.x[Q_COLS]
    z_hat = np.concatenate([np.zeros(3), inst.est.x[W_COLS]])
    sp = generate_sigma_points(UkfEstimate(z_hat, inst.est.P), inst.P_w, inst.P_v, params)

    A = sp.points[:, 0:3]
    OM = sp.points[:, 3:6]
    W_a = sp.points[:, 6:9]
    W_om = sp.points[:, 9:12]
    V = sp.points[:, 12:18]

    B0 = s3.tangent_basis(q_hat)
    Q = s3.riem_exp(q_hat, A @ B0.T)
    Qp, OMp = _propagate_on_manifold(Q, OM, W_om, h, sat)
    # Chart process noise enters on the manifold, in each point's own tangent space.
    U_noise = np.einsum("mij,mj->mi", s3.tangent_basis(Qp), W_a)
    Qp = s3.riem_exp(Qp, U_noise)

    mu = s3.karcher_mean(Qp, sp.weights_mean)
    Bm = s3.tangent_basis(mu)
    C = s3.riem_log(mu, Qp) @ Bm
    Zp = np.concatenate([C, OMp], axis=1)
    om_pred = sp.weights_mean @ OMp
    z_pred = np.concatenate([np.zeros(3), om_pred])
    dZ = Zp - z_pred
    P_pred = symmetrize((dZ * sp.weights_cov[:, None]).T @ dZ)

    X_meas = np.concatenate([Qp, OMp], axis=1)
    Y = measure_clean(X_meas, t, sat) + V
    y_pred = sp.weights_mean @ Y

    tu = TimeUpdate(z_pred, P_pred, y_pred, Zp, Y, sp.weights_mean, sp.weights_cov)
    est_chart = measurement_update(tu, y, params)

    q_new = s3.riem_exp(mu, Bm @ est_chart.x[:3])
    x = np.concatenate([q_new, est_chart.x[3:]])
    return replace(inst, est=UkfEstimate(x=x, P=est_chart.P))
