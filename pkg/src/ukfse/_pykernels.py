"""Pure-Python fallback for the two hot kernels.

The compiled extension (ukfse._native) mirrors these semantics; this module
is the reference.  truth_rollout uses scalar math because the substep loop is
irreducibly sequential; filter_rollout simply drives the library filter step.
"""

from __future__ import annotations

import math

import numpy as np

from .filters import FilterInstance, FilterKind, step_filter
from .satellite import SatParams
from .ukf import UkfEstimate, UkfParams

# project modes for filter_rollout
PROJECT_NONE = 0
PROJECT_FORMULA = 1
PROJECT_OPTIMIZE = 2

_MODE_KIND = {
    PROJECT_NONE: FilterKind.STANDARD,
    PROJECT_FORMULA: FilterKind.PROJ_FORMULA,
    PROJECT_OPTIMIZE: FilterKind.PROJ_OPTIM,
}


def truth_rollout(
    x0: np.ndarray,
    h: float,
    n_sub: int,
    n_steps: int,
    omega_noise: np.ndarray,
    sat: SatParams,
) -> np.ndarray:
    """Integrate the on-manifold dynamics with Euler substeps of size h.

    omega_noise holds the pre-scaled rate-noise increments for every substep
    (n_steps * n_sub rows); the quaternion is renormalized each substep, and
    states are recorded every n_sub substeps.
    """
    x0 = np.asarray(x0, dtype=float)
    omega_noise = np.asarray(omega_noise, dtype=float)
    if omega_noise.shape != (n_steps * n_sub, 3):
        raise ValueError("omega_noise must have one row per substep")
    i1, i2, i3 = (float(v) for v in sat.inertia_diag)
    w0 = sat.omega0
    out = np.empty((n_steps + 1, 7))
    out[0] = x0
    q0, q1, q2, q3 = (float(v) for v in x0[:4])
    o1, o2, o3 = (float(v) for v in x0[4:])
    noise = omega_noise.tolist()
    j = 0
    for k in range(n_steps):
        for _ in range(n_sub):
            # rotation-matrix columns 2 and 3 (orbit-rate direction, nadir)
            c1x = 2.0 * (q1 * q2 - q0 * q3)
            c1y = q0 * q0 - q1 * q1 + q2 * q2 - q3 * q3
            c1z = 2.0 * (q2 * q3 + q0 * q1)
            a3x = 2.0 * (q1 * q3 + q0 * q2)
            a3y = 2.0 * (q2 * q3 - q0 * q1)
            a3z = q0 * q0 - q1 * q1 - q2 * q2 + q3 * q3
            bx = o1 - w0 * c1x
            by = o2 - w0 * c1y
            bz = o3 - w0 * c1z
            dq0 = 0.5 * (-q1 * bx - q2 * by - q3 * bz)
            dq1 = 0.5 * (q0 * bx - q3 * by + q2 * bz)
            dq2 = 0.5 * (q3 * bx + q0 * by - q1 * bz)
            dq3 = 0.5 * (-q2 * bx + q1 * by + q0 * bz)
            tx = 3.0 * w0 * w0 * (a3y * i3 * a3z - a3z * i2 * a3y)
            ty = 3.0 * w0 * w0 * (a3z * i1 * a3x - a3x * i3 * a3z)
            tz = 3.0 * w0 * w0 * (a3x * i2 * a3y - a3y * i1 * a3x)
            gx = i2 * o2 * o3 - i3 * o3 * o2
            gy = i3 * o3 * o1 - i1 * o1 * o3
            gz = i1 * o1 * o2 - i2 * o2 * o1
            do1 = (gx + tx) / i1
            do2 = (gy + ty) / i2
            do3 = (gz + tz) / i3
            nj = noise[j]
            q0 += h * dq0
            q1 += h * dq1
            q2 += h * dq2
            q3 += h * dq3
            o1 += h * do1 + nj[0]
            o2 += h * do2 + nj[1]
            o3 += h * do3 + nj[2]
            j += 1
            inv = 1.0 / math.sqrt(q0 * q0 + q1 * q1 + q2 * q2 + q3 * q3)
            q0 *= inv
            q1 *= inv
            q2 *= inv
            q3 *= inv
        out[k + 1] = (q0, q1, q2, q3, o1, o2, o3)
    return out


def filter_rollout(
    x0: np.ndarray,
    P0: np.ndarray,
    Y: np.ndarray,
    h: float,
    alpha: float,
    project: int,
    sat: SatParams,
    P_w: np.ndarray,
    P_v: np.ndarray,
    params: UkfParams,
) -> np.ndarray:
    """Run the ambient-space filter over a measurement sequence.

    Measurement k (row k of Y) is taken at t = (k+1) h.  Returns the estimate
    trajectory (n_steps+1, 7) including the prior at t = 0.
    """
    Y = np.asarray(Y, dtype=float)
    kind = _MODE_KIND[project]
    if project == PROJECT_NONE and alpha != 0.0:
        kind = FilterKind.UKF_SE
    inst = FilterInstance(
        kind=kind,
        est=UkfEstimate(x=np.asarray(x0, dtype=float).copy(),
                        P=np.asarray(P0, dtype=float).copy()),
        params=params,
        sat=sat,
        h=h,
        alpha=alpha,
        P_w=np.asarray(P_w, dtype=float),
        P_v=np.asarray(P_v, dtype=float),
    )
    out = np.empty((Y.shape[0] + 1, 7))
    out[0] = inst.est.x
    for k in range(Y.shape[0]):
        inst = step_filter(inst, Y[k], (k + 1) * h)
        out[k + 1] = inst.est.x
    return out
