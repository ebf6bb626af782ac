"""Satellite attitude testbed: rigid-body dynamics on S3 x R3 and its sensors.

State is (q, omega) with q the body-to-orbit attitude quaternion and omega
the body angular rate relative to the inertial frame [rad/s].  Measurements
stack a three-axis magnetometer [T] against a time-varying dipole field model
and a three-axis rate gyro [rad/s].  All angles are radians and all values SI
internally; the config surface accepts degrees and nanotesla where noted.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError
from .numerics import Rng
from .s3 import quat_multiply, rotate, rotation_matrix

Q_COLS = slice(0, 4)
W_COLS = slice(4, 7)


def _default_inertia() -> np.ndarray:
    return np.diag([2.1e-3, 2.0e-3, 1.9e-3])


@dataclass(frozen=True, eq=False)
class SatParams:
    """Physical and sensor parameters; defaults are the simulation testbed values."""

    inertia: np.ndarray = field(default_factory=_default_inertia)  # kg m^2
    sigma_omega_c: float = 0.01          # process noise std [rad/s]
    mu_earth: float = 3.98601e14         # gravitational coefficient [m^3/s^2]
    r0: float = 6_928_140.0              # orbit radius [m]
    M_e: float = 7.943e15                # Earth dipole moment [Wb m]
    epsilon: float = np.radians(11.7)    # dipole tilt [rad]
    inclination: float = np.radians(97.0)  # orbit inclination [rad]
    omega_e: float = 7.29e-5             # Earth spin rate [rad/s]
    sigma_mag: float = 2e-7              # magnetometer noise std [T] (200 nT)
    sigma_rate: float = 1.84e-4          # rate-gyro noise std [rad/s]
    f_sample: float = 10.0               # measurement sampling frequency [Hz]

    def __post_init__(self):
        inertia = np.asarray(self.inertia, dtype=float)
        object.__setattr__(self, "inertia", inertia)
        diag = np.diag(inertia)
        if inertia.shape != (3, 3) or np.any(diag <= 0.0):
            raise ConfigError("inertia must be a 3x3 matrix with positive diagonal")
        for name in ("sigma_omega_c", "mu_earth", "r0", "M_e", "omega_e",
                     "sigma_mag", "sigma_rate", "f_sample"):
            if getattr(self, name) <= 0.0:
                raise ConfigError(f"{name} must be positive")

    @property
    def omega0(self) -> float:
        """Orbit angular rate sqrt(mu_earth / r0^3) [rad/s]."""
        return float(np.sqrt(self.mu_earth / self.r0**3))

    @property
    def inertia_diag(self) -> np.ndarray:
        return np.diag(self.inertia)

    # Config-file field names (degrees / nT variants converted here).
    CONFIG_KEYS = (
        "inertia", "sigma_omega_c", "mu_earth", "r0", "M_e",
        "epsilon_deg", "inclination_deg", "omega_e", "sigma_mag_nT",
        "sigma_rate_c", "f_sample_hz",
    )

    @classmethod
    def from_config(cls, values: dict) -> "SatParams":
        kwargs = {}
        if "inertia" in values:
            diag = np.asarray(values["inertia"], dtype=float).ravel()
            if diag.size != 3:
                raise ConfigError("inertia expects 3 diagonal entries")
            kwargs["inertia"] = np.diag(diag)
        for src, dst, conv in (
            ("sigma_omega_c", "sigma_omega_c", float),
            ("mu_earth", "mu_earth", float),
            ("r0", "r0", float),
            ("M_e", "M_e", float),
            ("epsilon_deg", "epsilon", lambda v: float(np.radians(float(v)))),
            ("inclination_deg", "inclination", lambda v: float(np.radians(float(v)))),
            ("omega_e", "omega_e", float),
            ("sigma_mag_nT", "sigma_mag", lambda v: float(v) * 1e-9),
            ("sigma_rate_c", "sigma_rate", float),
            ("f_sample_hz", "f_sample", float),
        ):
            if src in values:
                kwargs[dst] = conv(values[src])
        return cls(**kwargs)


@dataclass
class SatState:
    q: np.ndarray      # attitude quaternion (w, x, y, z)
    omega: np.ndarray  # angular rate [rad/s]

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.q, self.omega])

    @classmethod
    def from_vector(cls, x: np.ndarray) -> "SatState":
        x = np.asarray(x, dtype=float)
        return cls(q=x[Q_COLS].copy(), omega=x[W_COLS].copy())


@dataclass
class Measurement:
    mag: np.ndarray    # magnetic field in body frame [T]
    gyro: np.ndarray   # measured angular rate [rad/s]

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.mag, self.gyro])


def omega_bo(q: np.ndarray, omega_bi: np.ndarray, params: SatParams) -> np.ndarray:
    """Angular rate relative to the orbit frame: omega_bi + R(q) @ (0, -omega0, 0)."""
    orbit_rate = np.array([0.0, -params.omega0, 0.0])
    return np.asarray(omega_bi, dtype=float) + rotate(q, orbit_rate)


def gravity_torque(q: np.ndarray, params: SatParams) -> np.ndarray:
    """Gravity-gradient torque 3 omega0^2 a3 x (I a3), a3 the 3rd rotation column."""
    a3 = rotation_matrix(q)[..., :, 2]
    Ia3 = a3 @ params.inertia.T
    return 3.0 * params.omega0**2 * np.cross(a3, Ia3)


def angular_accel(q: np.ndarray, omega_bi: np.ndarray, params: SatParams) -> np.ndarray:
    """Deterministic part of omega_dot: I^-1((I w) x w) + I^-1 tau_g."""
    omega_bi = np.asarray(omega_bi, dtype=float)
    Iw = omega_bi @ params.inertia.T
    gyroscopic = np.cross(Iw, omega_bi)
    inv_diag = 1.0 / params.inertia_diag
    return (gyroscopic + gravity_torque(q, params)) * inv_diag


def drift_vec(x: np.ndarray, params: SatParams) -> np.ndarray:
    """Deterministic drift of the stacked state, shape-preserving over batches.

    q_dot = 0.5 q * (0, omega_bo);  omega_dot = angular_accel.  Evaluable off
    S3: the quaternion equation is the natural polynomial extension.
    """
    x = np.asarray(x, dtype=float)
    q = x[..., Q_COLS]
    w = x[..., W_COLS]
    wbo = omega_bo(q, w, params)
    zero = np.zeros(wbo.shape[:-1] + (1,))
    q_dot = 0.5 * quat_multiply(q, np.concatenate([zero, wbo], axis=-1))
    w_dot = angular_accel(q, w, params)
    return np.concatenate([q_dot, w_dot], axis=-1)


def drift(state: SatState, params: SatParams) -> SatState:
    """Drift as a state-shaped tangent (q_dot, omega_dot)."""
    d = drift_vec(state.as_vector(), params)
    return SatState(q=d[Q_COLS], omega=d[W_COLS])


def earth_field(t, params: SatParams) -> np.ndarray:
    """Dipole-model magnetic field components in the orbit frame at time t [s].

    Vectorizes over t; returns shape (..., 3).
    """
    t = np.asarray(t, dtype=float)
    m = params.M_e / params.r0**3
    eps = params.epsilon
    inc = params.inclination
    w0t = params.omega0 * t
    wet = params.omega_e * t
    bracket = np.cos(eps) * np.sin(inc) - np.sin(eps) * np.cos(inc) * np.cos(wet)
    h1 = m * (np.cos(w0t) * bracket - np.sin(w0t) * np.sin(eps) * np.sin(wet))
    h2 = -m * (np.cos(eps) * np.cos(inc) + np.sin(eps) * np.sin(inc) * np.cos(wet))
    h3 = 2.0 * m * (np.sin(w0t) * bracket - 2.0 * np.sin(w0t) * np.sin(eps) * np.sin(wet))
    return np.stack(np.broadcast_arrays(h1, h2, h3), axis=-1)


def measure_clean(x: np.ndarray, t: float, params: SatParams) -> np.ndarray:
    """Noise-free measurement of stacked states: (R(q) @ H(t), omega), shape (..., 6)."""
    x = np.asarray(x, dtype=float)
    mag = rotate(x[..., Q_COLS], earth_field(t, params))
    return np.concatenate([mag, x[..., W_COLS]], axis=-1)


def measure(state: SatState, t: float, params: SatParams, rng: Rng | None = None) -> Measurement:
    """Measure one state; rng=None gives the noise-free measurement."""
    clean = measure_clean(state.as_vector(), t, params)
    if rng is not None:
        clean = clean + measurement_noise_std(params) * rng.standard_normal(6)
    return Measurement(mag=clean[:3], gyro=clean[3:])


def measurement_noise_std(params: SatParams) -> np.ndarray:
    return np.array([params.sigma_mag] * 3 + [params.sigma_rate] * 3)


def measurement_noise_cov(params: SatParams, rescale_h: float | None = None) -> np.ndarray:
    """Sensor noise covariance diag(sigma_mag^2 I3, sigma_rate^2 I3).

    The sensor sigmas are specified at the sampling rate, so they are used as
    discrete-time noise directly.  rescale_h applies the continuous-noise rule
    P_v / h instead, kept only for sensitivity studies.
    """
    cov = np.diag(measurement_noise_std(params) ** 2)
    if rescale_h is not None:
        cov = cov / rescale_h
    return cov
