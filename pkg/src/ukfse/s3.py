"""Quaternion algebra and geometry of the unit-quaternion sphere S3.

Quaternions are stored (w, x, y, z) in arrays of shape (..., 4); every
function broadcasts over leading axes so sigma-point batches go through in
one call.  Two charts are provided: the Lie-algebra chart at the group
identity (3-vector coordinates) and the Riemannian tangent chart at an
arbitrary base point (4-vector coordinates orthogonal to the base).
"""

from __future__ import annotations

import numpy as np

from .errors import ChartDomainError, ConvergenceError

IDENTITY = np.array([1.0, 0.0, 0.0, 0.0])

_EPS_ZERO = 1e-12


def quat_multiply(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Hamilton product, broadcasting over leading axes."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    w1, x1, y1, z1 = np.moveaxis(a, -1, 0)
    w2, x2, y2, z2 = np.moveaxis(b, -1, 0)
    return np.stack(
        [
            w1 * w2 - x1 * x2 - y1 * y2 - z1 * z2,
            w1 * x2 + x1 * w2 + y1 * z2 - z1 * y2,
            w1 * y2 - x1 * z2 + y1 * w2 + z1 * x2,
            w1 * z2 + x1 * y2 - y1 * x2 + z1 * w2,
        ],
        axis=-1,
    )


def lambda_matrix(q: np.ndarray) -> np.ndarray:
    """4x4 left-multiplication matrix: lambda_matrix(q) @ p == q * p."""
    q0, q1, q2, q3 = np.asarray(q, dtype=float)
    return np.array(
        [
            [q0, -q1, -q2, -q3],
            [q1, q0, -q3, q2],
            [q2, q3, q0, -q1],
            [q3, -q2, q1, q0],
        ]
    )


def rotation_matrix(q: np.ndarray) -> np.ndarray:
    """Rotation matrix of q, shape (..., 3, 3); evaluated as-is for non-unit q."""
    q = np.asarray(q, dtype=float)
    q0, q1, q2, q3 = np.moveaxis(q, -1, 0)
    row0 = np.stack(
        [q0**2 + q1**2 - q2**2 - q3**2, 2 * (q1 * q2 - q0 * q3), 2 * (q1 * q3 + q0 * q2)],
        axis=-1,
    )
    row1 = np.stack(
        [2 * (q1 * q2 + q0 * q3), q0**2 - q1**2 + q2**2 - q3**2, 2 * (q2 * q3 - q0 * q1)],
        axis=-1,
    )
    row2 = np.stack(
        [2 * (q1 * q3 - q0 * q2), 2 * (q2 * q3 + q0 * q1), q0**2 - q1**2 - q2**2 + q3**2],
        axis=-1,
    )
    return np.stack([row0, row1, row2], axis=-2)


def rotate(q: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Apply rotation_matrix(q) to v, broadcasting over leading axes."""
    R = rotation_matrix(q)
    v = np.asarray(v, dtype=float)
    return np.einsum("...ij,...j->...i", R, np.broadcast_to(v, R.shape[:-2] + (3,)))


def project_formula(q: np.ndarray) -> np.ndarray:
    """Closed-form projection onto S3: q / ||q||."""
    q = np.asarray(q, dtype=float)
    n = np.linalg.norm(q, axis=-1, keepdims=True)
    if np.any(n < _EPS_ZERO):
        raise ConvergenceError("cannot project a near-zero quaternion onto S3")
    return q / n


def project_optimize(q: np.ndarray, tol: float = 1e-10, max_iter: int = 50) -> np.ndarray:
    """Project onto S3 by Newton iteration on the Lagrangian first-order conditions.

    Solves min ||x - q||^2 subject to ||x||^2 = 1 starting from (x, lam) = (q, 0).
    The closed-form normalization is the analytic solution on S3; this iterative
    route exists so the benchmark reproduces the cost profile of optimization-based
    projection.
    """
    q = np.asarray(q, dtype=float)
    if np.linalg.norm(q) < _EPS_ZERO:
        raise ConvergenceError("cannot project a near-zero quaternion onto S3")
    x = q.copy()
    lam = 0.0
    for _ in range(max_iter):
        stationarity = x - q + lam * x
        constraint = x @ x - 1.0
        if np.max(np.abs(stationarity)) < tol and abs(constraint) < tol:
            return x
        J = np.zeros((5, 5))
        J[:4, :4] = (1.0 + lam) * np.eye(4)
        J[:4, 4] = x
        J[4, :4] = 2.0 * x
        step = np.linalg.solve(J, -np.concatenate([stationarity, [constraint]]))
        x = x + step[:4]
        lam = lam + step[4]
    raise ConvergenceError(f"projection did not converge in {max_iter} iterations")


def lie_log(q: np.ndarray) -> np.ndarray:
    """Chart coordinates at the identity: arctan(||im||/re) * im/||im||.

    Uses the two-argument arctangent so the chart covers the whole sphere
    except the antipode of the identity, which is rejected.
    """
    q = np.asarray(q, dtype=float)
    w = q[..., 0]
    im = q[..., 1:]
    n = np.linalg.norm(im, axis=-1)
    if np.any((n < _EPS_ZERO) & (w < 0.0)):
        raise ChartDomainError("lie_log undefined at the antipode of the identity")
    theta = np.arctan2(n, w)
    safe = np.where(n < _EPS_ZERO, 1.0, n)
    scale = np.where(n < _EPS_ZERO, 1.0 / np.where(w == 0.0, 1.0, w), theta / safe)
    return scale[..., None] * im


def lie_exp(v: np.ndarray) -> np.ndarray:
    """Inverse chart: cos(||v||) + sin(||v||) v/||v||, with v = 0 -> identity."""
    v = np.asarray(v, dtype=float)
    n = np.linalg.norm(v, axis=-1)
    w = np.cos(n)
    im = np.sinc(n / np.pi)[..., None] * v
    return np.concatenate([w[..., None], im], axis=-1)


def riem_log(mu: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Riemannian logarithm of q at base mu: a 4-vector in the tangent space at mu."""
    mu = np.asarray(mu, dtype=float)
    q = np.asarray(q, dtype=float)
    d = np.clip(np.sum(q * mu, axis=-1), -1.0, 1.0)
    if np.any(d <= -1.0 + 1e-9):
        raise ChartDomainError("riem_log undefined for an antipodal pair")
    theta = np.arccos(d)
    s = np.sin(theta)
    factor = np.where(theta < 1e-9, 1.0, theta / np.where(s == 0.0, 1.0, s))
    return (q - mu * d[..., None]) * factor[..., None]


def riem_exp(mu: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Riemannian exponential at base mu of tangent 4-vector u."""
    mu = np.asarray(mu, dtype=float)
    u = np.asarray(u, dtype=float)
    n = np.linalg.norm(u, axis=-1)
    return mu * np.cos(n)[..., None] + np.sinc(n / np.pi)[..., None] * u


def geodesic_distance(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Great-circle distance arccos(<a, b>) between unit quaternions."""
    d = np.clip(np.sum(np.asarray(a) * np.asarray(b), axis=-1), -1.0, 1.0)
    return np.arccos(d)


def tangent_basis(q: np.ndarray) -> np.ndarray:
    """Orthonormal basis of the tangent space at unit q, shape (..., 4, 3).

    Columns are q*i, q*j, q*k; left multiplication by a unit quaternion is
    orthogonal, so the columns are orthonormal and orthogonal to q.
    """
    q = np.asarray(q, dtype=float)
    q0, q1, q2, q3 = np.moveaxis(q, -1, 0)
    col_i = np.stack([-q1, q0, q3, -q2], axis=-1)
    col_j = np.stack([-q2, -q3, q0, q1], axis=-1)
    col_k = np.stack([-q3, q2, -q1, q0], axis=-1)
    return np.stack([col_i, col_j, col_k], axis=-1)


def karcher_mean(
    points: np.ndarray,
    weights: np.ndarray,
    tol: float = 1e-12,
    max_iter: int = 100,
) -> np.ndarray:
    """Weighted intrinsic mean on S3 by fixed-point iteration.

    Signed weights are accepted (they must sum to 1); sigma-point weight sets
    with a large negative center weight are the intended use.  Non-convergence
    and degenerate initialization are reported, not patched over.
    """
    points = np.asarray(points, dtype=float)
    weights = np.asarray(weights, dtype=float)
    if abs(weights.sum() - 1.0) > 1e-9:
        raise ConvergenceError("karcher_mean weights must sum to 1")
    start = weights @ points
    norm = np.linalg.norm(start)
    if norm < 1e-9:
        raise ConvergenceError("degenerate initialization: weighted point sum is near zero")
    mu = start / norm
    for _ in range(max_iter):
        g = weights @ riem_log(mu, points)
        # The gradient is tangent by construction; remove the radial component
        # that rounding (amplified by large signed weights) leaks in.
        g = g - mu * (g @ mu)
        if np.linalg.norm(g) < tol:
            return mu
        mu = riem_exp(mu, g)
        mu = mu / np.linalg.norm(mu)
    raise ConvergenceError(f"karcher_mean did not converge in {max_iter} iterations")
