"""Dense small-matrix helpers and seeded Gaussian sampling.

Everything here operates on plain numpy arrays; matrices are small
(at most ~41x41) so dense routines are used throughout.
"""

from __future__ import annotations

import numpy as np

from .errors import CovarianceError

# Relative tolerance for the symmetry check and the eigenvalue floor that
# separates "PSD up to rounding" from genuinely corrupted covariances.
SYM_RTOL = 1e-12
EIG_FLOOR = -1e-10


def symmetrize(P: np.ndarray) -> np.ndarray:
    """Return (P + P^T) / 2."""
    P = np.asarray(P, dtype=float)
    if P.ndim != 2 or P.shape[0] != P.shape[1]:
        raise CovarianceError(f"expected a square matrix, got shape {P.shape}")
    return 0.5 * (P + P.T)


def cholesky_sqrt(P: np.ndarray) -> np.ndarray:
    """Lower-triangular S with S @ S.T == P, for symmetric PSD P.

    Eigenvalues in [EIG_FLOOR, 0] are treated as exact zeros, so singular
    covariances (e.g. an exactly-zero noise block) factor cleanly.  Asymmetry
    beyond SYM_RTOL or an eigenvalue below EIG_FLOOR raises CovarianceError,
    signalling covariance corruption upstream.
    """
    P = np.asarray(P, dtype=float)
    if P.ndim != 2 or P.shape[0] != P.shape[1]:
        raise CovarianceError(f"expected a square matrix, got shape {P.shape}")
    scale = 1.0 + np.max(np.abs(P), initial=0.0)
    if np.max(np.abs(P - P.T), initial=0.0) > SYM_RTOL * scale:
        raise CovarianceError("matrix is not symmetric to tolerance")
    try:
        return np.linalg.cholesky(P)
    except np.linalg.LinAlgError:
        pass
    # Semidefinite case: factor through the eigendecomposition, then take the
    # QR of sqrt(w) V^T so the result is still triangular.
    w, V = np.linalg.eigh(symmetrize(P))
    if w[0] < EIG_FLOOR:
        raise CovarianceError(f"matrix has eigenvalue {w[0]:.3e} below the PSD floor")
    w = np.clip(w, 0.0, None)
    B = np.sqrt(w)[:, None] * V.T
    _, R = np.linalg.qr(B)
    signs = np.sign(np.diag(R))
    signs[signs == 0.0] = 1.0
    return (signs[:, None] * R).T


class Rng:
    """Deterministic Gaussian stream keyed by a seed plus substream indices.

    Substreams derive from (seed, key...) through a counter-based generator,
    so Monte Carlo run i can build its stream from (master_seed, i) and get
    identical numbers whether runs execute serially or in parallel.
    """

    def __init__(self, seed: int, key: tuple[int, ...] = ()):
        self.seed = int(seed)
        self.key = tuple(int(k) for k in key)
        ss = np.random.SeedSequence(self.seed, spawn_key=self.key)
        self._gen = np.random.Generator(np.random.Philox(ss))

    def substream(self, *key: int) -> "Rng":
        return Rng(self.seed, self.key + key)

    def standard_normal(self, size=None) -> np.ndarray:
        return self._gen.standard_normal(size)

    def uniform(self, low: float = 0.0, high: float = 1.0, size=None) -> np.ndarray:
        return self._gen.uniform(low, high, size)

    def __repr__(self) -> str:
        return f"Rng(seed={self.seed}, key={self.key})"


def sample_gaussian(mean: np.ndarray, cov: np.ndarray, rng: Rng) -> np.ndarray:
    """Draw mean + cholesky_sqrt(cov) @ z with z standard normal from rng."""
    mean = np.asarray(mean, dtype=float)
    cov = np.asarray(cov, dtype=float)
    if mean.shape != (cov.shape[0],):
        raise CovarianceError(
            f"mean/cov dimension mismatch: {mean.shape} vs {cov.shape}"
        )
    S = cholesky_sqrt(cov)
    return mean + S @ rng.standard_normal(mean.size)
