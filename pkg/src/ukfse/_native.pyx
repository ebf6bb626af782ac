# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels: truth integrator and the ambient-filter inner loop.

Semantics mirror ukfse._pykernels; equivalence is covered by tests.  The
filter kernel specializes the augmented UKF to the 7-state satellite system
(L = 20, 41 sigma points) with the optional stable-embedding term and the
optional posterior projection.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport atan2, cos, fabs, sin, sqrt
from libc.string cimport memcpy, memset

from .errors import ConvergenceError, StepError

cnp.import_array()

cdef int NX = 7
cdef int NY = 6
cdef int LA = 20          # augmented dimension: 7 + 7 + 6
cdef int NSIG = 41        # 2 * LA + 1


# ---------------------------------------------------------------------------
# satellite dynamics helpers
# ---------------------------------------------------------------------------

cdef inline void _embedded_rate(const double* x, double alpha, double w0,
                                double i1, double i2, double i3,
                                double* dx) noexcept nogil:
    """dx = embedded drift at x (quaternion block NOT renormalized)."""
    cdef double q0 = x[0], q1 = x[1], q2 = x[2], q3 = x[3]
    cdef double o1 = x[4], o2 = x[5], o3 = x[6]
    cdef double c1x = 2.0 * (q1 * q2 - q0 * q3)
    cdef double c1y = q0 * q0 - q1 * q1 + q2 * q2 - q3 * q3
    cdef double c1z = 2.0 * (q2 * q3 + q0 * q1)
    cdef double a3x = 2.0 * (q1 * q3 + q0 * q2)
    cdef double a3y = 2.0 * (q2 * q3 - q0 * q1)
    cdef double a3z = q0 * q0 - q1 * q1 - q2 * q2 + q3 * q3
    cdef double bx = o1 - w0 * c1x
    cdef double by = o2 - w0 * c1y
    cdef double bz = o3 - w0 * c1z
    cdef double e = q0 * q0 + q1 * q1 + q2 * q2 + q3 * q3 - 1.0
    cdef double ae = alpha * e
    dx[0] = 0.5 * (-q1 * bx - q2 * by - q3 * bz) - ae * q0
    dx[1] = 0.5 * (q0 * bx - q3 * by + q2 * bz) - ae * q1
    dx[2] = 0.5 * (q3 * bx + q0 * by - q1 * bz) - ae * q2
    dx[3] = 0.5 * (-q2 * bx + q1 * by + q0 * bz) - ae * q3
    cdef double t3 = 3.0 * w0 * w0
    cdef double tx = t3 * (a3y * i3 * a3z - a3z * i2 * a3y)
    cdef double ty = t3 * (a3z * i1 * a3x - a3x * i3 * a3z)
    cdef double tz = t3 * (a3x * i2 * a3y - a3y * i1 * a3x)
    dx[4] = (i2 * o2 * o3 - i3 * o3 * o2 + tx) / i1
    dx[5] = (i3 * o3 * o1 - i1 * o1 * o3 + ty) / i2
    dx[6] = (i1 * o1 * o2 - i2 * o2 * o1 + tz) / i3


cdef inline void _measure(const double* x, const double* hfield,
                          double* y) noexcept nogil:
    """y = (R(q) @ hfield, omega) without sensor noise."""
    cdef double q0 = x[0], q1 = x[1], q2 = x[2], q3 = x[3]
    cdef double h1 = hfield[0], h2 = hfield[1], h3 = hfield[2]
    y[0] = (q0 * q0 + q1 * q1 - q2 * q2 - q3 * q3) * h1 \
        + 2.0 * (q1 * q2 - q0 * q3) * h2 + 2.0 * (q1 * q3 + q0 * q2) * h3
    y[1] = 2.0 * (q1 * q2 + q0 * q3) * h1 \
        + (q0 * q0 - q1 * q1 + q2 * q2 - q3 * q3) * h2 + 2.0 * (q2 * q3 - q0 * q1) * h3
    y[2] = 2.0 * (q1 * q3 - q0 * q2) * h1 \
        + 2.0 * (q2 * q3 + q0 * q1) * h2 + (q0 * q0 - q1 * q1 - q2 * q2 + q3 * q3) * h3
    y[3] = x[4]
    y[4] = x[5]
    y[5] = x[6]


# ---------------------------------------------------------------------------
# small dense linear algebra (fixed sizes, deterministic)
# ---------------------------------------------------------------------------

cdef int _cholesky(double* A, double* L, int n) noexcept nogil:
    """Lower Cholesky of symmetric A (row-major); returns 0 on success."""
    cdef int i, j, k
    cdef double acc
    memset(L, 0, n * n * sizeof(double))
    for i in range(n):
        for j in range(i + 1):
            acc = A[i * n + j]
            for k in range(j):
                acc -= L[i * n + k] * L[j * n + k]
            if i == j:
                if acc <= 0.0 or acc != acc:
                    return 1
                L[i * n + i] = sqrt(acc)
            else:
                L[i * n + j] = acc / L[j * n + j]
    return 0


cdef void _jacobi_eig6(const double* A, double* eigval, double* V) noexcept nogil:
    """Eigendecomposition of a symmetric 6x6 by cyclic Jacobi sweeps."""
    cdef int n = 6
    cdef double W[36]
    cdef int i, j, k, p, q, sweep
    cdef double off, scale, apq, app, aqq, tau, t, c, s, akp, akq, vkp, vkq
    memcpy(W, A, 36 * sizeof(double))
    memset(V, 0, 36 * sizeof(double))
    scale = 0.0
    for i in range(n):
        V[i * n + i] = 1.0
        scale += W[i * n + i] * W[i * n + i]
    for sweep in range(50):
        off = 0.0
        for p in range(n - 1):
            for q in range(p + 1, n):
                off += W[p * n + q] * W[p * n + q]
        if off <= 1e-30 * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = W[p * n + q]
                if fabs(apq) == 0.0:
                    continue
                app = W[p * n + p]
                aqq = W[q * n + q]
                tau = (aqq - app) / (2.0 * apq)
                if tau >= 0.0:
                    t = 1.0 / (tau + sqrt(1.0 + tau * tau))
                else:
                    t = -1.0 / (-tau + sqrt(1.0 + tau * tau))
                c = 1.0 / sqrt(1.0 + t * t)
                s = t * c
                for k in range(n):
                    akp = W[k * n + p]
                    akq = W[k * n + q]
                    W[k * n + p] = c * akp - s * akq
                    W[k * n + q] = s * akp + c * akq
                for k in range(n):
                    akp = W[p * n + k]
                    akq = W[q * n + k]
                    W[p * n + k] = c * akp - s * akq
                    W[q * n + k] = s * akp + c * akq
                for k in range(n):
                    vkp = V[k * n + p]
                    vkq = V[k * n + q]
                    V[k * n + p] = c * vkp - s * vkq
                    V[k * n + q] = s * vkp + c * vkq
    for i in range(n):
        eigval[i] = W[i * n + i]


cdef int _solve5(double* A, double* b) noexcept nogil:
    """In-place solve of a 5x5 system by Gaussian elimination with pivoting."""
    cdef int n = 5
    cdef int i, j, k, piv
    cdef double best, factor, tmp
    for k in range(n):
        piv = k
        best = fabs(A[k * n + k])
        for i in range(k + 1, n):
            if fabs(A[i * n + k]) > best:
                best = fabs(A[i * n + k])
                piv = i
        if best == 0.0:
            return 1
        if piv != k:
            for j in range(n):
                tmp = A[k * n + j]
                A[k * n + j] = A[piv * n + j]
                A[piv * n + j] = tmp
            tmp = b[k]
            b[k] = b[piv]
            b[piv] = tmp
        for i in range(k + 1, n):
            factor = A[i * n + k] / A[k * n + k]
            for j in range(k, n):
                A[i * n + j] -= factor * A[k * n + j]
            b[i] -= factor * b[k]
    for i in range(n - 1, -1, -1):
        tmp = b[i]
        for j in range(i + 1, n):
            tmp -= A[i * n + j] * b[j]
        b[i] = tmp / A[i * n + i]
    return 0


cdef int _project_newton(double* q, double tol, int max_iter) noexcept nogil:
    """Lagrange-Newton projection of q onto the unit sphere, in place."""
    cdef double x[4]
    cdef double lam = 0.0
    cdef double F[5]
    cdef double J[25]
    cdef double res, con
    cdef int it, i, j
    for i in range(4):
        x[i] = q[i]
    for it in range(max_iter):
        con = x[0] * x[0] + x[1] * x[1] + x[2] * x[2] + x[3] * x[3] - 1.0
        res = 0.0
        for i in range(4):
            F[i] = x[i] - q[i] + lam * x[i]
            if fabs(F[i]) > res:
                res = fabs(F[i])
        if res < tol and fabs(con) < tol:
            for i in range(4):
                q[i] = x[i]
            return 0
        F[4] = con
        memset(J, 0, 25 * sizeof(double))
        for i in range(4):
            J[i * 5 + i] = 1.0 + lam
            J[i * 5 + 4] = x[i]
            J[4 * 5 + i] = 2.0 * x[i]
        for i in range(5):
            F[i] = -F[i]
        if _solve5(J, F) != 0:
            return 1
        for i in range(4):
            x[i] += F[i]
        lam += F[4]
    return 1


# ---------------------------------------------------------------------------
# exported kernels
# ---------------------------------------------------------------------------

def truth_rollout(x0, double h, int n_sub, int n_steps, omega_noise, sat):
    """Mirror of the pure truth integrator (see ukfse._pykernels)."""
    cdef cnp.ndarray[cnp.float64_t, ndim=1] x0_arr = np.ascontiguousarray(x0, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=2] noise = np.ascontiguousarray(omega_noise, dtype=np.float64)
    if noise.shape[0] != n_steps * n_sub or noise.shape[1] != 3:
        raise ValueError("omega_noise must have one row per substep")
    diag = np.diag(np.asarray(sat.inertia, dtype=np.float64))
    cdef double i1 = diag[0], i2 = diag[1], i3 = diag[2]
    cdef double w0 = sat.omega0
    cdef cnp.ndarray[cnp.float64_t, ndim=2] out = np.empty((n_steps + 1, 7))
    cdef double x[7]
    cdef double dx[7]
    cdef double inv
    cdef int k, s, i
    cdef long j = 0
    for i in range(7):
        x[i] = x0_arr[i]
        out[0, i] = x[i]
    with nogil:
        for k in range(n_steps):
            for s in range(n_sub):
                _embedded_rate(x, 0.0, w0, i1, i2, i3, dx)
                for i in range(7):
                    x[i] += h * dx[i]
                x[4] += noise[j, 0]
                x[5] += noise[j, 1]
                x[6] += noise[j, 2]
                j += 1
                inv = 1.0 / sqrt(x[0] * x[0] + x[1] * x[1] + x[2] * x[2] + x[3] * x[3])
                x[0] *= inv
                x[1] *= inv
                x[2] *= inv
                x[3] *= inv
            for i in range(7):
                out[k + 1, i] = x[i]
    return out


def filter_rollout(x0, P0, Y, double h, double alpha, int project,
                   sat, P_w, P_v, params):
    """Mirror of the pure ambient-filter pass (see ukfse._pykernels)."""
    cdef cnp.ndarray[cnp.float64_t, ndim=1] x_arr = np.ascontiguousarray(x0, dtype=np.float64).copy()
    cdef cnp.ndarray[cnp.float64_t, ndim=2] P_arr = np.ascontiguousarray(P0, dtype=np.float64).copy()
    cdef cnp.ndarray[cnp.float64_t, ndim=2] Y_arr = np.ascontiguousarray(Y, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=2] Pw_arr = np.ascontiguousarray(P_w, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=2] Pv_arr = np.ascontiguousarray(P_v, dtype=np.float64)
    if x_arr.shape[0] != NX or P_arr.shape[0] != NX or P_arr.shape[1] != NX:
        raise ValueError("state must be 7-dimensional")
    if Y_arr.shape[1] != NY or Pw_arr.shape[0] != NX or Pv_arr.shape[0] != NY:
        raise ValueError("inconsistent noise/measurement shapes")

    diag = np.diag(np.asarray(sat.inertia, dtype=np.float64))
    cdef double i1 = diag[0], i2 = diag[1], i3 = diag[2]
    cdef double w0 = sat.omega0
    cdef double m_dip = sat.M_e / (sat.r0 * sat.r0 * sat.r0)
    cdef double eps = sat.epsilon
    cdef double inc = sat.inclination
    cdef double we = sat.omega_e

    cdef double gamma = params.gamma
    cdef double kappa = params.kappa
    cdef double beta = params.beta
    cdef double lam = gamma * gamma * (LA + kappa) - LA
    if LA + lam <= 0.0:
        raise ValueError("L + lambda must be positive")
    cdef double spread = sqrt(LA + lam)
    cdef double wm0 = lam / (LA + lam)
    cdef double wc0 = wm0 + (1.0 - gamma * gamma + beta)
    cdef double wi = 1.0 / (2.0 * (LA + lam))

    cdef int n_meas = Y_arr.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=2] out = np.empty((n_meas + 1, 7))

    # work buffers
    cdef cnp.ndarray[cnp.float64_t, ndim=2] Pa_b = np.zeros((LA, LA))
    cdef cnp.ndarray[cnp.float64_t, ndim=2] S_b = np.zeros((LA, LA))
    cdef cnp.ndarray[cnp.float64_t, ndim=2] sig_b = np.zeros((NSIG, LA))
    cdef cnp.ndarray[cnp.float64_t, ndim=2] Xp_b = np.zeros((NSIG, NX))
    cdef cnp.ndarray[cnp.float64_t, ndim=2] Ym_b = np.zeros((NSIG, NY))
    cdef double* Pa = <double*> Pa_b.data
    cdef double* S = <double*> S_b.data
    cdef double* sig = <double*> sig_b.data
    cdef double* Xp = <double*> Xp_b.data
    cdef double* Ym = <double*> Ym_b.data
    cdef double* x = <double*> x_arr.data
    cdef double* P = <double*> P_arr.data
    cdef double* Pw = <double*> Pw_arr.data
    cdef double* Pv = <double*> Pv_arr.data

    cdef double xpred[7]
    cdef double ypred[6]
    cdef double Ppred[49]
    cdef double Pyy[36]
    cdef double Pxy[42]
    cdef double K[42]
    cdef double KP[42]
    cdef double eigval[6]
    cdef double Vyy[36]
    cdef double hfield[3]
    cdef double innov[6]
    cdef double dx[7]
    cdef double dy[6]
    cdef double t, w0t, wet, bracket, wgt
    cdef double emax, emin, a
    cdef int k, i, j, r, c2, fail, status
    cdef double q0, q1, q2, q3, e, ae, bx, by, bz, c1x, c1y, c1z, a3x, a3y, a3z, inv

    for i in range(7):
        out[0, i] = x[i]

    status = 0
    with nogil:
        for k in range(n_meas):
            t = (k + 1) * h
            # --- augmented covariance and its Cholesky factor
            memset(Pa, 0, LA * LA * sizeof(double))
            for i in range(NX):
                for j in range(NX):
                    Pa[i * LA + j] = P[i * NX + j]
                    Pa[(NX + i) * LA + (NX + j)] = Pw[i * NX + j]
            for i in range(NY):
                for j in range(NY):
                    Pa[(2 * NX + i) * LA + (2 * NX + j)] = Pv[i * NY + j]
            fail = _cholesky(Pa, S, LA)
            if fail != 0:
                for i in range(LA):
                    Pa[i * LA + i] += 1e-12
                fail = _cholesky(Pa, S, LA)
                if fail != 0:
                    status = 1
                    break
            # --- sigma points
            for j in range(LA):
                sig[j] = x[j] if j < NX else 0.0
            for i in range(LA):
                for j in range(LA):
                    a = x[j] if j < NX else 0.0
                    sig[(1 + i) * LA + j] = a + spread * S[j * LA + i]
                    sig[(1 + LA + i) * LA + j] = a - spread * S[j * LA + i]
            # --- propagate (embedded Euler step plus additive w-part)
            for i in range(NSIG):
                _embedded_rate(&sig[i * LA], alpha, w0, i1, i2, i3, dx)
                for j in range(NX):
                    Xp[i * NX + j] = sig[i * LA + j] + h * dx[j] + sig[i * LA + NX + j]
            # --- predicted mean / covariance
            for j in range(NX):
                xpred[j] = wm0 * Xp[j]
            for i in range(1, NSIG):
                for j in range(NX):
                    xpred[j] += wi * Xp[i * NX + j]
            memset(Ppred, 0, 49 * sizeof(double))
            for i in range(NSIG):
                wgt = wc0 if i == 0 else wi
                for r in range(NX):
                    dx[r] = Xp[i * NX + r] - xpred[r]
                for r in range(NX):
                    for c2 in range(NX):
                        Ppred[r * NX + c2] += wgt * dx[r] * dx[c2]
            for r in range(NX):
                for c2 in range(r):
                    a = 0.5 * (Ppred[r * NX + c2] + Ppred[c2 * NX + r])
                    Ppred[r * NX + c2] = a
                    Ppred[c2 * NX + r] = a
            # --- measurement prediction at the propagated points
            w0t = w0 * t
            wet = we * t
            bracket = cos(eps) * sin(inc) - sin(eps) * cos(inc) * cos(wet)
            hfield[0] = m_dip * (cos(w0t) * bracket - sin(w0t) * sin(eps) * sin(wet))
            hfield[1] = -m_dip * (cos(eps) * cos(inc) + sin(eps) * sin(inc) * cos(wet))
            hfield[2] = 2.0 * m_dip * (sin(w0t) * bracket - 2.0 * sin(w0t) * sin(eps) * sin(wet))
            for i in range(NSIG):
                _measure(&Xp[i * NX], hfield, &Ym[i * NY])
                for j in range(NY):
                    Ym[i * NY + j] += sig[i * LA + 2 * NX + j]
            for j in range(NY):
                ypred[j] = wm0 * Ym[j]
            for i in range(1, NSIG):
                for j in range(NY):
                    ypred[j] += wi * Ym[i * NY + j]
            # --- innovation and cross covariances
            memset(Pyy, 0, 36 * sizeof(double))
            memset(Pxy, 0, 42 * sizeof(double))
            for i in range(NSIG):
                wgt = wc0 if i == 0 else wi
                for r in range(NX):
                    dx[r] = Xp[i * NX + r] - xpred[r]
                for r in range(NY):
                    dy[r] = Ym[i * NY + r] - ypred[r]
                for r in range(NY):
                    for c2 in range(NY):
                        Pyy[r * NY + c2] += wgt * dy[r] * dy[c2]
                for r in range(NX):
                    for c2 in range(NY):
                        Pxy[r * NY + c2] += wgt * dx[r] * dy[c2]
            for r in range(NY):
                for c2 in range(r):
                    a = 0.5 * (Pyy[r * NY + c2] + Pyy[c2 * NY + r])
                    Pyy[r * NY + c2] = a
                    Pyy[c2 * NY + r] = a
            # --- conditioning check and gain via the eigendecomposition
            _jacobi_eig6(Pyy, eigval, Vyy)
            emax = 0.0
            emin = -1.0
            for i in range(NY):
                a = fabs(eigval[i])
                if a > emax:
                    emax = a
                if emin < 0.0 or a < emin:
                    emin = a
            if emin <= 0.0 or emax / emin > 1e14:
                status = 2
                break
            # K = Pxy V diag(1/eig) V^T
            for r in range(NX):
                for c2 in range(NY):
                    KP[r * NY + c2] = 0.0
                    for i in range(NY):
                        KP[r * NY + c2] += Pxy[r * NY + i] * Vyy[i * NY + c2]
            for r in range(NX):
                for c2 in range(NY):
                    K[r * NY + c2] = 0.0
                    for i in range(NY):
                        K[r * NY + c2] += KP[r * NY + i] / eigval[i] * Vyy[c2 * NY + i]
            # --- state and covariance update
            for j in range(NY):
                innov[j] = Y_arr[k, j] - ypred[j]
            for r in range(NX):
                x[r] = xpred[r]
                for j in range(NY):
                    x[r] += K[r * NY + j] * innov[j]
            # P = Ppred - K Pyy K^T
            for r in range(NX):
                for c2 in range(NY):
                    KP[r * NY + c2] = 0.0
                    for i in range(NY):
                        KP[r * NY + c2] += K[r * NY + i] * Pyy[i * NY + c2]
            for r in range(NX):
                for c2 in range(NX):
                    a = Ppred[r * NX + c2]
                    for i in range(NY):
                        a -= KP[r * NY + i] * K[c2 * NY + i]
                    P[r * NX + c2] = a
            for r in range(NX):
                for c2 in range(r):
                    a = 0.5 * (P[r * NX + c2] + P[c2 * NX + r])
                    P[r * NX + c2] = a
                    P[c2 * NX + r] = a
            # --- optional posterior projection of the quaternion block
            if project == 1:
                inv = 1.0 / sqrt(x[0] * x[0] + x[1] * x[1] + x[2] * x[2] + x[3] * x[3])
                x[0] *= inv
                x[1] *= inv
                x[2] *= inv
                x[3] *= inv
            elif project == 2:
                if _project_newton(x, 1e-10, 50) != 0:
                    status = 3
                    break
            for j in range(NX):
                out[k + 1, j] = x[j]

    if status == 1:
        raise StepError("augmented covariance factorization failed (after jitter retry)")
    if status == 2:
        raise StepError("innovation covariance is singular (cond > 1e14)")
    if status == 3:
        raise ConvergenceError("posterior projection did not converge")
    return out
