"""Hot numeric kernels for the 4x4 (one optical mode + mechanics) models.

Every function here is written in the numpy subset that numba understands.
When numba is importable and ``SQZCOOL_DISABLE_NUMBA`` is unset, the
functions are compiled with ``@njit``; otherwise the very same source runs
as plain numpy.  ``USING_NUMBA`` tells which path is active.

Quadrature ordering is (X_a, Y_a, X_b, Y_b) with X = o + o^dag,
Y = -i (o - o^dag).
"""
import os

import numpy as np

DISABLE_ENV = "SQZCOOL_DISABLE_NUMBA"

# Drift eigenvalues above this count as unstable (OPO threshold guard).
STABILITY_MARGIN = -1e-9


def _numba_requested():
    flag = os.environ.get(DISABLE_ENV, "").strip().lower()
    if flag in ("1", "true", "yes", "on"):
        return False
    try:
        import numba  # noqa: F401
    except ImportError:
        return False
    return True


USING_NUMBA = _numba_requested()

if USING_NUMBA:
    from numba import njit

    def _kernel(func):
        return njit(cache=True, nogil=True)(func)
else:
    def _kernel(func):
        return func


@_kernel
def lyap_kron(A, D):
    """Solve A V + V A^T + D = 0 by Kronecker vectorisation."""
    n = A.shape[0]
    eye = np.eye(n)
    K = np.kron(A, eye) + np.kron(eye, A)
    rhs = -np.ascontiguousarray(D).reshape(n * n)
    V = np.linalg.solve(K, rhs).reshape((n, n))
    return 0.5 * (V + V.T)


@_kernel
def lyap_packed(A, D):
    """Same equation, unknowns restricted to the upper triangle of V.

    n(n+1)/2 instead of n^2 unknowns; the loop assembly pays off only
    when compiled.
    """
    n = A.shape[0]
    m = n * (n + 1) // 2
    idx = np.zeros((n, n), dtype=np.int64)
    k = 0
    for i in range(n):
        for j in range(i, n):
            idx[i, j] = k
            idx[j, i] = k
            k += 1
    L = np.zeros((m, m))
    rhs = np.zeros(m)
    for i in range(n):
        for j in range(i, n):
            r = idx[i, j]
            rhs[r] = -D[i, j]
            for l in range(n):
                L[r, idx[l, j]] += A[i, l]
                L[r, idx[i, l]] += A[j, l]
    v = np.linalg.solve(L, rhs)
    V = np.empty((n, n))
    for i in range(n):
        for j in range(n):
            V[i, j] = v[idx[i, j]]
    return V


@_kernel
def max_real_eig(A):
    return np.linalg.eigvals(A.astype(np.complex128)).real.max()


@_kernel
def charpoly(A):
    """Characteristic polynomial coefficients (leading 1) by Faddeev-LeVerrier."""
    n = A.shape[0]
    c = np.zeros(n + 1)
    c[0] = 1.0
    M = np.zeros((n, n))
    for k in range(1, n + 1):
        M = A @ M
        for i in range(n):
            M[i, i] += c[k - 1]
        c[k] = -np.trace(A @ M) / k
    return c


@_kernel
def hurwitz_stable(A, margin):
    """Routh test: are all eigenvalues of A left of Re = margin?

    Agrees with the eigenvalue test except within rounding of the
    boundary; a vanishing pivot counts as unstable.
    """
    n = A.shape[0]
    B = A.copy()
    for i in range(n):
        B[i, i] -= margin
    c = charpoly(B)
    width = n // 2 + 1
    r0 = np.zeros(width)
    r1 = np.zeros(width)
    for j in range(n + 1):
        if j % 2 == 0:
            r0[j // 2] = c[j]
        else:
            r1[j // 2] = c[j]
    for _ in range(n):
        if not r1[0] > 0.0:
            return False
        nxt = np.zeros(width)
        for j in range(width - 1):
            nxt[j] = r0[j + 1] - r0[0] * r1[j + 1] / r1[0]
        r0 = r1
        r1 = nxt
    return True


# Compiled code favours the loop-based routines; plain numpy the LAPACK ones.
if USING_NUMBA:
    _solve_lyap = lyap_packed

    @_kernel
    def is_stable(A):
        return hurwitz_stable(A, STABILITY_MARGIN)
else:
    _solve_lyap = lyap_kron

    def is_stable(A):
        return bool(max_real_eig(A) <= STABILITY_MARGIN)


@_kernel
def internal_drift(kappa, delta, G, chi, phi, gamma, omega_m):
    c2 = np.cos(2.0 * phi)
    s2 = np.sin(2.0 * phi)
    A = np.zeros((4, 4))
    A[0, 0] = -kappa + chi * c2
    A[0, 1] = delta + chi * s2
    A[1, 0] = -delta + chi * s2
    A[1, 1] = -kappa - chi * c2
    A[1, 2] = 2.0 * G
    A[2, 2] = -0.5 * gamma
    A[2, 3] = omega_m
    A[3, 0] = 2.0 * G
    A[3, 2] = -omega_m
    A[3, 3] = -0.5 * gamma
    return A


@_kernel
def injected_drift(kappa, delta_s, G_s, gamma, omega_m):
    return internal_drift(kappa, delta_s, G_s, 0.0, 0.0, gamma, omega_m)


@_kernel
def diffusion(kappa, n_s, m_s, phi_s, gamma, n_T):
    # optical input <a a> = m_s exp(-2i phi_s); n_s = m_s = 0 is vacuum
    re_m = m_s * np.cos(2.0 * phi_s)
    im_m = -m_s * np.sin(2.0 * phi_s)
    D = np.zeros((4, 4))
    D[0, 0] = 2.0 * kappa * (2.0 * n_s + 1.0 + 2.0 * re_m)
    D[1, 1] = 2.0 * kappa * (2.0 * n_s + 1.0 - 2.0 * re_m)
    D[0, 1] = 2.0 * kappa * 2.0 * im_m
    D[1, 0] = D[0, 1]
    D[2, 2] = gamma * (2.0 * n_T + 1.0)
    D[3, 3] = D[2, 2]
    return D


@_kernel
def nst_from(A, D):
    """Stationary phonon number, or NaN when the drift is not stable."""
    if not is_stable(A):
        return np.nan
    V = _solve_lyap(A, D)
    return 0.25 * (V[2, 2] + V[3, 3] - 2.0)


@_kernel
def nst_internal(kappa, delta, G, chi, phi, gamma, n_T, omega_m):
    A = internal_drift(kappa, delta, G, chi, phi, gamma, omega_m)
    D = diffusion(kappa, 0.0, 0.0, 0.0, gamma, n_T)
    return nst_from(A, D)


@_kernel
def nst_injected(kappa, delta_s, G_s, n_s, phi_s, gamma, n_T, omega_m):
    A = injected_drift(kappa, delta_s, G_s, gamma, omega_m)
    m_s = np.sqrt(n_s * (n_s + 1.0))
    D = diffusion(kappa, n_s, m_s, phi_s, gamma, n_T)
    return nst_from(A, D)


@_kernel
def nst_internal_batch(rows):
    """Row-wise ``nst_internal``; columns follow its argument order."""
    out = np.empty(rows.shape[0])
    for i in range(rows.shape[0]):
        r = rows[i]
        out[i] = nst_internal(r[0], r[1], r[2], r[3], r[4], r[5], r[6], r[7])
    return out


@_kernel
def nst_injected_batch(rows):
    out = np.empty(rows.shape[0])
    for i in range(rows.shape[0]):
        r = rows[i]
        out[i] = nst_injected(r[0], r[1], r[2], r[3], r[4], r[5], r[6], r[7])
    return out
