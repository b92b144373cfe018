# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled batch solver for the three-level Lambda steady state.

Mirrors :mod:`ives_sme._lambda_py`; both must return identical results to
round-off.  Row-major vectorization, row 0 replaced by the trace condition.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport fabs, sqrt

cnp.import_array()

DEF NS = 9


cdef inline double cabs2(double complex z) nogil:
    return z.real * z.real + z.imag * z.imag


cdef int _solve_one(double Delta, double delta, double wp, double wc,
                    double G31, double G32, double g21, double g31, double g32,
                    double pivot_tol, double complex* out) nogil:
    cdef double complex M[NS][NS]
    cdef double complex rhs[NS]
    cdef double H[3][3]
    cdef double deph[3][3]
    cdef double half_tot
    cdef double scale
    cdef int a, b, c, idx, i, j, k, piv
    cdef double best, cur
    cdef double complex f, tmp

    scale = fabs(Delta)
    if fabs(delta) > scale: scale = fabs(delta)
    if wp > scale: scale = wp
    if wc > scale: scale = wc
    if G31 > scale: scale = G31
    if G32 > scale: scale = G32
    if g21 > scale: scale = g21
    if g31 > scale: scale = g31
    if g32 > scale: scale = g32
    if scale == 0.0:
        return 0
    Delta /= scale; delta /= scale; wp /= scale; wc /= scale
    G31 /= scale; G32 /= scale; g21 /= scale; g31 /= scale; g32 /= scale

    H[0][0] = 0.0;      H[0][1] = 0.0;      H[0][2] = -0.5 * wp
    H[1][0] = 0.0;      H[1][1] = -delta;   H[1][2] = -0.5 * wc
    H[2][0] = -0.5 * wp; H[2][1] = -0.5 * wc; H[2][2] = -Delta

    deph[0][0] = 0.0; deph[1][1] = 0.0; deph[2][2] = 0.0
    deph[0][1] = g21; deph[1][0] = g21
    deph[0][2] = g31; deph[2][0] = g31
    deph[1][2] = g32; deph[2][1] = g32
    half_tot = 0.5 * (G31 + G32)

    for i in range(NS):
        rhs[i] = 0.0
        for j in range(NS):
            M[i][j] = 0.0

    for a in range(3):
        for b in range(3):
            idx = 3 * a + b
            for c in range(3):
                M[idx][3 * c + b] = M[idx][3 * c + b] - 1j * H[a][c]
                M[idx][3 * a + c] = M[idx][3 * a + c] + 1j * H[c][b]
            M[idx][idx] = M[idx][idx] - half_tot * ((a == 2) + (b == 2)) - deph[a][b]
    M[4][8] = M[4][8] + G32

    # trace row replaces the rho_11 equation
    for j in range(NS):
        M[0][j] = 0.0
    M[0][0] = 1.0; M[0][4] = 1.0; M[0][8] = 1.0
    rhs[0] = 1.0

    for k in range(NS):
        piv = k
        best = cabs2(M[k][k])
        for i in range(k + 1, NS):
            cur = cabs2(M[i][k])
            if cur > best:
                best = cur
                piv = i
        if sqrt(best) <= pivot_tol:
            return 0
        if piv != k:
            for j in range(NS):
                tmp = M[k][j]; M[k][j] = M[piv][j]; M[piv][j] = tmp
            tmp = rhs[k]; rhs[k] = rhs[piv]; rhs[piv] = tmp
        for i in range(k + 1, NS):
            f = M[i][k] / M[k][k]
            if f != 0:
                for j in range(k, NS):
                    M[i][j] = M[i][j] - f * M[k][j]
                rhs[i] = rhs[i] - f * rhs[k]
    for k in range(NS - 1, -1, -1):
        tmp = rhs[k]
        for j in range(k + 1, NS):
            tmp = tmp - M[k][j] * out[j]
        out[k] = tmp / M[k][k]

    # hermitize
    for a in range(3):
        out[4 * a] = out[4 * a].real
        for b in range(a + 1, 3):
            tmp = 0.5 * (out[3 * a + b] + out[3 * b + a].conjugate())
            out[3 * a + b] = tmp
            out[3 * b + a] = tmp.conjugate()
    return 1


def solve_lambda_batch(Delta, delta, double omega_p, double omega_c,
                       double Gamma31, double Gamma32, double gamma21,
                       double gamma31, double gamma32, double pivot_tol=1e-14):
    """Steady states for arrays of (Delta, delta); returns (rho[N,3,3], ok[N])."""
    cdef cnp.ndarray[cnp.float64_t, ndim=1] D = np.ascontiguousarray(Delta, dtype=np.float64).ravel()
    cdef cnp.ndarray[cnp.float64_t, ndim=1] d = np.ascontiguousarray(delta, dtype=np.float64).ravel()
    if D.shape[0] != d.shape[0]:
        raise ValueError("Delta and delta must have the same length")
    cdef Py_ssize_t n = D.shape[0]
    cdef cnp.ndarray[cnp.complex128_t, ndim=2] rho = np.zeros((n, NS), dtype=np.complex128)
    cdef cnp.ndarray[cnp.uint8_t, ndim=1] ok = np.zeros(n, dtype=np.uint8)
    cdef double complex[:, ::1] rv = rho
    cdef cnp.uint8_t[::1] okv = ok
    cdef const double[::1] Dv = D
    cdef const double[::1] dv = d
    cdef Py_ssize_t i
    with nogil:
        for i in range(n):
            okv[i] = _solve_one(Dv[i], dv[i], omega_p, omega_c, Gamma31, Gamma32,
                                gamma21, gamma31, gamma32, pivot_tol, &rv[i, 0])
    return rho.reshape(n, 3, 3), ok.astype(bool)
