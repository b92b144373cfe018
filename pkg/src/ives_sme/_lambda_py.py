"""NumPy implementation of the batched three-level steady-state solver."""
from __future__ import annotations

import numpy as np

_A, _B = np.divmod(np.arange(9), 3)
_TWO_A = (_A == 2).astype(float)
_TWO_B = (_B == 2).astype(float)


def _build(Delta, delta, wp, wc, G31, G32, g21, g31, g32):
    """Scaled 9x9 generators with the trace row in place of row 0; all args are (n,) arrays."""
    n = Delta.shape[0]
    H = np.zeros((n, 3, 3))
    H[:, 0, 2] = H[:, 2, 0] = -0.5 * wp
    H[:, 1, 2] = H[:, 2, 1] = -0.5 * wc
    H[:, 1, 1] = -delta
    H[:, 2, 2] = -Delta
    eye = np.eye(3)
    # row-major vec: vec(H rho - rho H) = (H (x) I - I (x) H^T) vec(rho)
    comm = np.einsum("nac,bd->nabcd", H, eye) - np.einsum("ac,ndb->nabcd", eye, H)
    M = -1j * comm.reshape(n, 9, 9)
    deph = np.zeros((n, 3, 3))
    deph[:, 0, 1] = deph[:, 1, 0] = g21
    deph[:, 0, 2] = deph[:, 2, 0] = g31
    deph[:, 1, 2] = deph[:, 2, 1] = g32
    loss = 0.5 * (G31 + G32)[:, None] * (_TWO_A + _TWO_B) + deph[:, _A, _B]
    M[:, np.arange(9), np.arange(9)] -= loss
    M[:, 4, 8] += G32
    M[:, 0, :] = 0.0
    M[:, 0, [0, 4, 8]] = 1.0
    return M


def solve_lambda_batch(Delta, delta, omega_p, omega_c, Gamma31, Gamma32,
                       gamma21, gamma31, gamma32, pivot_tol=1e-14):
    """Steady states for arrays of (Delta, delta); returns (rho[N,3,3], ok[N])."""
    Delta = np.ascontiguousarray(Delta, dtype=float).ravel()
    delta = np.ascontiguousarray(delta, dtype=float).ravel()
    if Delta.shape != delta.shape:
        raise ValueError("Delta and delta must have the same length")
    n = Delta.shape[0]
    rates = np.array([omega_p, omega_c, Gamma31, Gamma32, gamma21, gamma31, gamma32], dtype=float)
    scale = np.maximum(np.maximum(np.abs(Delta), np.abs(delta)), rates.max())
    ok = scale > 0
    safe = np.where(ok, scale, 1.0)
    scaled = rates[:, None] / safe[None, :]
    M = _build(Delta / safe, delta / safe, *scaled)
    rhs = np.zeros((n, 9), dtype=complex)
    rhs[:, 0] = 1.0
    rho = np.zeros((n, 9), dtype=complex)
    try:
        rho[ok] = np.linalg.solve(M[ok], rhs[ok][..., None])[..., 0]
    except np.linalg.LinAlgError:
        for i in np.flatnonzero(ok):
            try:
                rho[i] = np.linalg.solve(M[i], rhs[i])
            except np.linalg.LinAlgError:
                ok[i] = False
    ok &= np.all(np.isfinite(rho), axis=1)
    # a vanishing pivot leaves round-off garbage rather than an exception
    ok &= np.abs(rho[:, [0, 4, 8]].real.sum(axis=1) - 1.0) < 1e-9
    rho[~ok] = 0.0
    rho = rho.reshape(n, 3, 3)
    rho = 0.5 * (rho + np.conj(np.swapaxes(rho, 1, 2)))
    return rho, ok
