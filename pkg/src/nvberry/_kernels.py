"""Time-stepping kernels for 3-level Schrodinger propagation.

Two interchangeable implementations of each kernel:

* ``*_numba``: sequential loops compiled with numba (the step exponential is
  a scaled Taylor series, accurate to rounding for any step);
* ``*_numpy``: batched per-step maps (stacked eigh / RK4 matrices) followed by
  a pairwise tree product.

``NVBERRY_DISABLE_NUMBA=1`` (or a missing numba) selects the numpy path for
the public names ``evolve_midpoint`` / ``evolve_rk4``.
"""
import os

import numpy as np

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

NUMBA_DISABLED = os.environ.get("NVBERRY_DISABLE_NUMBA", "").strip().lower() in ("1", "true", "yes", "on")
USE_NUMBA = numba is not None and not NUMBA_DISABLED


def _njit(fn):
    if numba is None:
        return fn
    return numba.njit(cache=True)(fn)


# --- numpy path ---------------------------------------------------------------


def step_unitaries(H, dt):
    """exp(-i H_k dt) for a stack of Hermitian matrices, via batched eigh."""
    w, V = np.linalg.eigh(H)
    return (V * np.exp(-1j * w * dt)[..., None, :]) @ V.conj().swapaxes(-1, -2)


def rk4_maps(H, dt):
    """One-step RK4 transfer matrices for i psi' = H psi.

    ``H`` holds 2N+1 samples at t, t + dt/2, t + dt, ... ; returns N maps.
    """
    A1 = -1j * H[0:-1:2]
    A2 = -1j * H[1::2]
    A3 = -1j * H[2::2]
    eye = np.eye(3, dtype=complex)
    K1 = A1
    K2 = A2 @ (eye + 0.5 * dt * K1)
    K3 = A2 @ (eye + 0.5 * dt * K2)
    K4 = A3 @ (eye + dt * K3)
    return eye + (dt / 6.0) * (K1 + 2 * K2 + 2 * K3 + K4)


def chain_product(M):
    """M[N-1] @ ... @ M[1] @ M[0] by pairwise reduction."""
    M = np.asarray(M)
    if M.shape[0] == 0:
        return np.eye(3, dtype=complex)
    while M.shape[0] > 1:
        if M.shape[0] % 2:
            M = np.concatenate([M, np.eye(3, dtype=complex)[None]], axis=0)
        M = M[1::2] @ M[0::2]
    return M[0]


def evolve_midpoint_numpy(H, dt, psi):
    return chain_product(step_unitaries(H, dt)) @ psi


def evolve_rk4_numpy(H, dt, psi):
    return chain_product(rk4_maps(H, dt)) @ psi


# --- numba path ---------------------------------------------------------------


TAYLOR_MAX_ORDER = 30


@_njit
def _matmul3_into(A, B, C):
    for i in range(3):
        for j in range(3):
            acc = 0j
            for k in range(3):
                acc += A[i, k] * B[k, j]
            C[i, j] = acc


@_njit
def _expm_step(h, dt, E, term, tmp):
    """E <- exp(-i h dt) for one 3x3 Hermitian h: Taylor series with scaling and squaring."""
    norm = 0.0
    for i in range(3):
        row = 0.0
        for j in range(3):
            row += abs(h[i, j])
        norm = max(norm, row)
    norm *= abs(dt)
    squarings = 0
    while norm > 0.25:
        norm *= 0.5
        squarings += 1
    scale = -1j * dt / 2.0**squarings
    for i in range(3):
        for j in range(3):
            E[i, j] = 1.0 if i == j else 0.0
            term[i, j] = E[i, j]
    for k in range(1, TAYLOR_MAX_ORDER + 1):
        _matmul3_into(term, h, tmp)
        size = 0.0
        for i in range(3):
            for j in range(3):
                term[i, j] = tmp[i, j] * scale / k
                E[i, j] += term[i, j]
                size += abs(term[i, j])
        if size < 1e-18:
            break
    for _ in range(squarings):
        _matmul3_into(E, E, tmp)
        E[:, :] = tmp


@_njit
def evolve_midpoint_numba(H, dt, psi):
    out = psi.copy()
    nxt = np.empty(3, dtype=np.complex128)
    E = np.empty((3, 3), dtype=np.complex128)
    term = np.empty((3, 3), dtype=np.complex128)
    tmp = np.empty((3, 3), dtype=np.complex128)
    for k in range(H.shape[0]):
        _expm_step(H[k], dt, E, term, tmp)
        for i in range(3):
            acc = 0j
            for j in range(3):
                acc += E[i, j] * out[j]
            nxt[i] = acc
        out[:] = nxt
    return out


@_njit
def _deriv(A, v, out):
    # out <- -i A v
    for i in range(3):
        acc = 0j
        for j in range(3):
            acc += A[i, j] * v[j]
        out[i] = -1j * acc


@_njit
def evolve_rk4_numba(H, dt, psi):
    out = psi.copy()
    k1 = np.empty(3, dtype=np.complex128)
    k2 = np.empty(3, dtype=np.complex128)
    k3 = np.empty(3, dtype=np.complex128)
    k4 = np.empty(3, dtype=np.complex128)
    v = np.empty(3, dtype=np.complex128)
    n = (H.shape[0] - 1) // 2
    for k in range(n):
        _deriv(H[2 * k], out, k1)
        for i in range(3):
            v[i] = out[i] + 0.5 * dt * k1[i]
        _deriv(H[2 * k + 1], v, k2)
        for i in range(3):
            v[i] = out[i] + 0.5 * dt * k2[i]
        _deriv(H[2 * k + 1], v, k3)
        for i in range(3):
            v[i] = out[i] + dt * k3[i]
        _deriv(H[2 * k + 2], v, k4)
        for i in range(3):
            out[i] += (dt / 6.0) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
    return out


if USE_NUMBA:
    evolve_midpoint = evolve_midpoint_numba
    evolve_rk4 = evolve_rk4_numba
else:
    evolve_midpoint = evolve_midpoint_numpy
    evolve_rk4 = evolve_rk4_numpy
