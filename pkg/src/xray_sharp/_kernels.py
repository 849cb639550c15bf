"""Hot loops of the fiberwise transforms.

Each kernel exists twice: a numba version (explicit loops, parallel over
frequency fibers) and a numpy version (chunked broadcasting). The public
names at the bottom of the module point at whichever backend
:mod:`xray_sharp._accel` selected. Both variants are importable directly so
that the benchmark and the tests can compare them.

Shapes used throughout: ``M`` frequency fibers, ``I`` time nodes, ``J``
parameter nodes.
"""

from __future__ import annotations

import numpy as np

from ._accel import USE_NUMBA, HAVE_NUMBA

# Complex entries per chunk in the numpy fallbacks (about 64 MB).
_CHUNK_ENTRIES = 4_000_000


def _chunk_rows(per_row: int) -> int:
    return max(1, _CHUNK_ENTRIES // max(per_row, 1))


# ----------------------------------------------------------------------------
# numpy variants
# ----------------------------------------------------------------------------


def contract_t_numpy(phase, t, amp, F, sign):
    """out[m, j] = sum_i amp[i] exp(sign*1j*t[i]*phase[m, j]) F[m, i]."""
    M, J = phase.shape
    out = np.empty((M, J), dtype=np.complex128)
    step = _chunk_rows(J * t.size)
    for lo in range(0, M, step):
        ph = phase[lo : lo + step]
        E = np.exp((sign * 1j) * ph[:, None, :] * t[None, :, None])
        out[lo : lo + step] = np.einsum("mij,mi->mj", E, amp[None, :] * F[lo : lo + step])
    return out


def contract_s_numpy(phase, t, amp, G, sign):
    """out[m, i] = sum_j amp[j] exp(sign*1j*t[i]*phase[m, j]) G[m, j]."""
    M, J = phase.shape
    out = np.empty((M, t.size), dtype=np.complex128)
    step = _chunk_rows(J * t.size)
    for lo in range(0, M, step):
        ph = phase[lo : lo + step]
        E = np.exp((sign * 1j) * ph[:, None, :] * t[None, :, None])
        out[lo : lo + step] = np.einsum("mij,mj->mi", E, amp[None, :] * G[lo : lo + step])
    return out


def contract_s_general_numpy(phase, t, A, G, sign):
    """out[m, i] = sum_j A[m, i, j] exp(sign*1j*t[i]*phase[m, j]) G[m, j]."""
    E = np.exp((sign * 1j) * phase[:, None, :] * t[None, :, None])
    return np.einsum("mij,mij,mj->mi", A, E, G)


def fiber_top_sv_numpy(phase, t, A):
    """Largest singular value of A[m] * exp(-1j t_i phase[m, j]) for each m."""
    E = np.exp(-1j * phase[:, None, :] * t[None, :, None])
    Mat = A * E
    I, J = Mat.shape[1:]
    if I <= J:
        gram = Mat @ np.conj(np.swapaxes(Mat, 1, 2))
    else:
        gram = np.conj(np.swapaxes(Mat, 1, 2)) @ Mat
    ev = np.linalg.eigvalsh(gram)[:, -1]
    return np.sqrt(np.maximum(ev, 0.0))


def plane_wave_sum_numpy(points, xi, coef):
    """out[p] = sum_m coef[m] exp(1j points[p] . xi[m])."""
    P = points.shape[0]
    out = np.empty(P, dtype=np.complex128)
    step = _chunk_rows(xi.shape[0])
    for lo in range(0, P, step):
        arg = points[lo : lo + step] @ xi.T
        out[lo : lo + step] = np.exp(1j * arg) @ coef
    return out


def tau_spectrum_numpy(phase, t, tau, A, G):
    """out[m, l] = sum_{i,j} A[m, l, i, j] exp(-1j t_i (tau[m, l] + phase[m, j])) G[m, j].

    ``A`` already carries the quadrature weights.
    """
    arg = tau[:, :, None, None] + phase[:, None, None, :]
    E = np.exp(-1j * t[None, None, :, None] * arg)
    return np.einsum("mlij,mlij,mj->ml", A, E, G)


# ----------------------------------------------------------------------------
# numba variants
# ----------------------------------------------------------------------------

if HAVE_NUMBA:
    import numba
    from numba import prange

    @numba.njit(parallel=True, cache=True)
    def contract_t_numba(phase, t, amp, F, sign):
        M, J = phase.shape
        I = t.shape[0]
        out = np.zeros((M, J), dtype=np.complex128)
        for m in prange(M):
            for j in range(J):
                ph = sign * phase[m, j]
                acc = 0.0 + 0.0j
                for i in range(I):
                    a = t[i] * ph
                    acc += amp[i] * F[m, i] * complex(np.cos(a), np.sin(a))
                out[m, j] = acc
        return out

    @numba.njit(parallel=True, cache=True)
    def contract_s_numba(phase, t, amp, G, sign):
        M, J = phase.shape
        I = t.shape[0]
        out = np.zeros((M, I), dtype=np.complex128)
        for m in prange(M):
            for i in range(I):
                ti = sign * t[i]
                acc = 0.0 + 0.0j
                for j in range(J):
                    a = ti * phase[m, j]
                    acc += amp[j] * G[m, j] * complex(np.cos(a), np.sin(a))
                out[m, i] = acc
        return out

    @numba.njit(parallel=True, cache=True)
    def contract_s_general_numba(phase, t, A, G, sign):
        M, J = phase.shape
        I = t.shape[0]
        out = np.zeros((M, I), dtype=np.complex128)
        for m in prange(M):
            for i in range(I):
                ti = sign * t[i]
                acc = 0.0 + 0.0j
                for j in range(J):
                    a = ti * phase[m, j]
                    acc += A[m, i, j] * G[m, j] * complex(np.cos(a), np.sin(a))
                out[m, i] = acc
        return out

    @numba.njit(parallel=True, cache=True)
    def fiber_top_sv_numba(phase, t, A):
        M, J = phase.shape
        I = t.shape[0]
        out = np.zeros(M)
        for m in prange(M):
            Mat = np.empty((I, J), dtype=np.complex128)
            for i in range(I):
                for j in range(J):
                    a = -t[i] * phase[m, j]
                    Mat[i, j] = A[m, i, j] * complex(np.cos(a), np.sin(a))
            if I <= J:
                gram = Mat @ np.conj(Mat.T)
            else:
                gram = np.conj(Mat.T) @ Mat
            ev = np.linalg.eigvalsh(gram)
            out[m] = np.sqrt(max(ev[-1], 0.0))
        return out

    @numba.njit(parallel=True, cache=True)
    def plane_wave_sum_numba(points, xi, coef):
        P, d = points.shape
        M = xi.shape[0]
        out = np.zeros(P, dtype=np.complex128)
        for p in prange(P):
            acc = 0.0 + 0.0j
            for m in range(M):
                a = 0.0
                for c in range(d):
                    a += points[p, c] * xi[m, c]
                acc += coef[m] * complex(np.cos(a), np.sin(a))
            out[p] = acc
        return out

    @numba.njit(parallel=True, cache=True)
    def tau_spectrum_numba(phase, t, tau, A, G):
        M, L, I, J = A.shape
        out = np.zeros((M, L), dtype=np.complex128)
        for m in prange(M):
            for l in range(L):
                acc = 0.0 + 0.0j
                for i in range(I):
                    for j in range(J):
                        a = -t[i] * (tau[m, l] + phase[m, j])
                        acc += A[m, l, i, j] * G[m, j] * complex(np.cos(a), np.sin(a))
                out[m, l] = acc
        return out


def _pick(name):
    if USE_NUMBA:
        return globals()[name + "_numba"]
    return globals()[name + "_numpy"]


KERNEL_NAMES = (
    "contract_t",
    "contract_s",
    "contract_s_general",
    "fiber_top_sv",
    "plane_wave_sum",
    "tau_spectrum",
)

contract_t = _pick("contract_t")
contract_s = _pick("contract_s")
contract_s_general = _pick("contract_s_general")
fiber_top_sv = _pick("fiber_top_sv")
plane_wave_sum = _pick("plane_wave_sum")
tau_spectrum = _pick("tau_spectrum")
