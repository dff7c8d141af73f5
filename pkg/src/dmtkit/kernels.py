"""Hot inner loops of the Monte-Carlo engine.

Each kernel exists twice: a ``numba`` version (explicit loops, compiled with
``nogil`` so shard threads really run concurrently) and a vectorised numpy
version.  The public names at the bottom dispatch to one or the other
according to :data:`dmtkit._accel.USE_NUMBA`.

Both versions compute the same quantity but may differ in the last few ulps
(LAPACK vs. hand-written Cholesky), so determinism guarantees hold per
backend, not across backends.
"""

import math

import numpy as np

from ._accel import USE_NUMBA, njit

__all__ = [
    "logdet_capacity",
    "logdet_capacity_numba",
    "logdet_capacity_numpy",
    "capacity_from_eigs",
    "capacity_from_eigs_numba",
    "capacity_from_eigs_numpy",
    "gram_eigvals",
]


# --------------------------------------------------------------------------
# ln det(I + scale * H H^+) over a stack of channel matrices
# --------------------------------------------------------------------------
@njit(cache=True, nogil=True)
def _logdet_capacity_kernel(H, scale, out):
    T, n, m = H.shape
    p = min(n, m)
    A = np.empty((p, p), dtype=np.complex128)
    L = np.zeros((p, p), dtype=np.complex128)
    for t in range(T):
        # Gram matrix of the smaller side: det(I_n + cHH^+) = det(I_m + cH^+H).
        for i in range(p):
            for j in range(i + 1):
                acc = 0j
                if n <= m:
                    for k in range(m):
                        acc += H[t, i, k] * H[t, j, k].conjugate()
                else:
                    for k in range(n):
                        acc += H[t, k, i].conjugate() * H[t, k, j]
                A[i, j] = scale * acc
            A[i, i] += 1.0
        # Cholesky on the lower triangle; ln det = 2 * sum ln L_jj.
        total = 0.0
        for j in range(p):
            s = A[j, j].real
            for k in range(j):
                s -= L[j, k].real * L[j, k].real + L[j, k].imag * L[j, k].imag
            d = math.sqrt(s)
            L[j, j] = d
            total += math.log(s)
            for i in range(j + 1, p):
                z = A[i, j]
                for k in range(j):
                    z -= L[i, k] * L[j, k].conjugate()
                L[i, j] = z / d
        out[t] = total


def logdet_capacity_numba(H, scale):
    H = np.ascontiguousarray(H, dtype=np.complex128)
    out = np.empty(H.shape[0], dtype=np.float64)
    _logdet_capacity_kernel(H, float(scale), out)
    return out


def logdet_capacity_numpy(H, scale):
    H = np.asarray(H, dtype=np.complex128)
    n, m = H.shape[-2:]
    Hh = np.conj(np.swapaxes(H, -1, -2))
    G = H @ Hh if n <= m else Hh @ H
    p = min(n, m)
    A = np.eye(p) + scale * G
    L = np.linalg.cholesky(A)
    diag = np.diagonal(L, axis1=-2, axis2=-1).real
    return 2.0 * np.log(diag).sum(axis=-1)


# --------------------------------------------------------------------------
# Common-random-number sweeps: capacity at many SNRs from one eigen-decomposition
# --------------------------------------------------------------------------
@njit(cache=True, nogil=True)
def _capacity_from_eigs_kernel(eigs, scales, out):
    T, p = eigs.shape
    # One log per row instead of one per eigenvalue; the running product is
    # flushed before it can overflow.  Small totals go back to log1p, where
    # forming 1 + x would throw away digits.
    for g in range(scales.shape[0]):
        s = scales[g]
        for t in range(T):
            acc = 0.0
            prod = 1.0
            for k in range(p):
                prod *= 1.0 + s * eigs[t, k]
                if prod > 1e250:
                    acc += math.log(prod)
                    prod = 1.0
            if acc == 0.0 and prod < 2.0:
                for k in range(p):
                    acc += math.log1p(s * eigs[t, k])
            else:
                acc += math.log(prod)
            out[g, t] = acc


def capacity_from_eigs_numba(eigs, scales):
    eigs = np.ascontiguousarray(eigs, dtype=np.float64)
    scales = np.ascontiguousarray(scales, dtype=np.float64)
    out = np.empty((scales.shape[0], eigs.shape[0]), dtype=np.float64)
    _capacity_from_eigs_kernel(eigs, scales, out)
    return out


def capacity_from_eigs_numpy(eigs, scales):
    eigs = np.asarray(eigs, dtype=np.float64)
    scales = np.asarray(scales, dtype=np.float64)
    out = np.empty((scales.shape[0], eigs.shape[0]), dtype=np.float64)
    for g, s in enumerate(scales):
        out[g] = np.log1p(s * eigs).sum(axis=-1)
    return out


def gram_eigvals(H):
    """Eigenvalues of the smaller Gram matrix of each channel in the stack.

    Negative round-off is clipped to zero.  LAPACK through numpy is already
    a tight loop here, so there is no numba twin.
    """
    H = np.asarray(H, dtype=np.complex128)
    n, m = H.shape[-2:]
    Hh = np.conj(np.swapaxes(H, -1, -2))
    G = H @ Hh if n <= m else Hh @ H
    return np.clip(np.linalg.eigvalsh(G), 0.0, None)


if USE_NUMBA:
    logdet_capacity = logdet_capacity_numba
    capacity_from_eigs = capacity_from_eigs_numba
else:
    logdet_capacity = logdet_capacity_numpy
    capacity_from_eigs = capacity_from_eigs_numpy
