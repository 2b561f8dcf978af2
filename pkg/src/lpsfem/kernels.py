"""Hot per-cell contractions with a compiled path and a pure-numpy path.

The backend is chosen once at import from ``LPS_KERNELS`` (``numba`` or
``numpy``; default ``numba`` when it imports). ``LPS_THREADS`` caps numba's
worker threads. Either backend is deterministic run to run; the two agree to
rounding, not bitwise.
"""

import logging
import os

import numpy as np

log = logging.getLogger(__name__)

_requested = os.environ.get("LPS_KERNELS", "numba").strip().lower()
if _requested not in ("numba", "numpy"):
    log.warning("LPS_KERNELS=%r not recognised, using numpy", _requested)
    _requested = "numpy"

_njit = None
if _requested == "numba":
    try:
        import numba
        from numba import njit, prange
        _njit = njit
        # avoid the TBB version warning; omp/workqueue are always usable
        numba.config.THREADING_LAYER_PRIORITY = ["omp", "workqueue", "tbb"]
        threads = os.environ.get("LPS_THREADS")
        if threads:
            numba.set_num_threads(max(1, min(int(threads), numba.config.NUMBA_NUM_THREADS)))
    except ImportError:  # pragma: no cover - numba is a declared dependency
        log.warning("numba unavailable, falling back to numpy kernels")

BACKEND = "numba" if _njit is not None else "numpy"


# -- numpy reference implementations --------------------------------------------------

def weighted_gram_numpy(w, A, B):
    """``out[c, i, j] = sum_q w[c, q] A[c, q, i, :] . B[c, q, j, :]``."""
    nc, nq, na, d = A.shape
    Aw = A * w[:, :, None, None]
    Am = np.ascontiguousarray(np.transpose(Aw, (0, 2, 1, 3))).reshape(nc, na, nq * d)
    Bm = np.ascontiguousarray(np.transpose(B, (0, 1, 3, 2))).reshape(nc, nq * d, -1)
    return Am @ Bm


def weighted_load_numpy(w, A, f):
    """``out[c, i] = sum_q w[c, q] A[c, q, i, :] . f[c, q, :]``."""
    return np.einsum("cq,cqid,cqd->ci", w, A, f)


def piola_numpy(M, vhat, jhat, Binv):
    """Apply ``v = M vhat`` and ``J = M jhat Binv`` per cell; ``vhat`` is per cell."""
    v = np.einsum("cij,cqbj->cqbi", M, vhat)
    J = np.einsum("cij,cqbjk,ckl->cqbil", M, jhat, Binv, optimize=True)
    return v, J


# -- compiled implementations ---------------------------------------------------------

if _njit is not None:

    @_njit(parallel=True, cache=True)
    def _gram_nb(w, A, B):
        # rank-1 updates per (q, k) keep the innermost loop contiguous
        nc, nq, na, d = A.shape
        nb = B.shape[2]
        out = np.zeros((nc, na, nb))
        for c in prange(nc):
            acc = np.zeros((na, nb))
            bk = np.empty(nb)
            for q in range(nq):
                wq = w[c, q]
                for k in range(d):
                    for j in range(nb):
                        bk[j] = B[c, q, j, k]
                    for i in range(na):
                        a = wq * A[c, q, i, k]
                        for j in range(nb):
                            acc[i, j] += a * bk[j]
            out[c] = acc
        return out

    @_njit(parallel=True, cache=True)
    def _load_nb(w, A, f):
        nc, nq, na, d = A.shape
        out = np.zeros((nc, na))
        for c in prange(nc):
            for i in range(na):
                s = 0.0
                for q in range(nq):
                    t = 0.0
                    for k in range(d):
                        t += A[c, q, i, k] * f[c, q, k]
                    s += w[c, q] * t
                out[c, i] = s
        return out

    @_njit(parallel=True, cache=True)
    def _piola_nb(M, vhat, jhat, Binv):
        nc, nq, nb, d = vhat.shape
        v = np.zeros((nc, nq, nb, d))
        J = np.zeros((nc, nq, nb, d, d))
        for c in prange(nc):
            tmp = np.zeros((d, d))
            for q in range(nq):
                for b in range(nb):
                    for i in range(d):
                        s = 0.0
                        for j in range(d):
                            s += M[c, i, j] * vhat[c, q, b, j]
                        v[c, q, b, i] = s
                        for k in range(d):
                            s = 0.0
                            for j in range(d):
                                s += M[c, i, j] * jhat[c, q, b, j, k]
                            tmp[i, k] = s
                    for i in range(d):
                        for l in range(d):
                            s = 0.0
                            for k in range(d):
                                s += tmp[i, k] * Binv[c, k, l]
                            J[c, q, b, i, l] = s
        return v, J


def _c(a):
    return np.ascontiguousarray(a, dtype=np.float64)


def weighted_gram(w, A, B):
    if BACKEND == "numba":
        return _gram_nb(_c(w), _c(A), _c(B))
    return weighted_gram_numpy(w, A, B)


def weighted_load(w, A, f):
    if BACKEND == "numba":
        return _load_nb(_c(w), _c(A), _c(f))
    return weighted_load_numpy(w, A, f)


def piola(M, vhat, jhat, Binv):
    """Per-cell Piola push-forward of values and Jacobians (tabulation broadcast to cells)."""
    nc = M.shape[0]
    if vhat.ndim == 3:
        vhat = np.broadcast_to(vhat, (nc,) + vhat.shape)
        jhat = np.broadcast_to(jhat, (nc,) + jhat.shape)
    if BACKEND == "numba":
        return _piola_nb(_c(M), _c(vhat), _c(jhat), _c(Binv))
    return piola_numpy(M, vhat, jhat, Binv)


def set_threads(n):
    """Cap the compiled kernels' worker threads (no effect on the numpy backend)."""
    if BACKEND == "numba":
        numba.set_num_threads(max(1, min(int(n), numba.config.NUMBA_NUM_THREADS)))
