"""Hot inner loops, compiled with numba when available.

Every kernel has a pure-numpy twin with the same signature. The active
implementation is chosen once at import time: numba is used unless it is
missing or ``NORMREG_DISABLE_NUMBA`` is set to a truthy value. Both variants
stay importable (``*_numba`` / ``*_numpy``) so tests and the benchmark can
compare them directly.
"""
import os

import numpy as np

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None


def _flag(name):
    return os.environ.get(name, "").strip().lower() in ("1", "true", "yes", "on")


HAVE_NUMBA = numba is not None
USE_NUMBA = HAVE_NUMBA and not _flag("NORMREG_DISABLE_NUMBA")


def _njit(fn):
    if not HAVE_NUMBA:
        return fn
    return numba.njit(cache=True, nogil=True)(fn)


# ---------------------------------------------------------------------------
# cyclic Jacobi on a symmetric matrix
# ---------------------------------------------------------------------------

def _jacobi_eigvals_py(S, rel_tol, max_sweeps):
    n = S.shape[0]
    scale = 0.0
    for i in range(n):
        for j in range(n):
            scale += S[i, j] * S[i, j]
    scale = np.sqrt(scale)
    sweeps = 0
    if scale == 0.0:
        return np.zeros(n), 0, True
    while sweeps < max_sweeps:
        off = 0.0
        for i in range(n):
            for j in range(n):
                if i != j:
                    off += S[i, j] * S[i, j]
        if np.sqrt(off) < rel_tol * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = S[p, q]
                if apq == 0.0:
                    continue
                diff = S[q, q] - S[p, p]
                if abs(diff) + 100.0 * abs(apq) == abs(diff):
                    t = apq / diff          # small angle; avoids squaring a huge theta
                else:
                    theta = diff / (2.0 * apq)
                    t = 1.0 / (abs(theta) + np.sqrt(theta * theta + 1.0))
                    if theta < 0.0:
                        t = -t
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                for r in range(n):
                    srp = S[r, p]
                    srq = S[r, q]
                    S[r, p] = c * srp - s * srq
                    S[r, q] = s * srp + c * srq
                for r in range(n):
                    spr = S[p, r]
                    sqr = S[q, r]
                    S[p, r] = c * spr - s * sqr
                    S[q, r] = s * spr + c * sqr
                S[p, q] = 0.0
                S[q, p] = 0.0
        sweeps += 1
    off = 0.0
    for i in range(n):
        for j in range(n):
            if i != j:
                off += S[i, j] * S[i, j]
    converged = np.sqrt(off) < rel_tol * scale
    out = np.empty(n)
    for i in range(n):
        out[i] = S[i, i]
    return out, sweeps, converged


jacobi_eigvals_numba = _njit(_jacobi_eigvals_py)


def jacobi_eigvals_numpy(S, rel_tol, max_sweeps):
    n = S.shape[0]
    scale = np.linalg.norm(S)
    if scale == 0.0:
        return np.zeros(n), 0, True
    offmask = ~np.eye(n, dtype=bool)

    def off_norm():
        return np.sqrt(np.sum(S[offmask] ** 2))

    sweeps = 0
    while sweeps < max_sweeps and off_norm() >= rel_tol * scale:
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = S[p, q]
                if apq == 0.0:
                    continue
                diff = S[q, q] - S[p, p]
                if abs(diff) + 100.0 * abs(apq) == abs(diff):
                    t = apq / diff
                else:
                    theta = diff / (2.0 * apq)
                    t = np.copysign(1.0 / (abs(theta) + np.sqrt(theta * theta + 1.0)), theta)
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                cp, cq = S[:, p].copy(), S[:, q].copy()
                S[:, p] = c * cp - s * cq
                S[:, q] = s * cp + c * cq
                rp, rq = S[p, :].copy(), S[q, :].copy()
                S[p, :] = c * rp - s * rq
                S[q, :] = s * rp + c * rq
                S[p, q] = S[q, p] = 0.0
        sweeps += 1
    return np.diag(S).copy(), sweeps, bool(off_norm() < rel_tol * scale)


# ---------------------------------------------------------------------------
# coordinate-list block products
# ---------------------------------------------------------------------------

def _coo_matmat_py(rows, cols, vals, X, n_out):
    # Y[rows[k], :] += vals[k] * X[cols[k], :]
    b = X.shape[1]
    Y = np.zeros((n_out, b))
    for k in range(rows.shape[0]):
        r = rows[k]
        c = cols[k]
        v = vals[k]
        for m in range(b):
            Y[r, m] += v * X[c, m]
    return Y


coo_matmat_numba = _njit(_coo_matmat_py)


def coo_matmat_numpy(rows, cols, vals, X, n_out):
    Y = np.empty((n_out, X.shape[1]))
    for m in range(X.shape[1]):
        Y[:, m] = np.bincount(rows, weights=vals * X[cols, m], minlength=n_out)
    return Y


# ---------------------------------------------------------------------------
# exhaustive e(S, T) table over all row/column subsets
# ---------------------------------------------------------------------------

def _subset_edge_table_py(B):
    # E[s, t] = number of nonzeros of B inside rows(s) x cols(t), s/t bitmasks
    n = B.shape[0]
    m = 1 << n
    colsum = np.zeros((m, n), dtype=np.int64)
    for s in range(1, m):
        low = s & (-s)
        i = 0
        while (1 << i) != low:
            i += 1
        prev = s ^ low
        for j in range(n):
            colsum[s, j] = colsum[prev, j] + (1 if B[i, j] != 0 else 0)
    E = np.zeros((m, m), dtype=np.int64)
    for s in range(1, m):
        for t in range(1, m):
            low = t & (-t)
            j = 0
            while (1 << j) != low:
                j += 1
            E[s, t] = E[s, t ^ low] + colsum[s, j]
    return E


subset_edge_table_numba = _njit(_subset_edge_table_py)


def subset_bits(n):
    """(2**n, n) 0/1 matrix whose row ``s`` lists the members of bitmask ``s``."""
    masks = np.arange(1 << n, dtype=np.int64)
    return ((masks[:, None] >> np.arange(n)) & 1).astype(np.int64)


def subset_edge_table_numpy(B):
    n = B.shape[0]
    bits = subset_bits(n)
    nz = (B != 0).astype(np.int64)
    return bits @ nz @ bits.T


if USE_NUMBA:
    jacobi_eigvals = jacobi_eigvals_numba
    coo_matmat = coo_matmat_numba
    subset_edge_table = subset_edge_table_numba
else:
    jacobi_eigvals = jacobi_eigvals_numpy
    coo_matmat = coo_matmat_numpy
    subset_edge_table = subset_edge_table_numpy

BACKEND = "numba" if USE_NUMBA else "numpy"
