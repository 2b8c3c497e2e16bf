"""Dense matrix core: row/column norms, zero patterns, operator norms."""
import math
import struct
import warnings
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from . import _kernels
from ._util import ParameterError
from .dist import stream


class NormNotConverged(RuntimeWarning):
    pass


class NormEstimate(NamedTuple):
    value: float
    converged: bool
    iterations: int


class BilinearBound(NamedTuple):
    lhs: float
    rhs: float
    holds: bool


def as_matrix(A):
    A = np.asarray(A, dtype=np.float64)
    if A.ndim != 2 or A.shape[0] < 1 or A.shape[1] < 1:
        raise ParameterError(f"expected a nonempty 2-d matrix, got shape {A.shape}")
    return A


def row_l2_norms(A):
    A = as_matrix(A)
    return np.sqrt(np.einsum("ij,ij->i", A, A))


def col_l2_norms(A):
    A = as_matrix(A)
    return np.sqrt(np.einsum("ij,ij->j", A, A))


@dataclass(frozen=True)
class ZeroPattern:
    """Full rows, full columns and single entries to be replaced by zeros."""

    rows: frozenset = field(default_factory=frozenset)
    cols: frozenset = field(default_factory=frozenset)
    entries: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        object.__setattr__(self, "rows", frozenset(int(i) for i in self.rows))
        object.__setattr__(self, "cols", frozenset(int(j) for j in self.cols))
        object.__setattr__(
            self, "entries", frozenset((int(i), int(j)) for i, j in self.entries))

    def check_bounds(self, shape):
        m, n = shape
        if any(not 0 <= i < m for i in self.rows):
            raise ParameterError("row index out of bounds")
        if any(not 0 <= j < n for j in self.cols):
            raise ParameterError("column index out of bounds")
        if any(not (0 <= i < m and 0 <= j < n) for i, j in self.entries):
            raise ParameterError("entry index out of bounds")

    def to_dict(self):
        return {
            "rows": sorted(self.rows),
            "cols": sorted(self.cols),
            "entries": [list(e) for e in sorted(self.entries)],
        }

    @classmethod
    def from_dict(cls, d):
        return cls(d.get("rows", ()), d.get("cols", ()),
                   (tuple(e) for e in d.get("entries", ())))


def apply_zero_pattern(A, Z):
    """Return a copy of ``A`` with the rows, columns and entries of ``Z`` zeroed."""
    A = as_matrix(A)
    Z.check_bounds(A.shape)
    out = A.copy()
    if Z.rows:
        out[np.fromiter(Z.rows, dtype=np.intp), :] = 0.0
    if Z.cols:
        out[:, np.fromiter(Z.cols, dtype=np.intp)] = 0.0
    if Z.entries:
        ij = np.array(sorted(Z.entries), dtype=np.intp)
        out[ij[:, 0], ij[:, 1]] = 0.0
    return out


def power_iterate(matmat, rmatmat, n_cols, tol=1e-8, max_iters=10_000, restarts=3, seed=0):
    """Top singular value of an implicit operator by power iteration on ``A^T A``.

    ``matmat(X)`` must return ``A @ X`` and ``rmatmat(Y)`` ``A.T @ Y`` for
    blocks of column vectors. The ``restarts`` starting vectors are iterated
    independently (no orthogonalization), side by side in one block so each
    sweep costs one pass over the matrix. A restart stops once the relative
    change of its Rayleigh estimate ``|A x|**2`` drops below ``tol``.
    """
    if not tol > 0:
        raise ParameterError("tol must be positive")
    X = np.empty((n_cols, restarts))
    for r in range(restarts):
        x = stream(seed, r, "power-restart").standard_normal(n_cols)
        X[:, r] = x / np.linalg.norm(x)

    lam = np.zeros(restarts)
    prev = np.full(restarts, np.nan)
    done = np.zeros(restarts, dtype=bool)
    it = 0
    while it < max_iters and not done.all():
        it += 1
        act = np.flatnonzero(~done)
        Y = matmat(X[:, act])
        lam_act = np.einsum("ij,ij->j", Y, Y)
        lam[act] = lam_act
        rel = np.abs(lam_act - prev[act]) <= tol * lam_act
        Z = rmatmat(Y)
        znorm = np.linalg.norm(Z, axis=0)
        # A x = 0 means x lies in the kernel; the restart cannot improve
        dead = znorm == 0.0
        done[act[rel | dead]] = True
        prev[act] = lam_act
        live = ~dead
        X[:, act[live]] = Z[:, live] / znorm[live]
    return NormEstimate(float(np.sqrt(lam.max())), bool(done.all()), it)


def _pow2_scale(A):
    """Power of two near ``max |A_ij|``; dividing by it is exact and keeps squares finite."""
    amax = float(np.max(np.abs(A)))
    return math.ldexp(1.0, math.frexp(amax)[1]) if amax > 0 else 1.0


def operator_norm(A, tol=1e-8, max_iters=10_000, restarts=3, seed=0, full_output=False):
    """Spectral norm ``max |Ax|`` over unit ``x``.

    Power iteration with ``restarts`` seeded starting vectors, returning the
    largest estimate. All-zero rows and columns are dropped first, which leaves
    the norm unchanged. If any restart hits ``max_iters`` a
    :class:`NormNotConverged` warning is issued and the best estimate is still
    returned; ``full_output=True`` gives the :class:`NormEstimate` record with
    the convergence flag instead of a bare float.
    """
    A = as_matrix(A)
    nz = A != 0.0
    rows = np.flatnonzero(nz.any(axis=1))
    cols = np.flatnonzero(nz.any(axis=0))
    del nz
    if rows.size == 0:
        est = NormEstimate(0.0, True, 0)
        return est if full_output else est.value
    if rows.size < A.shape[0] or cols.size < A.shape[1]:
        A = A[np.ix_(rows, cols)]
    scale = _pow2_scale(A)
    if scale != 1.0:
        A = A / scale
    est = power_iterate(lambda X: A @ X, lambda Y: (Y.T @ A).T, A.shape[1],
                        tol=tol, max_iters=max_iters, restarts=restarts, seed=seed)
    est = est._replace(value=est.value * scale)
    if not est.converged:
        warnings.warn(f"power iteration stopped after {est.iterations} sweeps "
                      f"without reaching tol={tol}", NormNotConverged, stacklevel=2)
    return est if full_output else est.value


def operator_norm_oracle(A, max_sweeps=100, rel_tol=1e-12):
    """Spectral norm via cyclic Jacobi rotations on ``A^T A``.

    Independent of :func:`operator_norm`; meant for checking it on matrices
    with at most 64 columns. Sweeps stop once the off-diagonal Frobenius mass
    falls below ``rel_tol`` times the Frobenius norm of ``A^T A``.
    """
    A = as_matrix(A)
    if A.shape[1] > 64 or A.shape[0] > 64:
        raise ParameterError("operator_norm_oracle is limited to n <= 64")
    scale = _pow2_scale(A) if A.size else 1.0
    B = A / scale
    S = B.T @ B
    S = 0.5 * (S + S.T)
    eig, _, _ = _kernels.jacobi_eigvals(S, rel_tol, max_sweeps)
    return float(np.sqrt(max(eig.max(), 0.0))) * scale


def bilinear_bound_check(Q, u, v):
    """Evaluate ``sum Q_ij u_i v_j <= max_j |col_j(Q)| * sqrt(max_i nnz(row_i(Q)))``.

    The inequality is deterministic for unit ``u``, ``v``; ``holds`` allows
    1e-9 of rounding slack.
    """
    Q = as_matrix(Q)
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != (Q.shape[0],) or v.shape != (Q.shape[1],):
        raise ParameterError("u and v must match the matrix dimensions")
    if abs(np.linalg.norm(u) - 1.0) > 1e-12 or abs(np.linalg.norm(v) - 1.0) > 1e-12:
        raise ParameterError("u and v must be unit vectors")
    lhs = float(u @ Q @ v)
    rhs = float(col_l2_norms(Q).max() * np.sqrt(np.count_nonzero(Q, axis=1).max()))
    return BilinearBound(lhs, rhs, lhs <= rhs + 1e-9)


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

def to_bytes(A):
    """Header of two little-endian uint64 dimensions, then row-major float64 LE."""
    A = as_matrix(A)
    return struct.pack("<QQ", *A.shape) + np.ascontiguousarray(A, dtype="<f8").tobytes()


def from_bytes(buf):
    if len(buf) < 16:
        raise ParameterError("truncated matrix header")
    m, n = struct.unpack_from("<QQ", buf, 0)
    if len(buf) != 16 + 8 * m * n:
        raise ParameterError(f"payload size does not match {m}x{n}")
    return np.frombuffer(buf, dtype="<f8", offset=16).reshape(m, n).astype(np.float64)


def save_matrix(path, A):
    path = str(path)
    if path.endswith(".csv"):
        np.savetxt(path, as_matrix(A), delimiter=",", fmt="%.17g")
    else:
        with open(path, "wb") as f:
            f.write(to_bytes(A))


def load_matrix(path):
    path = str(path)
    if path.endswith(".csv"):
        return as_matrix(np.loadtxt(path, delimiter=",", ndmin=2))
    with open(path, "rb") as f:
        return from_bytes(f.read())
