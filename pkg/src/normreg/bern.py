"""Sparse Bernoulli machinery: degree trimming, the weighted column cut and an
exhaustive check of the e(S, T) discrepancy conditions on tiny patterns."""
import math
import warnings
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from . import _kernels
from ._util import ParameterError
from .linalg import NormEstimate, NormNotConverged, ZeroPattern, power_iterate
from .trim import RegularizationReport


@dataclass
class SparsePattern:
    """Coordinate list of the nonzero positions of an n x n 0/1 (or signed) matrix."""

    n: int
    rows: np.ndarray
    cols: np.ndarray
    vals: Optional[np.ndarray] = None   # None means every stored entry equals 1
    p: float = 0.0
    signed: bool = False

    def __post_init__(self):
        self.n = int(self.n)
        self.rows = np.asarray(self.rows, dtype=np.int64).ravel()
        self.cols = np.asarray(self.cols, dtype=np.int64).ravel()
        if self.rows.shape != self.cols.shape:
            raise ParameterError("rows and cols must have the same length")
        if self.vals is not None:
            self.vals = np.asarray(self.vals, dtype=np.float64).ravel()
            if self.vals.shape != self.rows.shape:
                raise ParameterError("vals must match rows/cols")
        if self.rows.size:
            if (self.rows.min() < 0 or self.rows.max() >= self.n
                    or self.cols.min() < 0 or self.cols.max() >= self.n):
                raise ParameterError("nonzero position out of bounds")
            flat = self.rows * self.n + self.cols
            if np.unique(flat).size != flat.size:
                raise ParameterError("duplicate nonzero position")

    @property
    def nnz(self):
        return int(self.rows.size)

    def values(self):
        return np.ones(self.nnz) if self.vals is None else self.vals

    def row_degrees(self):
        return np.bincount(self.rows, minlength=self.n)

    def col_degrees(self):
        return np.bincount(self.cols, minlength=self.n)

    def densify(self, indicator=False):
        """Dense copy; ``indicator=True`` gives the 0/1 support instead of the values."""
        out = np.zeros((self.n, self.n))
        out[self.rows, self.cols] = 1.0 if indicator else self.values()
        return out

    def subset(self, keep):
        vals = None if self.vals is None else self.vals[keep]
        return SparsePattern(self.n, self.rows[keep], self.cols[keep], vals, self.p,
                             self.signed)

    @classmethod
    def from_dense(cls, M, p=0.0, signed=False):
        M = np.asarray(M, dtype=np.float64)
        if M.ndim != 2 or M.shape[0] != M.shape[1]:
            raise ParameterError("expected a square matrix")
        r, c = np.nonzero(M)
        vals = M[r, c]
        if not signed and np.all(vals == 1.0):
            vals = None
        return cls(M.shape[0], r, c, vals, p, signed)

    def to_text(self):
        lines = [f"{self.n} {self.p!r} {int(self.signed)}"]
        v = self.values()
        lines += [f"{i} {j} {x!r}" for i, j, x in zip(self.rows.tolist(), self.cols.tolist(),
                                                       v.tolist())]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text):
        lines = [ln for ln in text.splitlines() if ln.strip()]
        if not lines:
            raise ParameterError("empty pattern text")
        head = lines[0].split()
        if len(head) != 3:
            raise ParameterError("header must read 'n p signed'")
        n, p, signed = int(head[0]), float(head[1]), bool(int(head[2]))
        body = np.array([ln.split() for ln in lines[1:]], dtype=float).reshape(-1, 3)
        vals = body[:, 2]
        if not signed and np.all(vals == 1.0):
            vals = None
        return cls(n, body[:, 0].astype(np.int64), body[:, 1].astype(np.int64), vals, p, signed)


def sample_bernoulli(n, p, signed, rng):
    """Each of the n*n positions kept independently with probability ``p``.

    Positions are generated as a Bernoulli process via geometric gaps. Signed
    patterns carry independent values ``+-1/sqrt(p)``.
    """
    if not 0.0 <= p <= 1.0:
        raise ParameterError(f"p must lie in [0, 1], got {p}")
    n = int(n)
    total = n * n
    if p == 0.0:
        flat = np.empty(0, dtype=np.int64)
    elif p == 1.0:
        flat = np.arange(total, dtype=np.int64)
    else:
        chunks, last = [], -1
        batch = int(total * p + 10 * math.sqrt(total * p) + 64)
        while last < total:
            pos = last + np.cumsum(rng.geometric(p, size=batch))
            chunks.append(pos)
            last = int(pos[-1])
        flat = np.concatenate(chunks)
        flat = flat[flat < total]
    rows, cols = np.divmod(flat, n)
    vals = None
    if signed:
        vals = (rng.integers(0, 2, size=flat.size) * 2 - 1) / math.sqrt(p)
    return SparsePattern(n, rows, cols, vals, p, signed)


def sparse_operator_norm(B, tol=1e-8, max_iters=10_000, restarts=3, seed=0,
                         full_output=False):
    """Spectral norm of the stored values (0/1 support when unsigned)."""
    if B.nnz == 0:
        est = NormEstimate(0.0, True, 0)
        return est if full_output else est.value
    rows, cols, vals = B.rows, B.cols, B.values()
    n = B.n
    est = power_iterate(lambda X: _kernels.coo_matmat(rows, cols, vals, X, n),
                        lambda Y: _kernels.coo_matmat(cols, rows, vals, Y, n),
                        n, tol=tol, max_iters=max_iters, restarts=restarts, seed=seed)
    if not est.converged:
        warnings.warn(f"power iteration stopped after {est.iterations} sweeps",
                      NormNotConverged, stacklevel=2)
    return est if full_output else est.value


def degree_trim(B, threshold, compute_norms=True, norm_kw=None):
    """Remove every row and column holding more than ``threshold`` nonzeros.

    Degrees are measured on the input pattern.
    """
    if not threshold > 0:
        raise ParameterError("threshold must be positive")
    bad_rows = np.flatnonzero(B.row_degrees() > threshold)
    bad_cols = np.flatnonzero(B.col_degrees() > threshold)
    drop = np.isin(B.rows, bad_rows) | np.isin(B.cols, bad_cols)
    out = B.subset(~drop)
    flags = []
    nb = na = None
    if compute_norms:
        kw = dict(norm_kw or {}, full_output=True)
        eb, ea = sparse_operator_norm(B, **kw), sparse_operator_norm(out, **kw)
        nb, na = eb.value, ea.value
        flags += [f for f, e in (("norm_before_not_converged", eb),
                                 ("norm_after_not_converged", ea)) if not e.converged]
    report = RegularizationReport(
        "degree_trim", ZeroPattern(bad_rows, bad_cols), nb, na,
        threshold_used=float(threshold), entries_changed=int(drop.sum()),
        rows_touched=int(np.count_nonzero(B.row_degrees()[bad_rows])),
        cols_touched=int(np.count_nonzero(B.col_degrees()[bad_cols])), flags=flags)
    return out, report


class WeightCut(NamedTuple):
    J: np.ndarray
    log_v: np.ndarray
    cutoff: float                 # L n p
    card_bound: float             # n exp(-L n p)
    residual_max: int             # max_i sum_{j not in J} B_ij
    residual_bound: float         # 10 L n p

    @property
    def card_ok(self):
        return self.J.size <= self.card_bound

    @property
    def residual_ok(self):
        return self.residual_max <= self.residual_bound


def weight_column_cut(B, p, L=10.0):
    """Columns whose weight product ``V_j`` falls below 0.1.

    A column with ``e_j > L n p`` nonzeros gets ``V_j = (L n p / e_j) ** e_j``;
    all other columns have ``V_j = 1``. ``log_v`` holds ``log V_j``.
    """
    if L < 10:
        warnings.warn(f"L = {L} is below 10; the cut's guarantees need L >= 10",
                      stacklevel=2)
    if not p > 0:
        raise ParameterError("p must be positive")
    n = B.n
    cutoff = L * n * p
    e = B.col_degrees().astype(np.float64)
    heavy = e > cutoff
    log_v = np.where(heavy, e * np.log(cutoff / np.where(heavy, e, 1.0)), 0.0)
    J = np.flatnonzero(log_v < math.log(0.1))
    keep = ~np.isin(B.cols, J)
    residual = np.bincount(B.rows[keep], minlength=n)
    return WeightCut(J, log_v, cutoff, n * math.exp(-cutoff), int(residual.max(initial=0)),
                     10.0 * cutoff)


# ---------------------------------------------------------------------------
# exhaustive discrepancy conditions
# ---------------------------------------------------------------------------

class DiscrepancyResult(NamedTuple):
    all_pairs_ok: bool
    worst: tuple          # (S, T, e, margin)
    c_equal: float        # least C with C1 = C2 = C passing every pair
    c2_at_c1: float       # least C2 given the supplied C1
    c1_at_c2: float       # least C1 given the supplied C2
    frontier: list        # [(C1, least C2)] staircase of minimal pairs


def _members(mask, n):
    return tuple(i for i in range(n) if mask >> i & 1)


def pair_requirements(B, p):
    """Per-pair constants needed by condition (A) and (B), over all nonempty S, T.

    Returns ``(E, need_a, need_b)`` indexed by bitmasks; ``need_a = e/(|S||T|p)``
    and ``need_b = e log(need_a) / (|T| log(n/|T|))`` with natural logs.
    Pairs with ``e = 0`` need nothing. When ``|T| = n`` condition (B) reads
    ``e log(need_a) <= 0`` and ``need_b`` is ``-inf``/``+inf`` accordingly.
    """
    M = B.densify(indicator=True) if isinstance(B, SparsePattern) else (np.asarray(B) != 0)
    n = M.shape[0]
    if n > 12:
        raise ParameterError("exhaustive enumeration is limited to n <= 12")
    if not p > 0:
        raise ParameterError("p must be positive")
    E = np.asarray(_kernels.subset_edge_table(M.astype(np.int64)), dtype=np.float64)
    size = _kernels.subset_bits(n).sum(axis=1).astype(np.float64)
    sS = size[:, None]
    sT = size[None, :]
    with np.errstate(divide="ignore", invalid="ignore"):
        need_a = E / (sS * sT * p)
        e_log = E * np.log(need_a)
        denom = sT * np.log(n / sT)
        need_b = np.where(denom > 0, e_log / denom,
                          np.where(e_log > 0, np.inf, -np.inf))
    zero = E == 0
    need_a[zero] = 0.0
    need_b[zero] = -np.inf
    need_a[0, :] = need_a[:, 0] = -np.inf   # empty S or T: not enumerated
    need_b[0, :] = need_b[:, 0] = -np.inf
    return E, need_a, need_b


def discrepancy_check(B, p, C1, C2):
    """Test every nonempty ``S, T`` for ``e(S,T) <= C1|S||T|p`` or the log condition.

    The margin of a pair is ``max(C1 - need_a, C2 - need_b)``; it is
    nonnegative exactly when one of the two conditions holds.
    """
    E, need_a, need_b = pair_requirements(B, p)
    n = int(round(math.log2(E.shape[0])))
    with np.errstate(invalid="ignore"):
        margin = np.maximum(C1 - need_a, C2 - need_b)
    margin[0, :] = margin[:, 0] = np.inf
    s, t = np.unravel_index(np.argmin(margin), margin.shape)
    worst = (_members(int(s), n), _members(int(t), n), int(E[s, t]), float(margin[s, t]))

    a = need_a[1:, 1:].ravel()
    b = need_b[1:, 1:].ravel()
    c_equal = float(max(np.minimum(a, b).max(), 0.0))
    over_a = a > C1
    c2_at_c1 = float(max(b[over_a].max(initial=-np.inf), 0.0))
    over_b = b > C2
    c1_at_c2 = float(max(a[over_b].max(initial=-np.inf), 0.0))
    return DiscrepancyResult(bool(margin.min() >= 0), worst, c_equal, c2_at_c1, c1_at_c2,
                             _frontier(a, b))


def _frontier(a, b):
    # C1 = a_k covers every pair with a <= a_k; pairs with a > a_k need C2 >= b
    live = a > 0
    a, b = a[live], b[live]
    if a.size == 0:
        return [(0.0, 0.0)]
    order = np.argsort(-a, kind="stable")
    a, b = a[order], np.maximum(b[order], 0.0)
    prefix = np.maximum.accumulate(b)
    starts = np.flatnonzero(np.r_[True, a[1:] < a[:-1]])
    cands = [(float(a[0]), 0.0)]
    cands += [(float(a[k]), float(prefix[k - 1])) for k in starts[1:]]
    cands.append((0.0, float(prefix[-1])))
    out = []
    for c1, c2 in cands:            # C1 decreasing, C2 nondecreasing
        if math.isinf(c2):
            break
        if out and c2 == out[-1][1]:
            out[-1] = (c1, c2)
        else:
            out.append((c1, c2))
    return out
