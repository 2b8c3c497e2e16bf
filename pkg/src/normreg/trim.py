"""Row/column L2 regularizers and the entry-truncation baseline."""
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ._util import ParameterError, ceil_mul
from .linalg import (ZeroPattern, as_matrix, col_l2_norms, operator_norm,
                     row_l2_norms)


def c_epsilon(epsilon):
    """``ln(1/eps) / eps``, the factor in the post-regularization norm bound."""
    if not 0.0 < epsilon < 1.0:
        raise ParameterError(f"epsilon must lie in (0, 1), got {epsilon}")
    return math.log(1.0 / epsilon) / epsilon


def default_threshold(epsilon, n, C=2.0):
    """Row/column L2 cutoff ``C * sqrt(c_eps * n)``."""
    return C * math.sqrt(c_epsilon(epsilon) * n)


@dataclass
class RegularizationReport:
    method: str
    pattern: ZeroPattern
    norm_before: Optional[float]
    norm_after: Optional[float]
    epsilon: Optional[float] = None
    c_epsilon: Optional[float] = None
    threshold_used: Optional[float] = None
    k: Optional[int] = None
    entries_changed: int = 0
    rows_touched: int = 0
    cols_touched: int = 0
    flags: list = field(default_factory=list)

    def to_dict(self):
        d = dict(self.__dict__)
        d["pattern"] = self.pattern.to_dict()
        d["flags"] = list(self.flags)
        return d


def footprint(before, after):
    """(entries changed, distinct rows touched, distinct columns touched)."""
    diff = before != after
    return (int(np.count_nonzero(diff)), int(np.count_nonzero(diff.any(axis=1))),
            int(np.count_nonzero(diff.any(axis=0))))


def line_footprint(before, rows, cols):
    """(entries changed, rows removed, columns removed) for whole-line zeroing.

    A removed line counts only if it held a nonzero entry. Zeroing a column
    alters every row it crosses, so the entrywise footprint of :func:`footprint`
    would report all rows; here rows and columns are charged separately.
    """
    rows = np.asarray(rows, dtype=np.intp)
    cols = np.asarray(cols, dtype=np.intp)
    nz = before != 0
    hit = np.zeros_like(nz)
    hit[rows, :] = True
    hit[:, cols] = True
    changed = int(np.count_nonzero(nz & hit))
    r = int(np.count_nonzero(nz[rows, :].any(axis=1))) if rows.size else 0
    c = int(np.count_nonzero(nz[:, cols].any(axis=0))) if cols.size else 0
    return changed, r, c


def _norms(A, out, compute_norms, norm_before, norm_kw, flags):
    if not compute_norms:
        return norm_before, None
    kw = dict(norm_kw or {})
    kw["full_output"] = True
    if norm_before is None:
        est = operator_norm(A, **kw)
        norm_before = est.value
        if not est.converged:
            flags.append("norm_before_not_converged")
    est = operator_norm(out, **kw)
    if not est.converged:
        flags.append("norm_after_not_converged")
    return norm_before, est.value


def _finish(method, A, out, pattern, compute_norms, norm_before, norm_kw, **extra):
    flags = []
    nb, na = _norms(A, out, compute_norms, norm_before, norm_kw, flags)
    if pattern.entries:
        changed, rows, cols = footprint(A, out)
    else:
        changed, rows, cols = line_footprint(A, sorted(pattern.rows), sorted(pattern.cols))
    report = RegularizationReport(method, pattern, nb, na, entries_changed=changed,
                                  rows_touched=rows, cols_touched=cols, flags=flags, **extra)
    return out, report


def top_indices(values, k):
    """Indices of the ``k`` largest values; equal values go to the smaller index."""
    return np.argsort(-np.asarray(values), kind="stable")[:k]


def trim_topk_rows_cols(A, epsilon, compute_norms=True, norm_before=None, norm_kw=None):
    """Zero the ``ceil(eps*n)`` rows and as many columns with largest L2 norm.

    Row and column norms are both measured on the original ``A``.
    """
    A = as_matrix(A)
    if not 0.0 < epsilon <= 1.0:
        raise ParameterError(f"epsilon must lie in (0, 1], got {epsilon}")
    m, n = A.shape
    kr = min(m, ceil_mul(m, epsilon))
    kc = min(n, ceil_mul(n, epsilon))
    rows = top_indices(row_l2_norms(A), kr)
    cols = top_indices(col_l2_norms(A), kc)
    out = A.copy()
    out[rows, :] = 0.0
    out[:, cols] = 0.0
    return _finish("topk", A, out, ZeroPattern(rows, cols), compute_norms, norm_before,
                   norm_kw, epsilon=epsilon, c_epsilon=math.log(1.0 / epsilon) / epsilon,
                   k=kr)


def trim_threshold_rows_cols(A, threshold, epsilon=None, compute_norms=True,
                             norm_before=None, norm_kw=None):
    """Zero every row and column whose original L2 norm exceeds ``threshold``."""
    A = as_matrix(A)
    if not threshold > 0:
        raise ParameterError("threshold must be positive")
    rows = np.flatnonzero(row_l2_norms(A) > threshold)
    cols = np.flatnonzero(col_l2_norms(A) > threshold)
    out = A.copy()
    out[rows, :] = 0.0
    out[:, cols] = 0.0
    extra = {"threshold_used": float(threshold)}
    if epsilon is not None:
        extra.update(epsilon=epsilon, c_epsilon=c_epsilon(epsilon))
    return _finish("threshold", A, out, ZeroPattern(rows, cols), compute_norms,
                   norm_before, norm_kw, **extra)


def truncate_entries(A, level, epsilon=None, compute_norms=True, norm_before=None,
                     norm_kw=None):
    """Zero every entry with ``|A_ij| > level`` (entrywise baseline)."""
    A = as_matrix(A)
    if not level > 0:
        raise ParameterError("level must be positive")
    big = np.abs(A) > level
    out = np.where(big, 0.0, A)
    ii, jj = np.nonzero(big)
    extra = {"threshold_used": float(level)}
    if epsilon is not None:
        extra.update(epsilon=epsilon, c_epsilon=c_epsilon(epsilon))
    return _finish("truncate", A, out, ZeroPattern(entries=zip(ii, jj)), compute_norms,
                   norm_before, norm_kw, **extra)
