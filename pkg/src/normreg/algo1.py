"""Submatrix-localizing regularization.

Pipeline, on an n x n matrix with parameter ``eps``:

1. zero the ``ceil(n eps / 2)`` entries of largest absolute value;
2. for each level ``l = 0..l_max`` count level entries per column, form the
   column weight ``V_j = prod_i W_ij`` and keep ``J_l = {j : V_j <= 0.1}``;
3. add the ``floor(n eps / 4)`` columns of largest L2 norm;
4. repeat 2-3 on the transpose to get the row set;
5. zero the product block ``I x J``.
"""
import math
from fractions import Fraction
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ._util import ParameterError, floor_mul
from .levels import build_levels
from .linalg import ZeroPattern, as_matrix, col_l2_norms, operator_norm
from .trim import c_epsilon, footprint, top_indices

LOG_CUT = math.log(0.1)


def level_column_counts(A, level):
    """Number of level positions in each column.

    ``level`` is either row-major flat positions or an ``(k, 2)`` array of
    ``(row, col)`` pairs.
    """
    A = as_matrix(A)
    m, n = A.shape
    pos = np.asarray(level, dtype=np.intp)
    if pos.ndim == 2:
        rows, cols = pos[:, 0], pos[:, 1]
    else:
        rows, cols = np.divmod(pos.ravel(), n)
    if rows.size and (rows.min() < 0 or rows.max() >= m or cols.min() < 0 or cols.max() >= n):
        raise ParameterError("level position out of bounds")
    return np.bincount(cols, minlength=n)


def column_log_weight(count, t):
    """``log prod_i W_ij`` for a column holding ``count`` level entries.

    Each of the ``count`` level entries contributes ``t / count`` when
    ``count > t``; every other factor is 1.
    """
    if not t > 0:
        raise ParameterError("t must be positive")
    count = np.asarray(count, dtype=np.float64)
    heavy = count > t
    safe = np.where(heavy, count, 1.0)
    out = np.where(heavy, count * np.log(t / safe), 0.0)
    return float(out) if out.ndim == 0 else out


@dataclass
class LevelDiagnostics:
    level: int
    threshold: float
    heavy_columns: int
    selected: int

    def to_dict(self):
        return dict(self.__dict__)


def _column_pass(W, level_positions, c_eps, eps, n_hat):
    n = W.shape[1]
    sets, diags = [], []
    for l, pos in enumerate(level_positions):
        t = c_eps * 2.0**l * eps          # c_eps * n * p_l with p_l = 2**l eps / n
        counts = np.bincount(pos % n, minlength=n)
        logv = column_log_weight(counts, t)
        J_l = np.flatnonzero(logv <= LOG_CUT)
        sets.append(J_l)
        diags.append(LevelDiagnostics(l, t, int(np.count_nonzero(counts > t)), int(J_l.size)))
    hat = np.sort(top_indices(col_l2_norms(W), n_hat))
    union = np.unique(np.concatenate(sets + [hat])) if sets else hat
    return sets, hat, union, diags


@dataclass
class Algo1Report:
    epsilon: float
    c_epsilon: float
    l_max: int
    step1_entries: np.ndarray          # row-major flat positions
    J_l_sets: list
    I_l_sets: list
    J_hat: np.ndarray
    I_hat: np.ndarray
    J: np.ndarray
    I: np.ndarray
    column_diagnostics: list
    row_diagnostics: list
    norm_before: Optional[float] = None
    norm_after: Optional[float] = None
    entries_changed: int = 0
    rows_touched: int = 0
    cols_touched: int = 0
    level_ranks: list = field(default_factory=list)
    flags: list = field(default_factory=list)
    n_cols: int = 0

    @property
    def pattern(self):
        """Step-1 entries plus the full ``I x J`` block."""
        n = self.n_cols
        entries = set(zip(*np.divmod(self.step1_entries, n)))
        entries.update((int(i), int(j)) for i in self.I for j in self.J)
        return ZeroPattern(entries=entries)

    def to_dict(self):
        lst = lambda a: [int(x) for x in a]  # noqa: E731
        n = self.n_cols
        return {
            "epsilon": self.epsilon,
            "c_epsilon": self.c_epsilon,
            "l_max": self.l_max,
            "step1_entries": [[int(i), int(j)] for i, j in
                              zip(*np.divmod(self.step1_entries, n))],
            "J_l_sets": [lst(s) for s in self.J_l_sets],
            "I_l_sets": [lst(s) for s in self.I_l_sets],
            "J_hat": lst(self.J_hat),
            "I_hat": lst(self.I_hat),
            "J": lst(self.J),
            "I": lst(self.I),
            "column_diagnostics": [d.to_dict() for d in self.column_diagnostics],
            "row_diagnostics": [d.to_dict() for d in self.row_diagnostics],
            "norm_before": self.norm_before,
            "norm_after": self.norm_after,
            "entries_changed": self.entries_changed,
            "rows_touched": self.rows_touched,
            "cols_touched": self.cols_touched,
            "level_ranks": [list(r) for r in self.level_ranks],
            "flags": list(self.flags),
        }


def run_algorithm1(A, epsilon, c_eps_override=None, l_max_override=None,
                   compute_norms=True, norm_before=None, norm_kw=None):
    """Run the five-step submatrix regularization; returns ``(A_reg, Algo1Report)``.

    Levels are cut from the ranking of the original matrix. The top-norm
    column and row sets are taken on the matrix after Step 1.
    """
    A = as_matrix(A)
    n = A.shape[0]
    if A.shape[1] != n:
        raise ParameterError("run_algorithm1 expects a square matrix")
    if not 0.0 < epsilon <= 1.0 / 6.0 + 1e-15:
        raise ParameterError(f"epsilon must lie in (0, 1/6], got {epsilon}")
    c_eps = c_epsilon(epsilon) if c_eps_override is None else float(c_eps_override)
    if not c_eps > 0:
        raise ParameterError("c_eps must be positive")

    dec = build_levels(A, epsilon, l_max_override)
    n_hat = floor_mul(n, epsilon, Fraction(1, 4))

    W = A.copy()
    step1 = dec.step1_set
    W.flat[step1] = 0.0

    col_levels = dec.levels
    J_sets, J_hat, J, col_diag = _column_pass(W, col_levels, c_eps, epsilon, n_hat)
    # transpose pass: position i*n + j of A is j*n + i of A.T
    row_levels = [(p % n) * n + p // n for p in col_levels]
    I_sets, I_hat, I, row_diag = _column_pass(W.T, row_levels, c_eps, epsilon, n_hat)

    out = W
    if I.size and J.size:
        out[np.ix_(I, J)] = 0.0

    flags = []
    na = None
    if compute_norms:
        kw = dict(norm_kw or {}, full_output=True)
        if norm_before is None:
            est = operator_norm(A, **kw)
            norm_before = est.value
            if not est.converged:
                flags.append("norm_before_not_converged")
        est = operator_norm(out, **kw)
        na = est.value
        if not est.converged:
            flags.append("norm_after_not_converged")
    changed, rows, cols = footprint(A, out)
    report = Algo1Report(
        epsilon=float(epsilon), c_epsilon=c_eps, l_max=dec.l_max,
        step1_entries=np.asarray(step1).copy(), J_l_sets=J_sets, I_l_sets=I_sets,
        J_hat=J_hat, I_hat=I_hat, J=J, I=I, column_diagnostics=col_diag,
        row_diagnostics=row_diag, norm_before=norm_before, norm_after=na,
        entries_changed=changed, rows_touched=rows, cols_touched=cols,
        level_ranks=list(dec.level_ranges), flags=flags, n_cols=n)
    return out, report
