"""Order statistics of matrix entries and the dyadic level sets built from them.

Ranks are 1-based throughout: rank 1 is the entry of largest absolute value.
Equal magnitudes are ranked by row-major position.
"""
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

import numpy as np

from ._util import ParameterError, ceil_mul
from .dist import pareto_square_quantile
from .linalg import as_matrix


def rank_prefix(A, K):
    """Row-major flat positions of the ``K`` top-ranked entries, in rank order."""
    a = np.abs(as_matrix(A)).ravel()
    size = a.size
    K = min(int(K), size)
    if K <= 0:
        return np.empty(0, dtype=np.intp)
    if K == size:
        return np.argsort(-a, kind="stable")
    v = np.partition(a, size - K)[size - K]
    above = np.flatnonzero(a > v)
    ties = np.flatnonzero(a == v)[: K - above.size]
    cand = np.sort(np.concatenate([above, ties]))
    return cand[np.argsort(-a[cand], kind="stable")]


def l_max_for(n, epsilon):
    """``floor(log2(ln n / ln eps**-4))``; raises when the result would be negative."""
    if not 0.0 < epsilon < 1.0:
        raise ParameterError(f"epsilon must lie in (0, 1), got {epsilon}")
    ln_n = math.log(n) if n > 1 else 0.0
    ln_e4 = 4.0 * math.log(1.0 / epsilon)
    if ln_n < ln_e4:
        raise ParameterError(
            f"matrix too small for this epsilon: ln n = {ln_n:.4f} < ln eps^-4 = {ln_e4:.4f}")
    return int(math.floor(math.log2(ln_n / ln_e4)))


def level_rank_range(n, epsilon, l, total):
    """Inclusive 1-based rank range of level ``l``, clamped to ``total`` entries."""
    start = ceil_mul(n, epsilon, Fraction(2) ** (l - 1)) + 1
    end = min(ceil_mul(n, epsilon, Fraction(2) ** l), total)
    return start, end


@dataclass(frozen=True)
class LevelDecomposition:
    """Top-ranked entries split into the Step-1 block and dyadic levels.

    ``ranking`` holds the row-major positions of ranks ``1..len(ranking)``;
    ranks past the last level are never needed and not stored.
    """

    shape: tuple
    epsilon: float
    l_max: int
    ranking: np.ndarray
    step1_size: int
    level_ranges: tuple  # (start, end) per level, 1-based inclusive

    @property
    def n(self):
        return self.shape[0]

    @property
    def p_levels(self):
        return tuple(2.0**l * self.epsilon / self.n for l in range(self.l_max + 1))

    @property
    def step1_set(self):
        return self.ranking[: self.step1_size]

    def level(self, l):
        start, end = self.level_ranges[l]
        if end < start:
            return self.ranking[:0]
        return self.ranking[start - 1:end]

    @property
    def levels(self):
        return [self.level(l) for l in range(self.l_max + 1)]

    def rank_gap(self):
        """Ranks skipped between the Step-1 block and level 0 (0 when contiguous)."""
        return max(0, self.level_ranges[0][0] - self.step1_size - 1) if self.level_ranges else 0

    def to_dict(self):
        return {
            "shape": list(self.shape),
            "epsilon": self.epsilon,
            "l_max": self.l_max,
            "step1_ranks": [1, self.step1_size],
            "level_ranks": [list(r) for r in self.level_ranges],
            "p_levels": list(self.p_levels),
        }


def build_levels(A, epsilon, l_max_override=None):
    """Rank the entries of ``A`` and carve out the Step-1 block and levels ``0..l_max``.

    Level ``l`` holds ranks ``ceil(2**(l-1) n eps + 1)`` through
    ``ceil(2**l n eps)``; the Step-1 block holds the top ``ceil(n eps / 2)``.
    """
    A = as_matrix(A)
    n = A.shape[0]
    if not 0.0 < epsilon < 1.0:
        raise ParameterError(f"epsilon must lie in (0, 1), got {epsilon}")
    if l_max_override is None:
        l_max = l_max_for(n, epsilon)
    else:
        l_max = int(l_max_override)
        if l_max < 0:
            raise ParameterError("l_max_override must be >= 0")
    total = A.size
    step1 = min(ceil_mul(n, epsilon, Fraction(1, 2)), total)
    ranges = tuple(level_rank_range(n, epsilon, l, total) for l in range(l_max + 1))
    depth = max([step1] + [end for _, end in ranges])
    return LevelDecomposition(A.shape, float(epsilon), l_max, rank_prefix(A, depth),
                              step1, ranges)


@dataclass(frozen=True)
class QuantileEstimate:
    k: int
    rank: int
    order_statistic_sq: float
    lower_ref: Optional[float] = None
    upper_ref: Optional[float] = None

    @property
    def sandwiched(self):
        if self.lower_ref is None or self.upper_ref is None:
            return None
        return self.lower_ref <= self.order_statistic_sq <= self.upper_ref


def quantile_rank(total, k):
    return math.ceil(total * Fraction(2) ** (1 - int(k)))


def estimate_quantile(A, k, spec=None):
    """Squared order statistic at rank ``ceil(N * 2**(1-k))`` among ``N`` entries.

    For a symmetric Pareto ``spec`` the closed-form quantiles ``q_{k-2}`` and
    ``q_k`` are attached as reference bounds.
    """
    A = as_matrix(A)
    total = A.size
    rank = quantile_rank(total, k)
    if not 1 <= rank <= total:
        raise ParameterError(f"rank {rank} for k={k} is outside [1, {total}]")
    a = np.abs(A).ravel()
    val = float(np.partition(a, total - rank)[total - rank]) ** 2
    lo = hi = None
    if spec is not None and spec.kind == "symmetric_pareto":
        hi = pareto_square_quantile(spec.alpha, spec.x0, k)
        if k >= 2:
            lo = pareto_square_quantile(spec.alpha, spec.x0, k - 2)
    return QuantileEstimate(int(k), rank, val, lo, hi)

