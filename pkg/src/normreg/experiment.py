"""Seeded Monte-Carlo sweeps over (n, eps, method) and their CSV/JSON output."""
import csv
import io
import json
import logging
import math
import statistics
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from ._util import ParameterError
from .algo1 import run_algorithm1
from .bern import SparsePattern, degree_trim
from .dist import DistributionSpec, derive_seed, sample_matrix
from .levels import l_max_for
from .linalg import operator_norm
from .trim import (c_epsilon, default_threshold, trim_threshold_rows_cols,
                   trim_topk_rows_cols, truncate_entries)

log = logging.getLogger(__name__)

METHODS = ("none", "topk", "threshold", "algo1", "truncate", "degree_trim")

CSV_COLUMNS = ("method", "n", "epsilon", "trial", "seed", "norm_before", "norm_after",
               "rows_touched", "cols_touched", "entries_changed", "ratio_sqrt_n",
               "ratio_bound", "flags", "wall_ms")


@dataclass
class ExperimentConfig:
    sizes: list
    epsilons: list
    distribution: DistributionSpec = field(default_factory=DistributionSpec)
    methods: list = field(default_factory=lambda: ["none"])
    trials: int = 1
    master_seed: int = 0
    output: Optional[str] = None
    norm_tol: float = 1e-8
    norm_max_iters: int = 10_000
    threshold_C: float = 2.0          # row/col cutoff C * sqrt(c_eps n)
    degree_C: float = 20.0            # degree cutoff C * n p
    truncate_level: Optional[float] = None   # None means sqrt(n)
    workers: int = 1
    timing: bool = False              # wall_ms stays empty unless set, keeping CSV bytes stable

    def __post_init__(self):
        if isinstance(self.distribution, dict):
            self.distribution = DistributionSpec.from_dict(self.distribution)
        self.sizes = [int(n) for n in self.sizes]
        self.epsilons = [float(e) for e in self.epsilons]
        self.methods = list(self.methods)
        if int(self.trials) < 1:
            raise ParameterError("trials must be >= 1")
        if not self.methods:
            raise ParameterError("methods must be nonempty")
        bad = [m for m in self.methods if m not in METHODS]
        if bad:
            raise ParameterError(f"unknown methods {bad}; choose from {METHODS}")
        if not self.sizes or min(self.sizes) < 1:
            raise ParameterError("sizes must be positive")
        if not self.epsilons or any(not 0 < e <= 1 for e in self.epsilons):
            raise ParameterError("epsilons must lie in (0, 1]")

    def to_dict(self):
        d = asdict(self)
        d["distribution"] = self.distribution.to_dict()
        return d

    @classmethod
    def from_dict(cls, d):
        known = set(cls.__dataclass_fields__)
        unknown = set(d) - known
        if unknown:
            raise ParameterError(f"unknown config fields: {sorted(unknown)}")
        return cls(**d)

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))

    @property
    def norm_kw(self):
        return {"tol": self.norm_tol, "max_iters": self.norm_max_iters}


def ratio_bound(norm, n, epsilon):
    """``norm / sqrt(c_eps n ln ln n)``, or None where the normalizer is not positive."""
    if norm is None or n <= math.e or not 0 < epsilon < 1:
        return None
    lnln = math.log(math.log(n))
    denom = c_epsilon(epsilon) * n * lnln
    return norm / math.sqrt(denom) if denom > 0 else None


def algo1_skip_reason(n, epsilon):
    if epsilon > 1.0 / 6.0 + 1e-15:
        return f"epsilon={epsilon} exceeds 1/6"
    try:
        l_max_for(n, epsilon)
    except ParameterError as exc:
        return str(exc)
    return None


def _cells(config):
    idx = 0
    for n in config.sizes:
        for trial in range(config.trials):
            yield idx, n, trial
            idx += 1


def _row(method, n, eps, trial, seed, nb, na, rows, cols, changed, flags, wall):
    return {
        "method": method, "n": n, "epsilon": eps, "trial": trial, "seed": seed,
        "norm_before": nb, "norm_after": na, "rows_touched": rows, "cols_touched": cols,
        "entries_changed": changed,
        "ratio_sqrt_n": None if na is None else na / math.sqrt(n),
        "ratio_bound": ratio_bound(na, n, eps),
        "flags": ";".join(flags), "wall_ms": wall,
    }


def run_cell(config, n, trial):
    """All method/epsilon rows for one sampled matrix."""
    seed = derive_seed(config.master_seed, trial, f"matrix:n={n}")
    rng = np.random.Generator(np.random.PCG64(seed))
    A = sample_matrix(config.distribution, n, rng)
    norm_kw = dict(config.norm_kw, seed=derive_seed(config.master_seed, trial, f"norm:n={n}"))
    t0 = time.perf_counter()
    est = operator_norm(A, full_output=True, **norm_kw)
    base_ms = (time.perf_counter() - t0) * 1e3
    nb = est.value
    base_flags = [] if est.converged else ["norm_before_not_converged"]
    rows = []
    for eps in config.epsilons:
        for method in config.methods:
            wall = time.perf_counter()
            flags = list(base_flags)
            if method == "none":
                out = (nb, 0, 0, 0)
            elif method == "topk":
                _, rep = trim_topk_rows_cols(A, eps, norm_before=nb, norm_kw=norm_kw)
                out = (rep.norm_after, rep.rows_touched, rep.cols_touched, rep.entries_changed)
                flags += rep.flags
            elif method == "threshold":
                if not eps < 1:
                    log.warning("threshold skipped for eps=%s: c_eps undefined", eps)
                    continue
                thr = default_threshold(eps, n, config.threshold_C)
                _, rep = trim_threshold_rows_cols(A, thr, epsilon=eps, norm_before=nb,
                                                  norm_kw=norm_kw)
                out = (rep.norm_after, rep.rows_touched, rep.cols_touched, rep.entries_changed)
                flags += rep.flags
            elif method == "truncate":
                level = config.truncate_level or math.sqrt(n)
                _, rep = truncate_entries(A, level, norm_before=nb, norm_kw=norm_kw)
                out = (rep.norm_after, rep.rows_touched, rep.cols_touched, rep.entries_changed)
                flags += rep.flags
            elif method == "algo1":
                reason = algo1_skip_reason(n, eps)
                if reason:
                    log.warning("algo1 skipped for n=%d eps=%s: %s", n, eps, reason)
                    continue
                _, rep = run_algorithm1(A, eps, norm_before=nb, norm_kw=norm_kw)
                out = (rep.norm_after, rep.rows_touched, rep.cols_touched, rep.entries_changed)
                flags += rep.flags
            else:  # degree_trim
                spec = config.distribution
                if spec.kind != "signed_bernoulli":
                    log.warning("degree_trim skipped: needs signed_bernoulli entries")
                    continue
                B = SparsePattern.from_dense(A, p=spec.p, signed=True)
                Bt, rep = degree_trim(B, config.degree_C * n * spec.p, compute_norms=False)
                est_after = operator_norm(Bt.densify(), full_output=True, **norm_kw)
                if not est_after.converged:
                    flags.append("norm_after_not_converged")
                out = (est_after.value, rep.rows_touched, rep.cols_touched,
                       rep.entries_changed)
            wall = (time.perf_counter() - wall) * 1e3 + base_ms
            rows.append(_row(method, n, eps, trial, seed, nb, *out, flags,
                             round(wall, 3) if config.timing else None))
    return rows


def _run_cell_args(args):
    config, n, trial = args
    return run_cell(config, n, trial)


def run_sweep(config):
    """Rows for every (n, trial) cell, ordered by cell index then epsilon then method.

    Output does not depend on ``config.workers``.
    """
    cells = list(_cells(config))
    if config.workers > 1 and len(cells) > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as ex:
            chunks = list(ex.map(_run_cell_args, [(config, n, t) for _, n, t in cells]))
    else:
        chunks = [run_cell(config, n, t) for _, n, t in cells]
    rows = [r for chunk in chunks for r in chunk]
    if config.output:
        write_csv(config.output, rows)
    return rows


# ---------------------------------------------------------------------------
# CSV
# ---------------------------------------------------------------------------

def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def rows_to_csv(rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in rows:
        w.writerow([_fmt(r.get(c)) for c in CSV_COLUMNS])
    return buf.getvalue()


def write_csv(path, rows):
    with open(path, "w", newline="") as f:
        f.write(rows_to_csv(rows))


_INT = {"n", "trial", "seed", "rows_touched", "cols_touched", "entries_changed"}
_FLOAT = {"epsilon", "norm_before", "norm_after", "ratio_sqrt_n", "ratio_bound", "wall_ms"}


def read_csv(path_or_text):
    text = path_or_text
    if "\n" not in path_or_text:
        with open(path_or_text, newline="") as f:
            text = f.read()
    out = []
    for rec in csv.DictReader(io.StringIO(text)):
        row = {}
        for k, v in rec.items():
            if v == "" and k != "flags" and k != "method":
                row[k] = None
            elif k in _INT:
                row[k] = int(v)
            elif k in _FLOAT:
                row[k] = float(v)
            else:
                row[k] = v
        out.append(row)
    return out


# ---------------------------------------------------------------------------
# summary
# ---------------------------------------------------------------------------

SUMMARY_FIELDS = ("ratio_sqrt_n", "ratio_bound", "norm_after", "rows_touched",
                  "cols_touched", "entries_changed")


def summarize(rows):
    """Median/min/max of ratios and footprints grouped by (method, n, epsilon)."""
    groups = {}
    for r in rows:
        groups.setdefault((r["method"], r["n"], r["epsilon"]), []).append(r)
    table = []
    for (method, n, eps), grp in groups.items():
        entry = {"method": method, "n": n, "epsilon": eps, "trials": len(grp)}
        for f in SUMMARY_FIELDS:
            vals = [g[f] for g in grp if g.get(f) is not None]
            if vals:
                entry[f"{f}_median"] = statistics.median(vals)
                entry[f"{f}_min"] = min(vals)
                entry[f"{f}_max"] = max(vals)
            else:
                entry[f"{f}_median"] = entry[f"{f}_min"] = entry[f"{f}_max"] = None
        table.append(entry)
    return table


def format_summary(table):
    head = ("method", "n", "epsilon", "trials", "ratio_sqrt_n_median", "ratio_bound_median",
            "rows_touched_max", "cols_touched_max")
    lines = ["  ".join(f"{h:>20}" for h in head)]
    for e in table:
        cells = []
        for h in head:
            v = e.get(h)
            cells.append(f"{v:>20.6g}" if isinstance(v, float) else f"{str(v):>20}")
        lines.append("  ".join(cells))
    return "\n".join(lines)
