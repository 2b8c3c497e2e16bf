"""Spectral-norm regularization of random matrices with heavy-tailed i.i.d. entries."""
from ._kernels import BACKEND
from ._util import ParameterError
from .algo1 import Algo1Report, column_log_weight, level_column_counts, run_algorithm1
from .bern import (SparsePattern, degree_trim, discrepancy_check, sample_bernoulli,
                   sparse_operator_norm, weight_column_cut)
from .dist import (DistributionSpec, derive_seed, pareto_square_quantile, sample_matrix,
                   stream)
from .experiment import ExperimentConfig, run_sweep, summarize
from .levels import LevelDecomposition, build_levels, estimate_quantile, l_max_for
from .linalg import (NormNotConverged, ZeroPattern, apply_zero_pattern,
                     bilinear_bound_check, col_l2_norms, operator_norm,
                     operator_norm_oracle, row_l2_norms)
from .trim import (RegularizationReport, c_epsilon, trim_threshold_rows_cols,
                   trim_topk_rows_cols, truncate_entries)

__version__ = "0.1.0"
