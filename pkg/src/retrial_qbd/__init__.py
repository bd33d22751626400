"""Stationary analysis of a multiserver retrial queue with one guard channel.

The queue is a level-dependent quasi-birth-death process (level = orbit size,
phase = busy channels).  The package computes the two nonzero rows of every
rate matrix in ``O(c)`` per level, the stationary distribution, blocking
probabilities, large-level expansions of the rate rows and tail diagnostics.
"""

__version__ = "0.1.0"

from .errors import (
    BoundaryResidualTooLarge,
    InvalidParameter,
    NoConvergence,
    NumericalBreakdown,
    OracleMismatch,
    RetrialQBDError,
    SingularSystem,
    SizeBudgetExceeded,
    TruncationOverflow,
    Unstable,
    WrongServerCount,
)
from .metrics import PerformanceReport, blocking, mean_busy_and_little, report, tail_diagnostics, tail_exponent
from .model import ModelParams, QbdBlocks, build_blocks, check_stability, validate
from .rate_matrix import (
    IterationSchedule,
    RateRows,
    closed_form_c2,
    compose_rows,
    embed_full,
    rate_rows,
    rate_step,
)
from .stationary import (
    BoundaryVector,
    StationaryDist,
    boundary_vector,
    stationary_distribution,
    truncation_point,
)
from .taylor import TaylorTable, build_table, eval_rows, leading_coeffs, relative_error

__all__ = [
    "BoundaryResidualTooLarge",
    "BoundaryVector",
    "InvalidParameter",
    "IterationSchedule",
    "ModelParams",
    "NoConvergence",
    "NumericalBreakdown",
    "OracleMismatch",
    "PerformanceReport",
    "QbdBlocks",
    "RateRows",
    "RetrialQBDError",
    "SingularSystem",
    "SizeBudgetExceeded",
    "StationaryDist",
    "TaylorTable",
    "TruncationOverflow",
    "Unstable",
    "WrongServerCount",
    "blocking",
    "boundary_vector",
    "build_blocks",
    "build_table",
    "check_stability",
    "closed_form_c2",
    "compose_rows",
    "embed_full",
    "eval_rows",
    "leading_coeffs",
    "mean_busy_and_little",
    "rate_rows",
    "rate_step",
    "relative_error",
    "report",
    "stationary_distribution",
    "tail_diagnostics",
    "tail_exponent",
    "truncation_point",
    "validate",
]
