"""Plan and simulate compute-optimal adaptive training from scaling laws."""

from .lawcore import (
    AboveStartError,
    LawDomainError,
    LawFamily,
    PowerLaw,
    UnreachableError,
    asymptote,
    evaluate,
    inverse,
    inverse_clamped,
    inverse_slope,
    non_monotone_asymptotes,
    start_error,
)
from .lawfit import FitConfig, FitReport, RunSeries, fit, huber, objective, resample_log_equidistant
from .trajectory import (
    Trajectory,
    default_partition,
    frontier,
    savings,
    scheduled_compute,
    scheduled_error,
    simulate,
    to_step_schedule,
)
from .traverse import (
    ErrorPartition,
    Schedule,
    baseline_schedule,
    candidate_set,
    greedy_schedule,
    is_monotone,
    partition,
)

__version__ = "0.1.0"
