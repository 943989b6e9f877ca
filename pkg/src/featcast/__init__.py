"""Cache-then-forecast feature reuse for iterative samplers.

Finite-difference caches extrapolate intermediate network features across
skipped sampler steps with a truncated Taylor expansion.
"""

from .analytic import AnalyticTrajectory, analytic_eval
from .denoiser import DenoiserDims, ToyDenoiser, cached_model, denoiser_forward
from .forecast import (
    ScheduleError,
    SlotId,
    Submodule,
    TaylorCache,
    binomial_difference,
    cache_update,
    effective_order,
    linear_predict,
    predict,
)
from .metrics import FlopLedger, count_flops, divergence_report, verify_error_bound
from .pca import TrajectoryMatrix, derivative_trajectory, pca_project
from .sampler import SamplerConfig, plain_sample, run_cell, sample
from .schedule import ActivationSchedule, build_uniform, theoretical_speedup
from .tensor import FeatureTensor, ShapeMismatchError, axpy, l2_distance
from .trajectory_io import RunReport, TrajectoryRecorder, read_trajectory, write_trajectory

__version__ = "0.1.0"
