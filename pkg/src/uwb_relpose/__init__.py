"""Relative 2D pose between two robots from multi-antenna UWB ranging."""

__version__ = "0.1.0"

from .geometry import (
    DEFAULT_LAYOUT,
    AntennaLayout,
    DegenerateGeometryError,
    Pose2D,
    antenna_position,
    distance_matrix,
    pairwise_distance,
    relative_pose,
    wrap_angle,
)
from .weighting import DEFAULT_WEIGHTS, WeightParams, weight_A, weight_B, weight_matrix, weight_pair, weight_primitive
from .measurement import (
    REFERENCE_BIASES,
    CalibrationTable,
    MeasurementWindow,
    NoDataError,
    RangeMatrix,
    calibrated_matrix,
    calibrated_range,
)
from .dataset import Dataset, DatasetParseError
from .estimator import (
    EstimateResult,
    EstimatorConfig,
    SolverConfig,
    Variant,
    objective_gradient,
    objective_unweighted,
    objective_weighted,
    solve,
    solve_two_stage,
)
from .simulator import NoiseModel, TrajectorySpec, generate_trajectory, run_monte_carlo, simulate_dataset, synth_ranges
from .calibration import CalibrationRecord, estimate_bias, generate_calibration_sweep
from .evaluation import TrialReport, replay, summarize, summary_table
