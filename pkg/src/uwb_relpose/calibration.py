"""Per-pair range bias estimation from a rotation sweep with ground truth."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .dataset import Dataset
from .geometry import DEFAULT_LAYOUT, AntennaLayout, Pose2D, distance_matrix, relative_pose
from .measurement import CalibrationTable
from .simulator import NoiseModel, synth_ranges
from .weighting import DEFAULT_WEIGHTS, WeightParams, weight_matrix

MIN_COVERAGE = 100


class CoverageError(ValueError):
    """Too few unmasked samples to estimate the bias of an antenna pair."""

    def __init__(self, pair: tuple[int, int], count: int, required: int):
        self.pair = pair
        self.count = count
        super().__init__(f"pair {pair} has {count} usable records, need at least {required}")


@dataclass(frozen=True)
class CalibrationRecord:
    timestamp: float
    gt_pose_A: Pose2D
    gt_pose_B: Pose2D
    raw: np.ndarray

    @property
    def relative(self) -> Pose2D:
        return relative_pose(self.gt_pose_A, self.gt_pose_B)


def records_from_dataset(data: Dataset) -> list[CalibrationRecord]:
    if not data.has_ground_truth:
        raise ValueError("calibration needs ground truth for every record")
    return [
        CalibrationRecord(float(t), Pose2D.from_array(a), Pose2D.from_array(b), z.copy())
        for t, a, b, z in zip(data.t, data.gt_a, data.gt_b, data.ranges)
    ]


def _errors_and_weights(records, layout, mask_params):
    n = layout.count
    errs = np.empty((len(records), n, n))
    wts = np.empty((len(records), n, n))
    for k, rec in enumerate(records):
        rel = rec.relative
        errs[k] = np.asarray(rec.raw, dtype=float) - distance_matrix(layout, rel)
        wts[k] = weight_matrix(rel, mask_params, layout)
    return errs, wts


def estimate_bias(records, layout: AntennaLayout = DEFAULT_LAYOUT, mask_params: WeightParams = DEFAULT_WEIGHTS,
                  mask_threshold: float = 1.0, method: str = "mean",
                  min_coverage: int = MIN_COVERAGE) -> CalibrationTable:
    """Average range error per pair, ignoring records the weight geometry flags as obstructed.

    A record contributes to pair ``(i, j)`` only when ``w_ij`` at its
    ground-truth relative pose is at least ``mask_threshold``.  ``method`` is
    ``"mean"`` or ``"median"``.  Missing raw values (``nan``) are skipped.
    """
    if method not in ("mean", "median"):
        raise ValueError(f"unknown method {method!r}")
    if not 0.0 <= mask_threshold <= 1.0:
        raise ValueError("mask_threshold must lie in [0, 1]")
    errs, wts = _errors_and_weights(list(records), layout, mask_params)
    keep = (wts >= mask_threshold) & np.isfinite(errs)
    n = layout.count
    mu = np.empty((n, n))
    for i in range(n):
        for j in range(n):
            sel = errs[keep[:, i, j], i, j]
            if sel.size < min_coverage:
                raise CoverageError((i + 1, j + 1), int(sel.size), min_coverage)
            mu[i, j] = np.median(sel) if method == "median" else math.fsum(sel) / sel.size
    return CalibrationTable(mu)


def estimate_bias_trimmed(records, layout: AntennaLayout = DEFAULT_LAYOUT, trim_fraction: float = 0.2,
                          min_coverage: int = MIN_COVERAGE) -> CalibrationTable:
    """Fallback without a heading mask: drop the largest ``trim_fraction`` of errors per pair, average the rest."""
    if not 0.0 <= trim_fraction < 1.0:
        raise ValueError("trim_fraction must lie in [0, 1)")
    records = list(records)
    n = layout.count
    errs = np.stack([np.asarray(r.raw, dtype=float) - distance_matrix(layout, r.relative) for r in records])
    mu = np.empty((n, n))
    for i in range(n):
        for j in range(n):
            e = np.sort(errs[np.isfinite(errs[:, i, j]), i, j])
            keep = e[: int(math.floor(len(e) * (1.0 - trim_fraction)))]
            if keep.size < min_coverage:
                raise CoverageError((i + 1, j + 1), int(keep.size), min_coverage)
            mu[i, j] = math.fsum(keep) / keep.size
    return CalibrationTable(mu)


@dataclass(frozen=True)
class SweepProtocol:
    """Robot B spins in place while robot A steps its heading between spins."""

    distance: float = 3.0
    spin_rate_deg: float = 60.0
    a_step_deg: float = 30.0
    a_steps: int = 12
    a_turn_time: float = 1.5
    rate_hz: float = 50.0

    @property
    def duration(self) -> float:
        return self.a_steps * (360.0 / self.spin_rate_deg + self.a_turn_time)


def sweep_poses(protocol: SweepProtocol = SweepProtocol()):
    """World-frame ground truth for the sweep: ``(t, poses_a, poses_b)``."""
    spin = 360.0 / protocol.spin_rate_deg
    stage = spin + protocol.a_turn_time
    m = int(round(protocol.duration * protocol.rate_hz))
    t = np.arange(m) / protocol.rate_hz
    k = np.minimum((t // stage).astype(int), protocol.a_steps - 1)
    local = t - k * stage
    spinning = local < spin
    b_heading = np.radians(protocol.spin_rate_deg) * (k * spin + np.where(spinning, local, spin))
    turn_frac = np.where(spinning, 0.0, (local - spin) / protocol.a_turn_time)
    a_heading = np.radians(protocol.a_step_deg) * (k + np.clip(turn_frac, 0.0, 1.0))
    poses_a = np.column_stack([np.zeros(m), np.zeros(m), a_heading])
    poses_b = np.column_stack([np.full(m, protocol.distance), np.zeros(m), b_heading])
    return t, poses_a, poses_b


def generate_calibration_sweep(distance: float = 3.0, rng: np.random.Generator | None = None,
                               noise: NoiseModel | None = None, layout: AntennaLayout = DEFAULT_LAYOUT,
                               protocol: SweepProtocol | None = None) -> list[CalibrationRecord]:
    """Simulated bias-calibration session with ground truth at every tick."""
    protocol = protocol or SweepProtocol(distance=distance)
    if not protocol.distance > 2.0 * layout.radius:
        raise ValueError("robots must be further apart than one antenna diameter")
    noise = noise or NoiseModel.hardware()
    t, pa, pb = sweep_poses(protocol)
    records = []
    for tk, a, b in zip(t, pa, pb):
        rec = CalibrationRecord(float(tk), Pose2D.from_array(a), Pose2D.from_array(b), np.empty(0))
        records.append(replace(rec, raw=synth_ranges(rec.relative, layout, noise, rng)))
    return records


def sweep_dataset(records) -> Dataset:
    records = list(records)
    return Dataset(
        np.array([r.timestamp for r in records]),
        np.array([r.gt_pose_A.as_array() for r in records]),
        np.array([r.gt_pose_B.as_array() for r in records]),
        np.stack([r.raw for r in records]),
    )
