"""Dataset replay through the estimators and error statistics."""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .dataset import Dataset
from .estimator import EstimatorConfig, Variant, solve_batch, solve_two_stage_batch
from .geometry import DEFAULT_LAYOUT, AntennaLayout, relative_pose, wrap_angle
from .measurement import CalibrationTable, MeasurementWindow, NoDataError

log = logging.getLogger(__name__)

DEFAULT_ESTIMATE_RATE = 10.0


def position_error(est, gt) -> np.ndarray:
    est, gt = np.atleast_2d(est), np.atleast_2d(gt)
    return np.hypot(est[:, 0] - gt[:, 0], est[:, 1] - gt[:, 1])


def heading_error(est_theta, gt_theta):
    """Absolute wrapped heading difference in [0, pi]."""
    return np.abs(wrap_angle(np.asarray(est_theta, dtype=float) - np.asarray(gt_theta, dtype=float)))


def interpolate_ground_truth(t: np.ndarray, poses: np.ndarray, tq) -> np.ndarray:
    """World poses at times ``tq``: linear in position, shortest-arc in heading."""
    t = np.asarray(t, dtype=float)
    poses = np.asarray(poses, dtype=float)
    tq = np.atleast_1d(np.asarray(tq, dtype=float))
    heading = poses[:, 2].copy()
    heading[1:] = heading[0] + np.cumsum(wrap_angle(np.diff(heading)))
    out = np.column_stack(
        [np.interp(tq, t, poses[:, 0]), np.interp(tq, t, poses[:, 1]), np.interp(tq, t, heading)]
    )
    out[:, 2] = wrap_angle(out[:, 2])
    return out


def preprocess(window: MeasurementWindow, table: CalibrationTable, variant: Variant) -> np.ndarray:
    """Measurement fed to the solver for ``variant`` (raw, shifted, averaged, or both)."""
    z = window.mean_matrix() if variant.uses_average else window.latest_matrix()
    if variant.uses_bias:
        z = z - table.mu
    return z


@dataclass
class Series:
    name: str
    config: EstimatorConfig
    t: np.ndarray
    estimates: np.ndarray
    converged: np.ndarray
    ground_truth: np.ndarray | None = None

    def errors(self) -> tuple[np.ndarray, np.ndarray] | None:
        if self.ground_truth is None:
            return None
        return (
            position_error(self.estimates, self.ground_truth),
            heading_error(self.estimates[:, 2], self.ground_truth[:, 2]),
        )

    def to_dict(self) -> dict:
        d = {
            "t": self.t.tolist(),
            "x": self.estimates[:, 0].tolist(),
            "y": self.estimates[:, 1].tolist(),
            "theta": self.estimates[:, 2].tolist(),
            "converged": self.converged.tolist(),
        }
        if self.ground_truth is not None:
            d.update(
                gt_x=self.ground_truth[:, 0].tolist(),
                gt_y=self.ground_truth[:, 1].tolist(),
                gt_theta=self.ground_truth[:, 2].tolist(),
            )
        return d


@dataclass
class TrialReport:
    series: dict
    summary: dict | None = None
    meta: dict = field(default_factory=dict)

    def to_dict(self, include_series: bool = True) -> dict:
        d = {"meta": self.meta, "summary": self.summary}
        if include_series:
            d["series"] = {k: s.to_dict() for k, s in self.series.items()}
        return d

    def to_json(self, include_series: bool = True) -> str:
        return json.dumps(self.to_dict(include_series), indent=2)


def _stats(values: np.ndarray) -> dict:
    return {"mean": float(values.mean()), "max": float(values.max()), "std": float(values.std())}


def summarize(report: TrialReport) -> dict:
    """Mean/max/population-std of position error [m] and absolute heading error [deg] per algorithm."""
    summary = {}
    for name, s in report.series.items():
        errs = s.errors()
        if errs is None or len(errs[0]) == 0:
            continue
        pos, head = errs
        summary[name] = {"position_m": _stats(pos), "heading_deg": _stats(np.degrees(head)), "count": int(len(pos))}
    if not summary:
        raise NoDataError("no estimates with ground truth to summarize")
    return summary


def summary_table(summary: dict) -> str:
    """Monospace table: one row per algorithm, Mean/Max/Std for both error kinds."""
    names = list(summary)
    wname = max([len("Method")] + [len(n) for n in names])
    head1 = f"{'':<{wname}} | {'Position error [m]':^26} | {'Abs heading error [deg]':^26}"
    head2 = f"{'Method':<{wname}} | {'Mean':>8} {'Max':>8} {'Std':>8} | {'Mean':>8} {'Max':>8} {'Std':>8}"
    lines = [head1, head2, "-" * len(head2)]
    for n in names:
        p, h = summary[n]["position_m"], summary[n]["heading_deg"]
        lines.append(
            f"{n:<{wname}} | {p['mean']:>8.3f} {p['max']:>8.3f} {p['std']:>8.3f} |"
            f" {h['mean']:>8.2f} {h['max']:>8.2f} {h['std']:>8.2f}"
        )
    return "\n".join(lines) + "\n"


def _names(configs) -> list[str]:
    names, seen = [], {}
    for cfg in configs:
        base = cfg.name
        seen[base] = seen.get(base, 0) + 1
        names.append(base if seen[base] == 1 else f"{base} #{seen[base]}")
    return names


def estimate_instants(t: np.ndarray, rate_hz: float) -> np.ndarray:
    """Indices of the records at which an estimate is produced."""
    if not rate_hz > 0:
        raise ValueError("estimate rate must be > 0")
    period = 1.0 / rate_hz
    picks = []
    if len(t) == 0:
        return np.array(picks, dtype=int)
    next_t = t[0]
    for k, tk in enumerate(t):
        if tk >= next_t - 1e-9:
            picks.append(k)
            while next_t <= tk + 1e-9:
                next_t += period
    return np.array(picks, dtype=int)


def replay(dataset: Dataset, configs, table: CalibrationTable | None = None,
           layout: AntennaLayout = DEFAULT_LAYOUT, estimate_rate_hz: float = DEFAULT_ESTIMATE_RATE,
           skip_warmup: bool = False) -> TrialReport:
    """Stream ``dataset`` through each config's measurement window and estimator.

    Estimates are produced at ``estimate_rate_hz``; the Weighted variant uses
    the two-stage solve, the others solve the unweighted objective from the
    origin.  With ``skip_warmup`` the first ``window - 1`` records produce no
    estimates.
    """
    configs = [configs] if isinstance(configs, EstimatorConfig) else list(configs)
    if table is None:
        table = CalibrationTable.zeros(dataset.n)
    if table.n != dataset.n or layout.count != dataset.n:
        raise ValueError("calibration table, layout and dataset disagree on the antenna count")
    picks = estimate_instants(dataset.t, estimate_rate_hz)
    has_gt = dataset.has_ground_truth
    if not has_gt:
        log.warning("dataset has no ground truth; error metrics are skipped")
    series = {}
    for name, cfg in zip(_names(configs), configs):
        window = MeasurementWindow(dataset.n, cfg.window)
        pick_set = set(picks.tolist())
        times, zs = [], []
        for k in range(len(dataset)):
            window.push_raw(dataset.ranges[k])
            if k not in pick_set or (skip_warmup and k < cfg.window - 1):
                continue
            try:
                z = preprocess(window, table, cfg.variant)
            except NoDataError:
                continue
            times.append(dataset.t[k])
            zs.append(z)
        times = np.array(times)
        if zs:
            Z = np.stack(zs)
            if cfg.variant.weighted:
                res = solve_two_stage_batch(Z, layout, cfg)
            else:
                res = solve_batch(Z, np.zeros((len(Z), 3)), layout, cfg)
            est, conv = res.poses, res.converged
        else:
            est, conv = np.zeros((0, 3)), np.zeros(0, dtype=bool)
        gt = None
        if has_gt and len(times):
            ga = interpolate_ground_truth(dataset.t, dataset.gt_a, times)
            gb = interpolate_ground_truth(dataset.t, dataset.gt_b, times)
            gt = np.array([relative_pose(a, b).as_array() for a, b in zip(ga, gb)])
        series[name] = Series(name, cfg, times, est, conv, gt)
    report = TrialReport(series, meta={
        "estimate_rate_hz": estimate_rate_hz,
        "records": len(dataset),
        "configs": {n: c.to_dict() for n, c in zip(_names(configs), configs)},
        "calibration": table.to_dict(),
        "ground_truth": has_gt,
    })
    if has_gt:
        try:
            report.summary = summarize(report)
        except NoDataError:
            report.summary = None
    return report


def all_variants(base: EstimatorConfig | None = None) -> list[EstimatorConfig]:
    base = base or EstimatorConfig()
    return [base.with_variant(v) for v in Variant]
