"""Command-line entry point: ``uwb-relpose <subcommand> [flags]``.

Subcommands
    simulate   synthesize a dataset CSV (plus a ``.json`` sidecar)
    calibrate  estimate the per-pair bias table from a sweep dataset
    estimate   replay a dataset through one estimator, write a pose stream CSV
    eval       replay through several estimators, write report.json and a table
    table1     Monte-Carlo initialization-sensitivity study

Values from ``--config`` (JSON or TOML) are overridden by explicit flags.
Failures exit with status 1 and print a JSON error record on stderr.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .calibration import estimate_bias, generate_calibration_sweep, records_from_dataset, sweep_dataset
from .dataset import Dataset
from .estimator import EstimatorConfig, SolverConfig, Variant, load_config_mapping
from .evaluation import DEFAULT_ESTIMATE_RATE, all_variants, replay, summary_table
from .measurement import CalibrationTable
from .simulator import NoiseModel, TrajectorySpec, generate_trajectory, run_monte_carlo, simulate_dataset
from .weighting import WeightParams

log = logging.getLogger("uwb_relpose")

LOG_ENV = "UWB_RELPOSE_LOG"

# trajectory names accepted by ``simulate --traj``
TRAJECTORIES = {
    "static": dict(kind="static"),
    "rot-ccw": dict(kind="rotate"),
    "rot-cw": dict(kind="rotate", clockwise=True),
    "traj-ccw": dict(kind="circle", speed=0.5),
    "traj-cw": dict(kind="circle", speed=0.5, clockwise=True),
    "box": dict(kind="box"),
    "kidney-bean": dict(kind="kidney-bean", speed=0.5),
    "sweep": None,
}


class CliError(Exception):
    """A user-facing failure carrying a short machine-readable code."""

    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.code = code


def _write_text(path: Path, text: str) -> None:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="\n") as fh:
            fh.write(text)
    except OSError as exc:
        raise CliError("io", f"cannot write {path}: {exc.strerror or exc}") from exc


def _write_json(path: Path, obj) -> None:
    _write_text(path, json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _read_dataset(path) -> Dataset:
    try:
        return Dataset.read_csv(path)
    except OSError as exc:
        raise CliError("io", f"cannot read {path}: {exc.strerror or exc}") from exc


def _read_table(path, n: int) -> CalibrationTable:
    if path is None:
        log.info("no calibration table given; using zero biases")
        return CalibrationTable.zeros(n)
    try:
        return CalibrationTable.load(path)
    except OSError as exc:
        raise CliError("io", f"cannot read {path}: {exc.strerror or exc}") from exc


def _config_mapping(args) -> dict:
    if not args.config:
        return {}
    try:
        return load_config_mapping(args.config)
    except OSError as exc:
        raise CliError("io", f"cannot read {args.config}: {exc.strerror or exc}") from exc


def _setting(args, mapping: dict, flag: str, key: str, default):
    value = getattr(args, flag, None)
    if value is not None:
        return value
    return mapping.get(key, default)


def _estimator_config(args, mapping: dict, variant=None) -> EstimatorConfig:
    keys = ("variant", "sigma_deg", "rho_deg", "window_W", "solver")
    base = EstimatorConfig.from_dict({k: mapping[k] for k in keys if k in mapping})
    sigma = _setting(args, {}, "sigma_deg", "", base.weight_params.sigma_deg)
    rho = _setting(args, {}, "rho_deg", "", base.weight_params.rho_deg)
    window = _setting(args, {}, "window", "", base.window)
    chosen = variant if variant is not None else _setting(args, {}, "variant", "", base.variant)
    return EstimatorConfig(Variant.parse(chosen), WeightParams.from_degrees(sigma, rho), base.solver, int(window))


def _sidecar(path: Path, command: str, args, extra: dict) -> None:
    record = {"command": command, "version": __version__, "seed": getattr(args, "seed", None)}
    record.update(extra)
    _write_json(path.with_name(path.name + ".json"), record)


# --- subcommands -------------------------------------------------------------


def cmd_simulate(args) -> int:
    mapping = _config_mapping(args)
    seed = int(_setting(args, mapping, "seed", "seed", 0))
    noise_name = _setting(args, mapping, "noise", "noise", "hardware")
    noise = NoiseModel.preset(noise_name)
    rng = np.random.default_rng(seed)
    out = Path(args.out)
    traj = args.traj
    if TRAJECTORIES[traj] is None:
        data = sweep_dataset(generate_calibration_sweep(rng=rng, noise=noise))
        spec_dict = {"kind": "sweep"}
    else:
        fields = dict(TRAJECTORIES[traj])
        rate = _setting(args, mapping, "rate_hz", "rate_hz", 50.0)
        fields["rate_hz"] = float(rate)
        for flag, key in (("revolutions", "revolutions"), ("duration", "duration"), ("speed", "speed")):
            value = _setting(args, mapping, flag, key, None)
            if value is not None:
                fields[key] = float(value)
        spec = TrajectorySpec(**fields)
        data = simulate_dataset(generate_trajectory(spec), noise=noise, rng=rng)
        spec_dict = spec.to_dict()
    _write_text(out, data.to_csv())
    _sidecar(out, "simulate", args, {"seed": seed, "traj": traj, "trajectory": spec_dict,
                                     "noise": noise_name, "noise_model": noise.to_dict(), "records": len(data)})
    log.info("wrote %d records to %s", len(data), out)
    return 0


def cmd_calibrate(args) -> int:
    data = _read_dataset(args.dataset)
    table = estimate_bias(records_from_dataset(data), method=args.method)
    out = Path(args.out)
    table.save(out)
    _sidecar(out, "calibrate", args, {"dataset": str(args.dataset), "method": args.method, "records": len(data)})
    return 0


def _rate(args, mapping) -> float:
    return float(_setting(args, mapping, "rate_hz", "estimate_rate_hz", DEFAULT_ESTIMATE_RATE))


def cmd_estimate(args) -> int:
    mapping = _config_mapping(args)
    data = _read_dataset(args.dataset)
    table = _read_table(args.table, data.n)
    cfg = _estimator_config(args, mapping)
    rate = _rate(args, mapping)
    report = replay(data, [cfg], table, estimate_rate_hz=rate)
    series = next(iter(report.series.values()))
    lines = ["t,x,y,theta,converged"]
    for t, (x, y, th), ok in zip(series.t, series.estimates, series.converged):
        lines.append(",".join(repr(float(v)) for v in (t, x, y, th)) + f",{int(ok)}")
    out = Path(args.out)
    _write_text(out, "\n".join(lines) + "\n")
    _sidecar(out, "estimate", args, {"dataset": str(args.dataset), "table": table.to_dict(),
                                     "config": cfg.to_dict(), "estimate_rate_hz": rate})
    return 0


def cmd_eval(args) -> int:
    mapping = _config_mapping(args)
    data = _read_dataset(args.dataset)
    table = _read_table(args.table, data.n)
    names = args.variants or mapping.get("variants")
    if names:
        configs = [_estimator_config(args, mapping, v) for v in names]
    else:
        configs = all_variants(_estimator_config(args, mapping))
    rate = _rate(args, mapping)
    report = replay(data, configs, table, estimate_rate_hz=rate)
    out = Path(args.out)
    report.meta["dataset"] = str(args.dataset)
    report.meta["summary_available"] = report.summary is not None
    _write_text(out / "report.json", report.to_json() + "\n")
    if report.summary is None:
        text = "summary unavailable: dataset has no ground truth\n"
    else:
        text = summary_table(report.summary)
    _write_text(out / "report.txt", text)
    sys.stdout.write(text)
    return 0


def cmd_table1(args) -> int:
    mapping = _config_mapping(args)
    seed = int(_setting(args, mapping, "seed", "seed", 0))
    trials = int(_setting(args, mapping, "trials", "trials", 10_000))
    jobs = int(_setting(args, mapping, "jobs", "jobs", 1))
    params = WeightParams.from_degrees(
        float(_setting(args, mapping, "sigma_deg", "sigma_deg", 30.0)),
        float(_setting(args, mapping, "rho_deg", "rho_deg", 90.0)),
    )
    solver = SolverConfig(**mapping.get("solver", {}))
    report = run_monte_carlo(trials, seed=seed, jobs=jobs, weight_params=params, solver=solver)
    out = Path(args.out)
    data = report.to_dict()
    data["jobs"] = jobs
    _write_json(out / "table1.json", data)
    text = report.to_text()
    _write_text(out / "table1.txt", text)
    sys.stdout.write(text)
    return 0


# --- parser ------------------------------------------------------------------


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return value


def _seed(text: str) -> int:
    value = int(text)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def _estimator_flags(p: argparse.ArgumentParser, variant: bool = True) -> None:
    if variant:
        p.add_argument("--variant", choices=[v.value for v in Variant], help="estimation algorithm")
    p.add_argument("--sigma-deg", type=float, help="weight stop-band end angle [deg] (default 30)")
    p.add_argument("--rho-deg", type=float, help="weight pass-band start angle [deg] (default 90)")
    p.add_argument("--window", type=_positive_int, help="moving-average window W in samples (default 50)")
    p.add_argument("--rate-hz", type=float, help="estimate rate [Hz] (default 10)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="uwb-relpose", description="Multi-antenna UWB relative pose tools.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON or TOML file with default settings; flags win")

    p = sub.add_parser("simulate", parents=[common], help="synthesize a dataset CSV")
    p.add_argument("--traj", choices=sorted(TRAJECTORIES), default="box", help="trajectory of robot B")
    p.add_argument("--noise", choices=["table1", "hardware", "none"], help="noise preset (default hardware)")
    p.add_argument("--seed", type=_seed, help="random seed (default 0)")
    p.add_argument("--rate-hz", type=float, help="measurement rate [Hz] (default 50)")
    p.add_argument("--revolutions", type=float, help="turns for rot-* trajectories (default 5)")
    p.add_argument("--duration", type=float, help="duration [s]; default one natural period")
    p.add_argument("--speed", type=float, help="linear speed [m/s] for driving trajectories")
    p.add_argument("--out", required=True, help="output CSV path")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("calibrate", parents=[common], help="estimate per-pair biases from a sweep dataset")
    p.add_argument("--dataset", required=True, help="sweep CSV with ground truth")
    p.add_argument("--method", choices=["mean", "median"], default="mean", help="per-pair statistic")
    p.add_argument("--out", required=True, help="output calibration JSON")
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("estimate", parents=[common], help="write the pose stream of one estimator")
    p.add_argument("--dataset", required=True, help="dataset CSV")
    p.add_argument("--table", help="calibration JSON (default zero biases)")
    _estimator_flags(p)
    p.add_argument("--out", required=True, help="output pose CSV")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("eval", parents=[common], help="compare estimators on a dataset")
    p.add_argument("--dataset", required=True, help="dataset CSV")
    p.add_argument("--table", help="calibration JSON (default zero biases)")
    p.add_argument("--variant", dest="variants", action="append", choices=[v.value for v in Variant],
                   help="algorithm to include; repeatable (default all five)")
    _estimator_flags(p, variant=False)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("table1", parents=[common], help="Monte-Carlo initialization-sensitivity study")
    p.add_argument("--trials", type=_positive_int, help="number of trials (default 10000)")
    p.add_argument("--seed", type=_seed, help="random seed (default 0)")
    p.add_argument("--jobs", type=_positive_int, help="worker processes (default 1)")
    p.add_argument("--sigma-deg", type=float, help="weight stop-band end angle [deg] (default 30)")
    p.add_argument("--rho-deg", type=float, help="weight pass-band start angle [deg] (default 90)")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_table1)
    return parser


def _setup_logging() -> None:
    level = os.environ.get(LOG_ENV, "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING), format="%(levelname)s %(name)s: %(message)s")


def main(argv=None) -> int:
    _setup_logging()
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        code, message = exc.code, str(exc)
    except (ValueError, LookupError) as exc:
        code, message = type(exc).__name__, str(exc)
    record = {"error": code, "message": message, "command": args.command}
    sys.stderr.write(json.dumps(record) + "\n")
    return 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
