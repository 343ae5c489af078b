"""From a calibration sweep to trajectory estimates.

1. Simulate a bias-calibration sweep with hardware-like noise.
2. Estimate the per-pair bias table and compare it with the true biases.
3. Simulate a box trajectory and a rotate-in-place trajectory.
4. Replay both through all five estimator variants and print error tables.

    python3 demos/calibrate_and_replay.py [seed]
"""

import sys

import numpy as np

from uwb_relpose import (
    REFERENCE_BIASES, NoiseModel, TrajectorySpec, estimate_bias, generate_calibration_sweep,
    generate_trajectory, replay, simulate_dataset, summary_table,
)
from uwb_relpose.evaluation import all_variants

seed = int(sys.argv[1]) if len(sys.argv) > 1 else 5
rng = np.random.default_rng(seed)
noise = NoiseModel.hardware()

records = generate_calibration_sweep(rng=rng, noise=noise)
table = estimate_bias(records)
print(f"calibration: {len(records)} records, max |mu_hat - mu| = {np.abs(table.mu - REFERENCE_BIASES).max():.4f} m\n")

for name, spec in [("box", TrajectorySpec(kind="box")), ("rotate", TrajectorySpec(kind="rotate", revolutions=2))]:
    data = simulate_dataset(generate_trajectory(spec), noise=noise, rng=rng)
    report = replay(data, all_variants(), table)
    print(f"{name}: {len(data)} records")
    print(summary_table(report.summary))
