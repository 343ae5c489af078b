import math

import numpy as np
import pytest

from uwb_relpose.estimator import EstimatorConfig, Variant, solve
from uwb_relpose.geometry import DEFAULT_LAYOUT, Pose2D, distance_matrix
from uwb_relpose.measurement import REFERENCE_BIASES
from uwb_relpose.simulator import (
    TABLE1_COMPARISONS,
    RunSpec,
    NoiseModel,
    TrajectorySpec,
    generate_trajectory,
    run_monte_carlo,
    sample_table1_pose,
    simulate_dataset,
    synth_ranges,
    trial_rng,
)
from uwb_relpose.weighting import weight_matrix


def test_table1_pose_sampling():
    rng = np.random.default_rng(0)
    poses = np.array([sample_table1_pose(rng).as_array() for _ in range(10_000)])
    assert np.all(np.hypot(poses[:, 0], poses[:, 1]) >= 1.0)
    assert np.all(np.abs(poses[:, :2]) <= 5.0)
    assert abs(poses[:, 0].mean()) <= 0.1
    again = np.random.default_rng(0)
    np.testing.assert_array_equal(poses[:50], [sample_table1_pose(again).as_array() for _ in range(50)])


def test_trial_streams_are_independent_of_order():
    a = trial_rng(42, 7).normal(size=5)
    trial_rng(42, 3).normal(size=100)
    np.testing.assert_array_equal(a, trial_rng(42, 7).normal(size=5))
    assert not np.array_equal(a, trial_rng(42, 8).normal(size=5))


def test_noise_free_synth_is_exact():
    pose = Pose2D(2.0, 1.0, 0.3)
    np.testing.assert_array_equal(synth_ranges(pose, noise=NoiseModel.table1(0.0)), distance_matrix(DEFAULT_LAYOUT, pose))


def test_gaussian_noise_statistics():
    rng = np.random.default_rng(1)
    pose = Pose2D(3.0, -1.0, 1.0)
    d = distance_matrix(DEFAULT_LAYOUT, pose)
    err = np.array([synth_ranges(pose, noise=NoiseModel.table1(), rng=rng)[0, 0] - d[0, 0] for _ in range(10_000)])
    assert abs(err.mean()) <= 0.01
    assert abs(err.std() - 0.2) <= 0.01


def test_fully_obstructed_pair_error():
    pose = Pose2D(-3.0, 0.0, math.pi)  # A1 and B1 both face the other robot
    assert weight_matrix(pose)[0, 0] == 0.0
    rng = np.random.default_rng(2)
    d = distance_matrix(DEFAULT_LAYOUT, pose)[0, 0]
    err = np.array([synth_ranges(pose, noise=NoiseModel.hardware(), rng=rng)[0, 0] - d for _ in range(5000)])
    assert err.mean() == pytest.approx(0.678, abs=0.01)


def test_obstruction_is_maximal_where_weight_vanishes():
    rng = np.random.default_rng(3)
    noise = NoiseModel(0.0, None, 0.41)
    for _ in range(200):
        r, b = rng.uniform(1, 5), rng.uniform(-math.pi, math.pi)
        pose = Pose2D(r * math.cos(b), r * math.sin(b), rng.uniform(-math.pi, math.pi))
        extra = synth_ranges(pose, noise=noise) - distance_matrix(DEFAULT_LAYOUT, pose)
        W = weight_matrix(pose)
        np.testing.assert_allclose(extra[W == 0.0], 0.41)
        assert np.all(extra[W > 0.0] < 0.41)
        assert np.all(extra >= 0.0)


def test_presets():
    hw = NoiseModel.hardware()
    assert hw.gaussian_sigma == 0.2 and hw.obstruction_extra_bias == 0.41
    np.testing.assert_array_equal(hw.bias(4), REFERENCE_BIASES)
    t1 = NoiseModel.preset("table1")
    assert t1.bias_table is None and t1.obstruction_extra_bias == 0.0
    assert NoiseModel.preset("none").gaussian_sigma == 0.0
    with pytest.raises(ValueError):
        NoiseModel.preset("loud")
    with pytest.raises(ValueError):
        NoiseModel(-0.1)


def test_gaussian_noise_needs_rng():
    with pytest.raises(ValueError):
        synth_ranges(Pose2D(3, 0, 0), noise=NoiseModel.table1())


def test_rotate_in_place_five_revolutions():
    traj = generate_trajectory(TrajectorySpec(kind="rotate", duration=30.0))
    assert len(traj) == 1501
    heading = traj.poses_b[:, 2]
    assert heading[-1] - heading[0] == pytest.approx(10 * math.pi)
    assert np.ptp(traj.poses_b[:, :2], axis=0).max() == 0.0


def test_rotate_clockwise_and_revolutions():
    traj = generate_trajectory(TrajectorySpec(kind="rotate", revolutions=2, clockwise=True))
    assert traj.poses_b[-1, 2] - traj.poses_b[0, 2] == pytest.approx(-4 * math.pi)


def test_box_is_closed_loop():
    traj = generate_trajectory(TrajectorySpec(kind="box"))
    p = traj.poses_b
    np.testing.assert_allclose(p[-1, :2], p[0, :2], atol=1e-9)
    assert p[-1, 2] - p[0, 2] == pytest.approx(2 * math.pi)
    assert np.ptp(p[:, 0]) == pytest.approx(8.0) and np.ptp(p[:, 1]) == pytest.approx(6.0)
    step = np.hypot(*np.diff(p[:, :2], axis=0).T) * traj.t[1] ** -1
    assert step.max() <= 1.0 + 1e-9
    assert np.abs(np.diff(p[:, 2])).max() * 50 <= math.radians(60) + 1e-9


@pytest.mark.parametrize("kind", ["static", "circle", "kidney-bean"])
def test_other_trajectories_respect_limits(kind):
    traj = generate_trajectory(TrajectorySpec(kind=kind, speed=0.5))
    p = traj.poses_b
    dt = traj.t[1] - traj.t[0]
    assert np.hypot(*np.diff(p[:, :2], axis=0).T).max() / dt <= 1.0 + 1e-6
    assert np.abs(np.diff(p[:, 2])).max() / dt <= math.radians(60) + 1e-6
    if kind == "static":
        assert np.ptp(p, axis=0).max() == 0.0


def test_waypoints():
    traj = generate_trajectory(TrajectorySpec(kind="waypoints", waypoints=((0, 3), (3, 3), (3, 0)), speed=0.5))
    np.testing.assert_allclose(traj.poses_b[0, :2], [0, 3])
    np.testing.assert_allclose(traj.poses_b[-1, :2], [3, 0], atol=1e-9)
    with pytest.raises(ValueError):
        generate_trajectory(TrajectorySpec(kind="waypoints", waypoints=((0, 0),)))


@pytest.mark.parametrize(
    "spec",
    [
        dict(kind="rotate", angular_speed_deg=90.0),
        dict(kind="box", speed=1.5),
        dict(kind="circle", speed=2.0, radius=3.0),
    ],
)
def test_kinematic_limits_enforced(spec):
    with pytest.raises(ValueError):
        generate_trajectory(TrajectorySpec(**spec))


def test_invalid_trajectory_spec():
    with pytest.raises(ValueError):
        TrajectorySpec(kind="rotate", rate_hz=0)
    with pytest.raises(ValueError):
        TrajectorySpec(kind="zigzag")


def test_simulated_dataset_round_trip_identity():
    traj = generate_trajectory(TrajectorySpec(kind="circle", speed=0.5, duration=5.0))
    data = simulate_dataset(traj, noise=NoiseModel.noiseless())
    rel = traj.relative()
    for k in range(0, len(data), 50):
        res = solve(data.ranges[k], x0=rel[k], config=EstimatorConfig(Variant.WEIGHTED))
        np.testing.assert_allclose(res.pose.as_array()[:2], rel[k, :2], atol=1e-9)


def test_monte_carlo_reproducible_and_chunk_independent():
    a = run_monte_carlo(60, seed=5)
    b = run_monte_carlo(60, seed=5, jobs=3)
    assert a.to_dict() == b.to_dict()
    assert [r["label"] for r in a.rows] == [c.label for c in TABLE1_COMPARISONS]
    assert a.row("unweighted: 0 vs x_gt")["mdpp_m"] < 0.01
    assert "MDPP" in a.to_text()
    for name in a.estimates:
        np.testing.assert_array_equal(a.estimates[name], b.estimates[name])


def test_monte_carlo_validation():
    with pytest.raises(ValueError):
        run_monte_carlo(0)
    with pytest.raises(ValueError):
        RunSpec("x", "weighted", "elsewhere")
