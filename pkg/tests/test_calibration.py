from dataclasses import replace

import numpy as np
import pytest

from uwb_relpose.calibration import (
    CalibrationRecord,
    CoverageError,
    SweepProtocol,
    estimate_bias,
    estimate_bias_trimmed,
    generate_calibration_sweep,
    records_from_dataset,
    sweep_dataset,
    sweep_poses,
)
from uwb_relpose.measurement import REFERENCE_BIASES, CalibrationTable
from uwb_relpose.simulator import NoiseModel
from uwb_relpose.weighting import weight_matrix


@pytest.fixture(scope="module")
def hardware_sweep():
    return generate_calibration_sweep(rng=np.random.default_rng(21), noise=NoiseModel.hardware())


def test_protocol_shape():
    t, pa, pb = sweep_poses()
    assert len(t) == 4500
    assert SweepProtocol().duration == pytest.approx(90.0)
    assert SweepProtocol().a_steps * SweepProtocol().a_step_deg == 360
    np.testing.assert_allclose(pb[:, :2] - pa[:, :2], np.tile([3.0, 0.0], (len(t), 1)))
    assert np.degrees(pb[-1, 2]) == pytest.approx(12 * 360)
    assert np.degrees(pa[-1, 2]) == pytest.approx(360, abs=0.5)
    assert np.degrees(np.max(np.diff(pb[:, 2]))) * 50 <= 60 + 1e-9


def test_every_pair_fully_unobstructed_somewhere():
    records = generate_calibration_sweep(noise=NoiseModel.noiseless())
    W = np.stack([weight_matrix(r.relative) for r in records])
    assert np.all((W == 1.0).any(axis=0))


def test_zero_noise_zero_bias_is_exact():
    table = estimate_bias(generate_calibration_sweep(noise=NoiseModel.noiseless()))
    np.testing.assert_array_equal(table.mu, 0.0)


def test_zero_noise_reference_bias_is_recovered():
    noise = NoiseModel(0.0, CalibrationTable.reference(), 0.41)
    table = estimate_bias(generate_calibration_sweep(noise=noise))
    np.testing.assert_allclose(table.mu, REFERENCE_BIASES, atol=1e-12)


def test_uniform_bias_with_spikes():
    noise = NoiseModel(0.2, CalibrationTable(np.full((4, 4), 0.25)), 0.41)
    table = estimate_bias(generate_calibration_sweep(rng=np.random.default_rng(3), noise=noise))
    np.testing.assert_allclose(table.mu, 0.25, atol=0.015)


def test_hardware_round_trip(hardware_sweep):
    table = estimate_bias(hardware_sweep)
    assert np.abs(table.mu - REFERENCE_BIASES).max() <= 0.02
    spread = table.mu.max() - table.mu.min()
    assert 0.2 <= spread <= 0.3


def test_shift_equivariance(hardware_sweep):
    shifted = [replace(r, raw=r.raw + 0.37) for r in hardware_sweep]
    np.testing.assert_allclose(estimate_bias(shifted).mu, estimate_bias(hardware_sweep).mu + 0.37, atol=1e-12)


def test_masked_records_have_no_influence(hardware_sweep):
    base = estimate_bias(hardware_sweep).mu
    perturbed = []
    for r in hardware_sweep:
        W = weight_matrix(r.relative)
        perturbed.append(replace(r, raw=np.where(W < 1.0, r.raw + 50.0, r.raw)))
    np.testing.assert_array_equal(estimate_bias(perturbed).mu, base)


def test_median_method(hardware_sweep):
    table = estimate_bias(hardware_sweep, method="median")
    assert np.abs(table.mu - REFERENCE_BIASES).max() <= 0.03
    with pytest.raises(ValueError):
        estimate_bias(hardware_sweep, method="mode")


def test_coverage_guard_names_pair(hardware_sweep):
    with pytest.raises(CoverageError) as err:
        estimate_bias(hardware_sweep[:300])
    assert len(err.value.pair) == 2 and err.value.count < 100


def test_trimmed_fallback_on_clean_data():
    noise = NoiseModel(0.0, CalibrationTable.reference(), 0.0)
    table = estimate_bias_trimmed(generate_calibration_sweep(noise=noise))
    np.testing.assert_allclose(table.mu, REFERENCE_BIASES, atol=1e-12)


def test_sweep_requires_separation():
    with pytest.raises(ValueError):
        generate_calibration_sweep(distance=0.5)


def test_dataset_round_trip(hardware_sweep):
    data = sweep_dataset(hardware_sweep[:100])
    back = records_from_dataset(data)
    assert isinstance(back[0], CalibrationRecord)
    np.testing.assert_array_equal(back[5].raw, hardware_sweep[5].raw)
    assert back[5].relative == hardware_sweep[5].relative
