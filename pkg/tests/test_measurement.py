import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from uwb_relpose.measurement import (
    REFERENCE_BIASES,
    CalibrationTable,
    MeasurementWindow,
    NoDataError,
    RangeMatrix,
    calibrated_matrix,
    calibrated_range,
    push_raw,
)


def filled(values, window=50, n=4):
    w = MeasurementWindow(n, window)
    for v in values:
        w.push_raw(np.full((n, n), float(v)))
    return w


def test_single_push_and_eviction():
    w = MeasurementWindow(4, 50)
    push_raw(w, np.ones((4, 4)))
    assert w.count(1, 1) == 1
    w = filled([1.0] * 51)
    assert w.count(2, 3) == 50


def test_fifo_keeps_most_recent_samples():
    w = filled(range(1, 61))
    assert list(w.buffers[0][0]) == [float(v) for v in range(11, 61)]


def test_shape_mismatch_is_rejected():
    with pytest.raises(ValueError):
        MeasurementWindow(4, 5).push_raw(np.ones((3, 3)))


@pytest.mark.parametrize(
    "values, window, mu, expected",
    [
        ([5.0] * 50, 50, 0.268, 4.732),
        ([2.5], 1, 0.0, 2.5),
        ([1.0, 2.0, 3.0], 3, 0.5, 1.5),
    ],
)
def test_calibrated_range_examples(values, window, mu, expected):
    table = CalibrationTable(np.full((4, 4), mu))
    assert calibrated_range(filled(values, window), table, 1, 1) == pytest.approx(expected, abs=1e-12)


def test_reference_table_first_entry():
    w = filled([5.0] * 50)
    assert calibrated_range(w, CalibrationTable.reference(), 1, 1) == pytest.approx(4.732)
    assert CalibrationTable.reference().mu[2, 1] == 0.018


def test_empty_buffer_raises_no_data():
    with pytest.raises(NoDataError):
        calibrated_range(MeasurementWindow(), CalibrationTable.zeros(), 1, 1)


def test_nan_samples_are_skipped():
    w = MeasurementWindow(4, 3)
    z = np.full((4, 4), 2.0)
    z[0, 1] = np.nan
    w.push_raw(z)
    assert w.count(1, 2) == 0
    assert w.count(1, 1) == 1
    with pytest.raises(NoDataError):
        w.mean(1, 2)


def test_warmup_averages_held_samples():
    w = filled([1.0, 3.0], window=50)
    assert w.mean(4, 4) == 2.0


def test_calibrated_matrix_cases():
    rng = np.random.default_rng(0)
    z = rng.uniform(1, 5, (4, 4))
    w = MeasurementWindow(4, 10).push_raw(RangeMatrix(z, 1.5))
    out = calibrated_matrix(w, CalibrationTable(REFERENCE_BIASES))
    np.testing.assert_allclose(out.values, z - REFERENCE_BIASES)
    assert out.timestamp == 1.5
    const = filled([2.0, 4.0], window=10)
    np.testing.assert_allclose(calibrated_matrix(const, CalibrationTable.zeros()).values, 3.0)


def test_brute_force_mean_oracle():
    rng = np.random.default_rng(11)
    samples = rng.normal(3.0, 0.2, (200, 4, 4))
    w = MeasurementWindow(4, 50)
    mu = rng.uniform(0, 0.3, (4, 4))
    for k, s in enumerate(samples):
        w.push_raw(s)
        lo = max(0, k + 1 - 50)
        oracle = np.array([[math.fsum(samples[lo : k + 1, i, j]) / (k + 1 - lo) for j in range(4)] for i in range(4)])
        np.testing.assert_array_equal(calibrated_matrix(w, CalibrationTable(mu)).values, oracle - mu)


@settings(max_examples=50)
@given(st.lists(st.floats(0, 10), min_size=1, max_size=80), st.floats(-1, 1), st.integers(1, 60))
def test_linearity_in_offset(values, c, window):
    mu = CalibrationTable(np.full((4, 4), 0.2))
    shifted = filled([v + c for v in values], window)
    base = filled(values, window)
    lhs = calibrated_range(shifted, mu, 2, 3)
    rhs = calibrated_range(base, CalibrationTable(mu.mu - c), 2, 3)
    assert lhs == pytest.approx(rhs, abs=1e-9)


@settings(max_examples=50)
@given(st.lists(st.floats(0, 10), max_size=120), st.integers(1, 60))
def test_buffer_never_exceeds_window(values, window):
    w = filled(values, window)
    assert np.all(w.counts() <= window)


def test_table_json_round_trip(tmp_path):
    table = CalibrationTable.reference()
    assert table.to_dict()["N"] == 4
    path = tmp_path / "cal.json"
    table.save(path)
    np.testing.assert_array_equal(CalibrationTable.load(path).mu, table.mu)
    with pytest.raises(ValueError):
        CalibrationTable.from_dict({"N": 3, "mu": table.mu.tolist()})


def test_snapshot_is_independent():
    w = filled([1.0, 2.0], window=5)
    snap = w.snapshot()
    w.push_raw(np.full((4, 4), 10.0))
    assert snap.mean(1, 1) == 1.5
    assert w.mean(1, 1) == pytest.approx(13.0 / 3.0)


def test_pair_index_checked():
    with pytest.raises(IndexError):
        MeasurementWindow().count(0, 1)
    with pytest.raises(IndexError):
        filled([1.0]).mean(5, 1)
