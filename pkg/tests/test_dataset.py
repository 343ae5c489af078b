import numpy as np
import pytest

from uwb_relpose.dataset import Dataset, DatasetParseError, header, range_columns


def make(nan_gt=False, m=5):
    rng = np.random.default_rng(4)
    t = np.arange(m) / 50.0
    gt_a = rng.normal(size=(m, 3))
    gt_b = rng.normal(size=(m, 3))
    if nan_gt:
        gt_a[:] = np.nan
        gt_b[:] = np.nan
    z = rng.uniform(1, 5, (m, 4, 4))
    z[1, 2, 3] = np.nan
    return Dataset(t, gt_a, gt_b, z)


def test_header_layout():
    cols = header(4)
    assert cols[:7] == ["t", "gtA_x", "gtA_y", "gtA_theta", "gtB_x", "gtB_y", "gtB_theta"]
    assert cols[7:] == range_columns(4)
    assert len(range_columns(4)) == 16 and range_columns(4)[1] == "z_12"


@pytest.mark.parametrize("nan_gt", [False, True])
def test_round_trip_is_exact(tmp_path, nan_gt):
    data = make(nan_gt)
    path = tmp_path / "d.csv"
    text = data.to_csv(path)
    back = Dataset.read_csv(path)
    assert back.to_csv() == text
    np.testing.assert_array_equal(back.ranges, data.ranges)
    assert back.has_ground_truth is (not nan_gt)


@pytest.mark.parametrize(
    "mutate, line",
    [
        (lambda rows: rows.__setitem__(2, rows[2] + ",1.0"), 3),
        (lambda rows: rows.__setitem__(3, "x" + rows[3][rows[3].index(","):]), 4),
        (lambda rows: rows.__setitem__(2, rows[2][rows[2].index(","):]), 3),
    ],
)
def test_malformed_rows_report_line(mutate, line):
    rows = make().to_csv().splitlines()
    mutate(rows)
    with pytest.raises(DatasetParseError) as err:
        Dataset.parse("\n".join(rows) + "\n")
    assert err.value.line == line


def test_bad_header_and_empty_input():
    with pytest.raises(DatasetParseError):
        Dataset.parse("")
    with pytest.raises(DatasetParseError):
        Dataset.parse("t,a,b\n1,2,3\n")
