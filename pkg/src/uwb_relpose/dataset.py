"""CSV dataset records: one row per measurement tick.

Columns: ``t, gtA_x, gtA_y, gtA_theta, gtB_x, gtB_y, gtB_theta, z_11, ..., z_NN``
with ranges in row-major ``(i, j)`` order.  Ground-truth cells may be empty
(field data without motion capture) and range cells may be empty (dropped
packets).  Headings are radians and may be unwrapped.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

GT_COLUMNS = ["gtA_x", "gtA_y", "gtA_theta", "gtB_x", "gtB_y", "gtB_theta"]


class DatasetParseError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


def range_columns(n: int = 4) -> list[str]:
    return [f"z_{i}{j}" for i in range(1, n + 1) for j in range(1, n + 1)]


def header(n: int = 4) -> list[str]:
    return ["t", *GT_COLUMNS, *range_columns(n)]


@dataclass
class Dataset:
    """Column-wise view of a recorded or simulated run.

    ``gt_a``/``gt_b`` are world-frame poses, ``nan`` where unavailable.
    ``ranges[k, i, j]`` is the raw range of tick ``k``.
    """

    t: np.ndarray
    gt_a: np.ndarray
    gt_b: np.ndarray
    ranges: np.ndarray

    def __post_init__(self):
        self.t = np.asarray(self.t, dtype=float)
        self.gt_a = np.asarray(self.gt_a, dtype=float).reshape(-1, 3)
        self.gt_b = np.asarray(self.gt_b, dtype=float).reshape(-1, 3)
        self.ranges = np.asarray(self.ranges, dtype=float)
        m = len(self.t)
        if self.gt_a.shape[0] != m or self.gt_b.shape[0] != m or self.ranges.shape[0] != m:
            raise ValueError("dataset columns have inconsistent lengths")
        if self.ranges.ndim != 3 or self.ranges.shape[1] != self.ranges.shape[2]:
            raise ValueError(f"ranges must have shape (T, N, N), got {self.ranges.shape}")

    def __len__(self) -> int:
        return len(self.t)

    @property
    def n(self) -> int:
        return self.ranges.shape[1]

    @property
    def has_ground_truth(self) -> bool:
        return len(self) > 0 and bool(np.all(np.isfinite(self.gt_a)) and np.all(np.isfinite(self.gt_b)))

    def to_csv(self, path=None) -> str:
        """Serialize; writes to ``path`` when given and returns the text."""
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(header(self.n))
        for k in range(len(self)):
            row = [_fmt(self.t[k])]
            row += [_fmt(v) for v in self.gt_a[k]] + [_fmt(v) for v in self.gt_b[k]]
            row += [_fmt(v) for v in self.ranges[k].ravel()]
            writer.writerow(row)
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text)
        return text

    @classmethod
    def read_csv(cls, path) -> "Dataset":
        return cls.parse(Path(path).read_text())

    @classmethod
    def parse(cls, text: str) -> "Dataset":
        reader = csv.reader(io.StringIO(text))
        try:
            head = [h.strip() for h in next(reader)]
        except StopIteration:
            raise DatasetParseError("empty dataset", 1) from None
        nz = len(head) - 1 - len(GT_COLUMNS)
        n = math.isqrt(max(nz, 0))
        if n < 1 or n * n != nz or head != header(n):
            raise DatasetParseError(f"unexpected header {head!r}", 1)
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(head):
                raise DatasetParseError(f"expected {len(head)} fields, got {len(row)}", lineno)
            try:
                vals = [_parse(c) for c in row]
            except ValueError as exc:
                raise DatasetParseError(str(exc), lineno) from None
            if math.isnan(vals[0]):
                raise DatasetParseError("missing timestamp", lineno)
            rows.append(vals)
        arr = np.array(rows, dtype=float).reshape(-1, len(head))
        return cls(
            t=arr[:, 0],
            gt_a=arr[:, 1:4],
            gt_b=arr[:, 4:7],
            ranges=arr[:, 7:].reshape(-1, n, n),
        )


def _fmt(v: float) -> str:
    return "" if math.isnan(v) else repr(float(v))


def _parse(cell: str) -> float:
    cell = cell.strip()
    if not cell:
        return math.nan
    v = float(cell)
    if not math.isfinite(v):
        raise ValueError(f"non-finite value {cell!r}")
    return v
