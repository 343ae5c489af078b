"""Calibrated range measurements: bias removal and moving-average smoothing.

``zhat_ij = -mu_ij + mean(last W raw samples of pair ij)``.  Before a pair has
``W`` samples the mean is taken over whatever it holds.
"""

from __future__ import annotations

import json
import math
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

# Per-pair biases measured on the reference hardware (row i = robot A antenna).
REFERENCE_BIASES = np.array(
    [
        [0.268, 0.266, 0.277, 0.230],
        [0.093, 0.112, 0.227, 0.188],
        [0.046, 0.018, 0.170, 0.078],
        [0.041, 0.065, 0.178, 0.095],
    ]
)

DEFAULT_WINDOW = 50


class NoDataError(LookupError):
    """Raised when a calibrated value is requested from an empty buffer."""


@dataclass
class RangeMatrix:
    """An ``N x N`` snapshot of ranges; ``values[i, j]`` is A antenna i+1 to B antenna j+1.

    Missing entries are ``nan``.
    """

    values: np.ndarray
    timestamp: float = 0.0

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 2 or self.values.shape[0] != self.values.shape[1]:
            raise ValueError(f"range matrix must be square, got shape {self.values.shape}")

    @property
    def n(self) -> int:
        return self.values.shape[0]


@dataclass
class CalibrationTable:
    """Per-pair mean bias ``mu[i, j]`` in meters."""

    mu: np.ndarray

    def __post_init__(self):
        self.mu = np.asarray(self.mu, dtype=float)
        if self.mu.ndim != 2 or self.mu.shape[0] != self.mu.shape[1]:
            raise ValueError(f"bias table must be square, got shape {self.mu.shape}")
        if not np.all(np.isfinite(self.mu)):
            raise ValueError("bias table entries must be finite")

    @property
    def n(self) -> int:
        return self.mu.shape[0]

    @classmethod
    def zeros(cls, n: int = 4) -> "CalibrationTable":
        return cls(np.zeros((n, n)))

    @classmethod
    def reference(cls) -> "CalibrationTable":
        return cls(REFERENCE_BIASES.copy())

    def to_dict(self) -> dict:
        return {"N": self.n, "mu": self.mu.tolist()}

    @classmethod
    def from_dict(cls, data: dict) -> "CalibrationTable":
        table = cls(np.array(data["mu"], dtype=float))
        if "N" in data and int(data["N"]) != table.n:
            raise ValueError(f"N={data['N']} does not match a {table.n}x{table.n} bias table")
        return table

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n")

    @classmethod
    def load(cls, path) -> "CalibrationTable":
        return cls.from_dict(json.loads(Path(path).read_text()))


@dataclass
class MeasurementWindow:
    """Independent FIFO buffers of the ``window`` most recent samples per antenna pair."""

    n: int = 4
    window: int = DEFAULT_WINDOW
    buffers: list = field(init=False, repr=False)
    timestamp: float = field(init=False, default=math.nan)

    def __post_init__(self):
        if int(self.window) != self.window or self.window < 1:
            raise ValueError(f"window must be a positive integer, got {self.window}")
        self.buffers = [[deque(maxlen=self.window) for _ in range(self.n)] for _ in range(self.n)]

    def push_raw(self, sample) -> "MeasurementWindow":
        """Append one snapshot; ``nan`` entries (dropped packets) are skipped."""
        if isinstance(sample, RangeMatrix):
            values, ts = sample.values, sample.timestamp
        else:
            values, ts = np.asarray(sample, dtype=float), math.nan
        if values.shape != (self.n, self.n):
            raise ValueError(f"expected a {self.n}x{self.n} sample, got shape {values.shape}")
        for i in range(self.n):
            row = self.buffers[i]
            for j in range(self.n):
                v = values[i, j]
                if not math.isnan(v):
                    row[j].append(float(v))
        self.timestamp = ts
        return self

    def count(self, i: int, j: int) -> int:
        """Number of buffered samples for the 1-based pair ``(i, j)``."""
        if not (1 <= i <= self.n and 1 <= j <= self.n):
            raise IndexError(f"pair ({i}, {j}) outside 1..{self.n}")
        return len(self.buffers[i - 1][j - 1])

    def counts(self) -> np.ndarray:
        return np.array([[len(b) for b in row] for row in self.buffers])

    def _buffer(self, i: int, j: int) -> deque:
        if not (1 <= i <= self.n and 1 <= j <= self.n):
            raise IndexError(f"pair ({i}, {j}) outside 1..{self.n}")
        buf = self.buffers[i - 1][j - 1]
        if not buf:
            raise NoDataError(f"no samples buffered for pair ({i}, {j})")
        return buf

    def mean(self, i: int, j: int) -> float:
        buf = self._buffer(i, j)
        return math.fsum(buf) / len(buf)

    def latest(self, i: int, j: int) -> float:
        return self._buffer(i, j)[-1]

    def mean_matrix(self) -> np.ndarray:
        return np.array([[self.mean(i, j) for j in range(1, self.n + 1)] for i in range(1, self.n + 1)])

    def latest_matrix(self) -> np.ndarray:
        return np.array([[self.latest(i, j) for j in range(1, self.n + 1)] for i in range(1, self.n + 1)])

    def snapshot(self) -> "MeasurementWindow":
        """Independent copy for readers."""
        other = MeasurementWindow(self.n, self.window)
        for i in range(self.n):
            for j in range(self.n):
                other.buffers[i][j].extend(self.buffers[i][j])
        other.timestamp = self.timestamp
        return other


def push_raw(window: MeasurementWindow, sample) -> MeasurementWindow:
    return window.push_raw(sample)


def calibrated_range(window: MeasurementWindow, table: CalibrationTable, i: int, j: int) -> float:
    """Bias-corrected moving average for the 1-based pair ``(i, j)``."""
    return window.mean(i, j) - float(table.mu[i - 1, j - 1])


def calibrated_matrix(window: MeasurementWindow, table: CalibrationTable) -> RangeMatrix:
    if table.n != window.n:
        raise ValueError(f"bias table is {table.n}x{table.n} but window holds {window.n}x{window.n}")
    return RangeMatrix(window.mean_matrix() - table.mu, window.timestamp)
