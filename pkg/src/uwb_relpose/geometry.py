"""Antenna layout and inter-antenna distances for a pair of planar robots.

Robot A sits at the origin of its own frame.  Robot B's pose relative to A is
``Pose2D(x, y, theta)``.  Antennas are indexed ``1..N`` (matching the usual
hardware numbering); antenna ``k`` sits at body angle ``2*pi*(k-1)/N`` on a
circle of radius ``R``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

TWO_PI = 2.0 * math.pi


def wrap_angle(angle):
    """Wrap an angle (scalar or array) to the half-open interval (-pi, pi]."""
    if np.ndim(angle) == 0:
        a = math.fmod(float(angle), TWO_PI)
        if a <= -math.pi:
            a += TWO_PI
        elif a > math.pi:
            a -= TWO_PI
        return a
    a = np.fmod(np.asarray(angle, dtype=float), TWO_PI)
    a = np.where(a <= -math.pi, a + TWO_PI, a)
    return np.where(a > math.pi, a - TWO_PI, a)


class DegenerateGeometryError(ValueError):
    """Raised when the planar offset between the robots is exactly zero."""


@dataclass(frozen=True)
class Pose2D:
    """Relative planar pose. ``theta`` is stored wrapped to (-pi, pi]."""

    x: float
    y: float
    theta: float

    def __post_init__(self):
        vals = (float(self.x), float(self.y), float(self.theta))
        if not all(math.isfinite(v) for v in vals):
            raise ValueError(f"pose components must be finite, got {vals}")
        object.__setattr__(self, "x", vals[0])
        object.__setattr__(self, "y", vals[1])
        object.__setattr__(self, "theta", wrap_angle(vals[2]))

    @classmethod
    def from_array(cls, arr) -> "Pose2D":
        x, y, theta = np.asarray(arr, dtype=float).reshape(3)
        return cls(x, y, theta)

    @classmethod
    def zero(cls) -> "Pose2D":
        return cls(0.0, 0.0, 0.0)

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.theta])

    @property
    def planar_norm(self) -> float:
        return math.hypot(self.x, self.y)


@dataclass(frozen=True)
class AntennaLayout:
    """Equally spaced antennas on a circle of ``radius`` around the body center."""

    radius: float = 0.35
    count: int = 4

    def __post_init__(self):
        if not (self.radius > 0 and math.isfinite(self.radius)):
            raise ValueError(f"radius must be positive, got {self.radius}")
        if int(self.count) != self.count or self.count < 3:
            raise ValueError(f"need at least 3 antennas for planar pose, got {self.count}")

    @property
    def angles(self) -> np.ndarray:
        """Body-frame angle of each antenna, index 0 is antenna 1."""
        return TWO_PI * np.arange(self.count) / self.count

    def check_index(self, k: int) -> int:
        """Validate a 1-based antenna index and return it as a 0-based offset."""
        if not isinstance(k, (int, np.integer)) or not 1 <= k <= self.count:
            raise IndexError(f"antenna index must be in 1..{self.count}, got {k!r}")
        return int(k) - 1


DEFAULT_LAYOUT = AntennaLayout()


def _as_vec(pose) -> np.ndarray:
    if isinstance(pose, Pose2D):
        return pose.as_array()
    return np.asarray(pose, dtype=float).reshape(3)


def antenna_positions(layout: AntennaLayout, pose) -> np.ndarray:
    """All antenna positions of a robot at ``pose``, shape ``(N, 2)``."""
    x, y, theta = _as_vec(pose)
    a = layout.angles + theta
    return np.column_stack((x + layout.radius * np.cos(a), y + layout.radius * np.sin(a)))


def antenna_position(layout: AntennaLayout, pose, k: int) -> np.ndarray:
    """Position of antenna ``k`` (1-based) of a robot at ``pose``."""
    idx = layout.check_index(k)
    return antenna_positions(layout, pose)[idx]


def pairwise_distance(layout: AntennaLayout, pose, i: int, j: int) -> float:
    """Distance from robot A's antenna ``i`` to robot B's antenna ``j``."""
    ii = layout.check_index(i)
    jj = layout.check_index(j)
    a = antenna_positions(layout, (0.0, 0.0, 0.0))[ii]
    b = antenna_positions(layout, pose)[jj]
    return float(math.hypot(*(a - b)))


def distance_matrix(layout: AntennaLayout, pose) -> np.ndarray:
    """``D[i, j]`` = distance between A's antenna i+1 and B's antenna j+1."""
    a = antenna_positions(layout, (0.0, 0.0, 0.0))
    b = antenna_positions(layout, pose)
    diff = b[None, :, :] - a[:, None, :]
    return np.hypot(diff[..., 0], diff[..., 1])


def distance_jacobian(layout: AntennaLayout, pose) -> tuple[np.ndarray, np.ndarray]:
    """Distances and their derivatives w.r.t. ``(x, y, theta)``.

    Returns ``(D, J)`` with ``D`` of shape ``(N, N)`` and ``J`` of shape
    ``(N, N, 3)``.  Where two antennas coincide the distance is not
    differentiable; the zero subgradient is used there.
    """
    x, y, theta = _as_vec(pose)
    ang = layout.angles
    r = layout.radius
    ax = r * np.cos(ang)
    ay = r * np.sin(ang)
    cb = np.cos(ang + theta)
    sb = np.sin(ang + theta)
    dx = (x + r * cb)[None, :] - ax[:, None]
    dy = (y + r * sb)[None, :] - ay[:, None]
    d = np.hypot(dx, dy)
    safe = np.where(d > 0.0, d, 1.0)
    ux = np.where(d > 0.0, dx / safe, 0.0)
    uy = np.where(d > 0.0, dy / safe, 0.0)
    J = np.empty(d.shape + (3,))
    J[..., 0] = ux
    J[..., 1] = uy
    J[..., 2] = ux * (-r * sb)[None, :] + uy * (r * cb)[None, :]
    return d, J


def relative_pose(pose_a, pose_b) -> Pose2D:
    """Pose of robot B expressed in robot A's body frame (both given in a world frame)."""
    xa, ya, ta = _as_vec(pose_a)
    xb, yb, tb = _as_vec(pose_b)
    c, s = math.cos(ta), math.sin(ta)
    dx, dy = xb - xa, yb - ya
    return Pose2D(c * dx + s * dy, -s * dx + c * dy, tb - ta)
