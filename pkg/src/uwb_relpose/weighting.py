"""Obstruction weights for antenna-pair range terms.

The primitive ``w(psi)`` is 0 inside the stop-band ``|psi| <= sigma``, 1 in the
pass-band ``rho <= |psi| <= pi`` and follows a raised cosine in between.  It is
2*pi periodic, even, and continuously differentiable.

Robot-specific weights shift the primitive by the bearing of B seen from A
(``phi = atan2(y, x)``):

    w_A,i(x) = w(phi - a_i - pi)        (a_i = 2*pi*(i-1)/N)
    w_B,j(x) = w(theta - phi - a_j)

For the default four-antenna layout ``a_i + pi`` equals ``pi/2 * (i+1)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import DEFAULT_LAYOUT, AntennaLayout, DegenerateGeometryError, _as_vec, wrap_angle


@dataclass(frozen=True)
class WeightParams:
    """Stop-band end angle ``sigma`` and pass-band start angle ``rho`` (radians)."""

    sigma: float = math.radians(30.0)
    rho: float = math.radians(90.0)

    def __post_init__(self):
        if not (0.0 <= self.sigma <= self.rho <= math.pi):
            raise ValueError(
                f"weight params need 0 <= sigma <= rho <= pi, got sigma={self.sigma}, rho={self.rho}"
            )

    @classmethod
    def from_degrees(cls, sigma_deg: float, rho_deg: float) -> "WeightParams":
        return cls(math.radians(sigma_deg), math.radians(rho_deg))

    @property
    def sigma_deg(self) -> float:
        return math.degrees(self.sigma)

    @property
    def rho_deg(self) -> float:
        return math.degrees(self.rho)


DEFAULT_WEIGHTS = WeightParams()


def weight_derivatives(psi, params: WeightParams = DEFAULT_WEIGHTS):
    """``w(psi)`` with its first and second derivatives; scalars or arrays."""
    psi = wrap_angle(psi)
    a = np.abs(psi)
    sigma, rho = params.sigma, params.rho
    if rho == sigma:
        w = np.where(a >= rho, 1.0, 0.0)
        dw = np.zeros_like(w)
        d2w = np.zeros_like(w)
    else:
        band = (a > sigma) & (a < rho)
        # a subnormal band width overflows k; only masked-out entries go non-finite
        with np.errstate(over="ignore", invalid="ignore"):
            k = math.pi / (rho - sigma)
            phase = k * (a - sigma)
            w = np.where(a >= rho, 1.0, np.where(band, 0.5 - 0.5 * np.cos(phase), 0.0))
            dw = np.where(band, 0.5 * k * np.sin(phase) * np.sign(psi), 0.0)
            d2w = np.where(band, 0.5 * k * k * np.cos(phase), 0.0)
    if np.ndim(w) == 0:
        return float(w), float(dw), float(d2w)
    return w, dw, d2w


def weight_and_slope(psi, params: WeightParams = DEFAULT_WEIGHTS):
    """Evaluate ``w(psi)`` and ``dw/dpsi``."""
    return weight_derivatives(psi, params)[:2]


def weight_primitive(psi, params: WeightParams = DEFAULT_WEIGHTS):
    """The periodic raised-cosine weight ``w(psi)`` in [0, 1]."""
    return weight_and_slope(psi, params)[0]


def _bearing(pose):
    x, y, theta = _as_vec(pose)
    r2 = x * x + y * y
    if r2 == 0.0:
        raise DegenerateGeometryError("weights undefined at zero planar offset")
    return x, y, theta, math.atan2(y, x), r2


def phase_A(layout: AntennaLayout, pose) -> np.ndarray:
    """Weight arguments for each of A's antennas."""
    _, _, _, phi, _ = _bearing(pose)
    return phi - layout.angles - math.pi


def phase_B(layout: AntennaLayout, pose) -> np.ndarray:
    """Weight arguments for each of B's antennas."""
    _, _, theta, phi, _ = _bearing(pose)
    return theta - phi - layout.angles


def weight_A(pose, i: int, params: WeightParams = DEFAULT_WEIGHTS, layout: AntennaLayout = DEFAULT_LAYOUT) -> float:
    idx = layout.check_index(i)
    return weight_primitive(phase_A(layout, pose)[idx], params)


def weight_B(pose, j: int, params: WeightParams = DEFAULT_WEIGHTS, layout: AntennaLayout = DEFAULT_LAYOUT) -> float:
    idx = layout.check_index(j)
    return weight_primitive(phase_B(layout, pose)[idx], params)


def weight_pair(pose, i: int, j: int, params: WeightParams = DEFAULT_WEIGHTS,
                layout: AntennaLayout = DEFAULT_LAYOUT) -> float:
    """Combined weight ``w_A,i * w_B,j``."""
    return weight_A(pose, i, params, layout) * weight_B(pose, j, params, layout)


def weight_matrix_and_gradient(pose, params: WeightParams = DEFAULT_WEIGHTS,
                               layout: AntennaLayout = DEFAULT_LAYOUT) -> tuple[np.ndarray, np.ndarray]:
    """All pair weights ``W[i, j]`` and gradients ``G[i, j, :]`` w.r.t. ``(x, y, theta)``."""
    x, y, theta, phi, r2 = _bearing(pose)
    dphi = np.array([-y / r2, x / r2, 0.0])
    wa, sa = weight_and_slope(phi - layout.angles - math.pi, params)
    wb, sb = weight_and_slope(theta - phi - layout.angles, params)
    grad_a = sa[:, None] * dphi[None, :]
    grad_b = sb[:, None] * (np.array([0.0, 0.0, 1.0]) - dphi)[None, :]
    W = wa[:, None] * wb[None, :]
    G = wb[None, :, None] * grad_a[:, None, :] + wa[:, None, None] * grad_b[None, :, :]
    return W, G


def weight_matrix(pose, params: WeightParams = DEFAULT_WEIGHTS, layout: AntennaLayout = DEFAULT_LAYOUT) -> np.ndarray:
    return weight_matrix_and_gradient(pose, params, layout)[0]


def weight_pair_gradient(pose, i: int, j: int, params: WeightParams = DEFAULT_WEIGHTS,
                         layout: AntennaLayout = DEFAULT_LAYOUT) -> np.ndarray:
    """Analytic gradient of ``w_ij`` w.r.t. ``(x, y, theta)``."""
    ii = layout.check_index(i)
    jj = layout.check_index(j)
    return weight_matrix_and_gradient(pose, params, layout)[1][ii, jj].copy()
