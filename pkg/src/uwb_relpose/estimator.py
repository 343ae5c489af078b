"""Range-only relative pose estimation by (weighted) nonlinear least squares.

Two objectives over ``x = (x, y, theta)``::

    unweighted:  sum_ij (d_ij(x) - zhat_ij)**2
    weighted:    sum_ij w_ij(x) * (d_ij(x) - zhat_ij)**2

are minimized with a small trust-region method: exact analytic gradient,
Gauss-Newton curvature, and an exactly solved 3x3 trust-region subproblem.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from .geometry import DEFAULT_LAYOUT, AntennaLayout, DegenerateGeometryError, Pose2D, _as_vec, wrap_angle
from .measurement import DEFAULT_WINDOW, RangeMatrix
from .weighting import DEFAULT_WEIGHTS, WeightParams, weight_derivatives


class Variant(str, enum.Enum):
    RAW = "raw"
    SHIFT_ONLY = "shift"
    MOVING_AVG_ONLY = "movavg"
    UNWEIGHTED = "unweighted"
    WEIGHTED = "weighted"

    @property
    def label(self) -> str:
        return _LABELS[self]

    @property
    def weighted(self) -> bool:
        return self is Variant.WEIGHTED

    @property
    def uses_bias(self) -> bool:
        return self in (Variant.SHIFT_ONLY, Variant.UNWEIGHTED, Variant.WEIGHTED)

    @property
    def uses_average(self) -> bool:
        return self in (Variant.MOVING_AVG_ONLY, Variant.UNWEIGHTED, Variant.WEIGHTED)

    @classmethod
    def parse(cls, value) -> "Variant":
        if isinstance(value, Variant):
            return value
        key = str(value).strip().lower().replace("_", "").replace("-", "").replace(" ", "")
        aliases = {
            "raw": cls.RAW,
            "shift": cls.SHIFT_ONLY,
            "shiftonly": cls.SHIFT_ONLY,
            "movavg": cls.MOVING_AVG_ONLY,
            "movingavg": cls.MOVING_AVG_ONLY,
            "movingavgonly": cls.MOVING_AVG_ONLY,
            "movavgonly": cls.MOVING_AVG_ONLY,
            "unweighted": cls.UNWEIGHTED,
            "weighted": cls.WEIGHTED,
        }
        try:
            return aliases[key]
        except KeyError:
            raise ValueError(f"unknown variant {value!r}") from None


_LABELS = {
    Variant.RAW: "Raw",
    Variant.SHIFT_ONLY: "Shift only",
    Variant.MOVING_AVG_ONLY: "MovingAvg only",
    Variant.UNWEIGHTED: "Unweighted",
    Variant.WEIGHTED: "Weighted",
}


MAX_SADDLE_ESCAPES = 5


@dataclass(frozen=True)
class SolverConfig:
    max_iterations: int = 200
    gradient_tolerance: float = 1e-8
    step_tolerance: float = 1e-10
    initial_trust_radius: float = 1.0
    max_trust_radius: float = 10.0
    weight_curvature: bool = True

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        for name in ("gradient_tolerance", "step_tolerance", "initial_trust_radius", "max_trust_radius"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be > 0")


@dataclass(frozen=True)
class EstimatorConfig:
    variant: Variant = Variant.WEIGHTED
    weight_params: WeightParams = DEFAULT_WEIGHTS
    solver: SolverConfig = field(default_factory=SolverConfig)
    window: int = DEFAULT_WINDOW

    def __post_init__(self):
        object.__setattr__(self, "variant", Variant.parse(self.variant))
        if int(self.window) != self.window or self.window < 1:
            raise ValueError(f"window must be a positive integer, got {self.window}")

    @property
    def name(self) -> str:
        return self.variant.label

    def to_dict(self) -> dict:
        return {
            "variant": self.variant.value,
            "sigma_deg": self.weight_params.sigma_deg,
            "rho_deg": self.weight_params.rho_deg,
            "window_W": self.window,
            "solver": asdict(self.solver),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "EstimatorConfig":
        known = {"variant", "sigma_deg", "rho_deg", "window_W", "solver"}
        extra = set(data) - known
        if extra:
            raise ValueError(f"unknown estimator config keys: {sorted(extra)}")
        base = cls()
        params = WeightParams.from_degrees(
            float(data.get("sigma_deg", base.weight_params.sigma_deg)),
            float(data.get("rho_deg", base.weight_params.rho_deg)),
        )
        solver = SolverConfig(**data.get("solver", {}))
        return cls(
            variant=Variant.parse(data.get("variant", base.variant)),
            weight_params=params,
            solver=solver,
            window=int(data.get("window_W", base.window)),
        )

    @classmethod
    def load(cls, path) -> "EstimatorConfig":
        """Read a JSON or TOML config file."""
        return cls.from_dict(load_config_mapping(path))

    def with_variant(self, variant) -> "EstimatorConfig":
        return replace(self, variant=Variant.parse(variant))


def load_config_mapping(path) -> dict:
    path = Path(path)
    text = path.read_text()
    if path.suffix.lower() == ".toml":
        try:
            import tomllib
        except ModuleNotFoundError:  # Python < 3.11
            import tomli as tomllib

        return tomllib.loads(text)
    return json.loads(text)


@dataclass(frozen=True)
class EstimateResult:
    pose: Pose2D
    objective_value: float
    converged: bool
    iterations: int
    stage1_pose: Pose2D | None = None
    objective_history: tuple = ()


@dataclass
class BatchResult:
    """Vectorized counterpart of :class:`EstimateResult`; theta wrapped to (-pi, pi]."""

    poses: np.ndarray
    objective_values: np.ndarray
    converged: np.ndarray
    iterations: np.ndarray
    stage1_poses: np.ndarray | None = None
    histories: list | None = None

    def __len__(self) -> int:
        return len(self.poses)

    def result(self, k: int) -> EstimateResult:
        stage1 = None if self.stage1_poses is None else Pose2D.from_array(self.stage1_poses[k])
        history = () if self.histories is None else tuple(self.histories[k])
        return EstimateResult(
            Pose2D.from_array(self.poses[k]),
            float(self.objective_values[k]),
            bool(self.converged[k]),
            int(self.iterations[k]),
            stage1,
            history,
        )


class BatchObjective:
    """Either objective evaluated for a stack of measurement snapshots ``z[b, i, j]``."""

    def __init__(self, z, layout: AntennaLayout = DEFAULT_LAYOUT, params: WeightParams | None = None,
                 weight_curvature: bool = True):
        z = np.asarray(z.values if isinstance(z, RangeMatrix) else z, dtype=float)
        if z.ndim == 2:
            z = z[None]
        n = layout.count
        if z.ndim != 3 or z.shape[1:] != (n, n):
            raise ValueError(f"expected {n}x{n} ranges for this layout, got shape {z.shape}")
        if not np.all(np.isfinite(z)):
            raise ValueError("measurements must be finite")
        self.z = z
        self.layout = layout
        self.params = params
        self.weight_curvature = weight_curvature
        self.r = layout.radius
        self.ang = layout.angles
        self.ax = (self.r * np.cos(self.ang))[None, :, None]
        self.ay = (self.r * np.sin(self.ang))[None, :, None]

    @property
    def weighted(self) -> bool:
        return self.params is not None

    def __len__(self) -> int:
        return len(self.z)

    def _geometry(self, X):
        x, y, theta = X[:, 0], X[:, 1], X[:, 2]
        a = self.ang[None, :] + theta[:, None]
        cb, sb = np.cos(a), np.sin(a)
        dx = x[:, None, None] + self.r * cb[:, None, :] - self.ax
        dy = y[:, None, None] + self.r * sb[:, None, :] - self.ay
        return dx, dy, cb, sb, np.hypot(dx, dy)

    def _weights(self, X, order: int):
        x, y, theta = X[:, 0], X[:, 1], X[:, 2]
        r2 = x * x + y * y
        degenerate = r2 == 0.0
        phi = np.arctan2(y, x)
        wa, sa, ca = weight_derivatives(phi[:, None] - self.ang[None, :] - math.pi, self.params)
        wb, sb, cb = weight_derivatives(theta[:, None] - phi[:, None] - self.ang[None, :], self.params)
        if order == 0:
            return degenerate, (wa, wb)
        return degenerate, (wa, sa, ca, wb, sb, cb, x, y, np.where(degenerate, 1.0, r2))

    def value(self, X, rows=None) -> np.ndarray:
        """Objective at poses ``X`` (``inf`` where the weighted objective is undefined)."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        z = self.z if rows is None else self.z[rows]
        res2 = (self._geometry(X)[4] - z) ** 2
        if not self.weighted:
            return res2.sum(axis=(1, 2))
        degenerate, (wa, wb) = self._weights(X, 0)
        f = (wa[:, :, None] * wb[:, None, :] * res2).sum(axis=(1, 2))
        return np.where(degenerate, np.inf, f)

    def full(self, X, rows=None):
        """Objective, gradient and curvature model at ``X``.

        The unweighted curvature is Gauss-Newton.  The weighted one adds the
        exact weight terms (cross terms and weight Hessian) to Gauss-Newton
        and omits only the residual-times-distance-curvature term.
        """
        X = np.atleast_2d(np.asarray(X, dtype=float))
        z = self.z if rows is None else self.z[rows]
        dx, dy, cb, sb, d = self._geometry(X)
        pos = d > 0.0
        safe = np.where(pos, d, 1.0)
        ux = np.where(pos, dx / safe, 0.0)
        uy = np.where(pos, dy / safe, 0.0)
        b, n = len(X), self.layout.count
        J = np.empty((b, n, n, 3))
        J[..., 0] = ux
        J[..., 1] = uy
        J[..., 2] = self.r * (uy * cb[:, None, :] - ux * sb[:, None, :])
        res = d - z
        res2 = res * res
        Jf = J.reshape(b, n * n, 3)
        if not self.weighted:
            f = res2.sum(axis=(1, 2))
            g = 2.0 * np.einsum("bk,bkm->bm", res.reshape(b, -1), Jf)
            H = 2.0 * np.einsum("bkm,bkn->bmn", Jf, Jf)
            return f, g, H
        degenerate, (wa, sa, ca, wb, sbw, cbw, x, y, r2) = self._weights(X, 2)
        if np.any(degenerate):
            raise DegenerateGeometryError("weighted objective undefined at zero planar offset")
        W = wa[:, :, None] * wb[:, None, :]
        AB = sa[:, :, None] * wb[:, None, :]  # dw_A * w_B
        BA = wa[:, :, None] * sbw[:, None, :]  # w_A * dw_B
        f = (W * res2).sum(axis=(1, 2))
        px, py = -y / r2, x / r2
        e = np.stack([px, py, np.zeros_like(px)], axis=1)
        fv = np.stack([-px, -py, np.ones_like(px)], axis=1)
        wr = (W * res).reshape(b, -1)
        g = (
            2.0 * np.einsum("bk,bkm->bm", wr, Jf)
            + (AB * res2).sum(axis=(1, 2))[:, None] * e
            + (BA * res2).sum(axis=(1, 2))[:, None] * fv
        )
        H = 2.0 * np.einsum("bkm,bkn->bmn", Jf * W.reshape(b, -1, 1), Jf)
        if not self.weight_curvature:
            return f, g, H
        u = np.einsum("bk,bkm->bm", (AB * res).reshape(b, -1), Jf)
        v = np.einsum("bk,bkm->bm", (BA * res).reshape(b, -1), Jf)
        cross = u[:, :, None] * e[:, None, :] + v[:, :, None] * fv[:, None, :]
        H += 2.0 * (cross + cross.transpose(0, 2, 1))
        s_aa = (ca[:, :, None] * wb[:, None, :] * res2).sum(axis=(1, 2))
        s_ab = (sa[:, :, None] * sbw[:, None, :] * res2).sum(axis=(1, 2))
        s_bb = (wa[:, :, None] * cbw[:, None, :] * res2).sum(axis=(1, 2))
        s_phi = ((AB - BA) * res2).sum(axis=(1, 2))
        ef = e[:, :, None] * fv[:, None, :]
        H += (
            s_aa[:, None, None] * e[:, :, None] * e[:, None, :]
            + s_ab[:, None, None] * (ef + ef.transpose(0, 2, 1))
            + s_bb[:, None, None] * fv[:, :, None] * fv[:, None, :]
        )
        r4 = r2 * r2
        hphi = np.zeros((b, 3, 3))
        hphi[:, 0, 0] = 2.0 * x * y / r4
        hphi[:, 1, 1] = -2.0 * x * y / r4
        hphi[:, 0, 1] = hphi[:, 1, 0] = (y * y - x * x) / r4
        H += s_phi[:, None, None] * hphi
        return f, g, H

    def distance_curvature(self, X, rows=None) -> np.ndarray:
        """The term ``2 * sum w_ij r_ij Hess(d_ij)`` the curvature model leaves out."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        z = self.z if rows is None else self.z[rows]
        dx, dy, cb, sb, d = self._geometry(X)
        pos = d > 0.0
        safe = np.where(pos, d, 1.0)
        ux = np.where(pos, dx / safe, 0.0)
        uy = np.where(pos, dy / safe, 0.0)
        wr = d - z
        if self.weighted:
            degenerate, (wa, wb) = self._weights(X, 0)
            if np.any(degenerate):
                raise DegenerateGeometryError("weighted objective undefined at zero planar offset")
            wr = wa[:, :, None] * wb[:, None, :] * wr
        wr = np.where(pos, wr, 0.0)
        c, s = cb[:, None, :], sb[:, None, :]
        q = np.stack([-uy, ux, self.r * (uy * s + ux * c) * np.ones_like(ux)], axis=-1)
        out = 2.0 * np.einsum("bij,bijm,bijn->bmn", wr / safe, q, q)
        out[:, 2, 2] -= 2.0 * self.r * (wr * (ux * c + uy * s)).sum(axis=(1, 2))
        return out


def _objective(zhat, layout, params, weighted: bool, solver: SolverConfig | None = None) -> BatchObjective:
    curvature = True if solver is None else solver.weight_curvature
    return BatchObjective(zhat, layout, params if weighted else None, curvature)


def objective_unweighted(pose, zhat, layout: AntennaLayout = DEFAULT_LAYOUT) -> float:
    return float(BatchObjective(zhat, layout, None).value(_as_vec(pose))[0])


def objective_weighted(pose, zhat, layout: AntennaLayout = DEFAULT_LAYOUT,
                       params: WeightParams = DEFAULT_WEIGHTS) -> float:
    v = _as_vec(pose)
    if v[0] == 0.0 and v[1] == 0.0:
        raise DegenerateGeometryError("weighted objective undefined at zero planar offset")
    return float(BatchObjective(zhat, layout, params).value(v)[0])


def objective_gradient(pose, zhat, layout: AntennaLayout = DEFAULT_LAYOUT,
                       params: WeightParams = DEFAULT_WEIGHTS, variant=Variant.UNWEIGHTED) -> np.ndarray:
    """Analytic gradient of the objective selected by ``variant``."""
    weighted = Variant.parse(variant).weighted
    return _objective(zhat, layout, params, weighted).full(_as_vec(pose))[1][0]


def trust_region_step(g: np.ndarray, H: np.ndarray, radius: np.ndarray) -> np.ndarray:
    """Solve ``min g.p + p.H.p/2  s.t. |p| <= radius`` for a stack of 3x3 problems.

    Uses the eigendecomposition of each ``H`` and a safeguarded Newton
    iteration on the secular equation ``1/|p(mu)| = 1/radius``.
    """
    lam, Q = np.linalg.eigh(H)
    gq = np.einsum("bij,bi->bj", Q, g)
    scale = np.maximum(np.abs(lam).max(axis=1), 1.0)
    lo = np.maximum(0.0, -lam[:, 0]) + 1e-14 * scale

    def norm_at(mu):
        return np.sqrt(np.sum((gq / (lam + mu[:, None])) ** 2, axis=1))

    mu = lo.copy()
    newton = lam[:, 0] > 1e-14 * scale
    with np.errstate(divide="ignore", invalid="ignore"):
        newton &= np.sqrt(np.sum((gq / lam) ** 2, axis=1)) <= radius
    mu[newton] = 0.0
    # hard case (or interior shifted step) when |p(lo)| already fits
    todo = ~newton & (norm_at(lo) > radius)
    hi = lo + np.linalg.norm(g, axis=1) / radius
    lo = lo.copy()
    for _ in range(60):
        if not np.any(todo):
            break
        k = np.nonzero(todo)[0]
        m = mu[k]
        q = gq[k] / (lam[k] + m[:, None])
        pn = np.sqrt(np.sum(q * q, axis=1))
        rad = radius[k]
        done = np.abs(pn - rad) <= 1e-6 * rad
        lo[k] = np.where(pn > rad, m, lo[k])
        hi[k] = np.where(pn > rad, hi[k], m)
        dpn = -np.sum(q * q / (lam[k] + m[:, None]), axis=1) / pn
        with np.errstate(divide="ignore", invalid="ignore"):
            cand = m - (pn / rad - 1.0) * pn / dpn
        inside = (cand > lo[k]) & (cand < hi[k])
        mu[k] = np.where(done, m, np.where(inside, cand, 0.5 * (lo[k] + hi[k])))
        todo[k[done]] = False
    p = gq / (lam + mu[:, None])
    return -np.einsum("bij,bj->bi", Q, p)


def _saddle_escape(obj: BatchObjective, X, f, H, idx, cfg: SolverConfig):
    """Move rows ``idx`` off stationary points with negative exact curvature.

    Gauss-Newton curvature is positive semi-definite, so a symmetric
    configuration (e.g. the origin for data with relative heading pi) can
    look like a minimum.  Returns the rows that were moved and their new poses.
    """
    Hx = H[idx] + obj.distance_curvature(X[idx], idx)
    lam, Q = np.linalg.eigh(Hx)
    scale = np.maximum(np.abs(lam).max(axis=1), 1.0)
    neg = lam[:, 0] < -1e-8 * scale
    moved, poses = [], []
    for k, v in zip(idx[neg], Q[neg][:, :, 0]):
        alpha = float(cfg.initial_trust_radius)
        for _ in range(20):
            best = None
            for sgn in (1.0, -1.0):
                cand = X[k] + sgn * alpha * v
                fc = obj.value(cand[None], np.array([k]))[0]
                if fc < f[k] and (best is None or fc < best[0]):
                    best = (fc, cand)
            if best is not None:
                moved.append(k)
                poses.append(best[1])
                break
            alpha *= 0.5
    return np.array(moved, dtype=int), (np.array(poses) if poses else np.zeros((0, 3)))


def minimize_batch(obj: BatchObjective, X0, cfg: SolverConfig, record_history: bool = False):
    """Trust-region minimization of every problem in ``obj`` from ``X0``.

    Returns ``(X, f, converged, iterations, histories)``; only accepted steps
    enter the histories, so each history is non-increasing.  Before a problem
    is declared finished its exact Hessian is checked, and saddle points are
    left along the direction of negative curvature.
    """
    X = np.array(X0, dtype=float).reshape(len(obj), 3)
    f, g, H = obj.full(X)
    nb = len(X)
    radius = np.full(nb, float(cfg.initial_trust_radius))
    iterations = np.zeros(nb, dtype=int)
    converged = np.zeros(nb, dtype=bool)
    active = np.ones(nb, dtype=bool)
    escapes = np.zeros(nb, dtype=int)
    histories = [[float(v)] for v in f] if record_history else None

    def finish(rows, ok):
        # rows about to terminate; returns the mask of rows that escaped instead
        escaped = np.zeros(len(rows), dtype=bool)
        try_rows = rows[escapes[rows] < MAX_SADDLE_ESCAPES]
        if try_rows.size:
            moved, poses = _saddle_escape(obj, X, f, H, try_rows, cfg)
            if moved.size:
                X[moved] = poses
                fm, gm, Hm = obj.full(X[moved], moved)
                f[moved], g[moved], H[moved] = fm, gm, Hm
                radius[moved] = cfg.initial_trust_radius
                escapes[moved] += 1
                if record_history:
                    for k, v in zip(moved, fm):
                        histories[k].append(float(v))
                escaped = np.isin(rows, moved)
        stop = rows[~escaped]
        converged[stop] = ok[~escaped]
        active[stop] = False

    while True:
        gn = np.linalg.norm(g, axis=1)
        hit = np.nonzero(active & (gn < cfg.gradient_tolerance))[0]
        if hit.size:
            finish(hit, np.ones(hit.size, dtype=bool))
        active &= iterations < cfg.max_iterations
        idx = np.nonzero(active)[0]
        if idx.size == 0:
            break
        iterations[idx] += 1
        gk, Hk, rk = g[idx], H[idx], radius[idx]
        p = trust_region_step(gk, Hk, rk)
        pn = np.linalg.norm(p, axis=1)
        predicted = -(np.einsum("bi,bi->b", gk, p) + 0.5 * np.einsum("bi,bij,bj->b", p, Hk, p))
        X_new = X[idx] + p
        f_new = obj.value(X_new, idx)
        actual = f[idx] - f_new
        with np.errstate(invalid="ignore", divide="ignore"):
            ratio = np.where(predicted > 0.0, actual / predicted, np.where(actual > 0.0, 1.0, -1.0))
        ratio = np.nan_to_num(ratio, nan=-1.0)
        rk = np.where(ratio < 0.25, 0.25 * pn, rk)
        grow = (ratio > 0.75) & (pn >= 0.99 * radius[idx])
        rk = np.where(grow, np.minimum(2.0 * rk, cfg.max_trust_radius), rk)
        radius[idx] = rk
        accept = (ratio > 1e-4) & (f_new <= f[idx])
        acc = idx[accept]
        if acc.size:
            X[acc] = X_new[accept]
            fa, ga, Ha = obj.full(X[acc], acc)
            f[acc], g[acc], H[acc] = fa, ga, Ha
            if record_history:
                for k, v in zip(acc, fa):
                    histories[k].append(float(v))
        tiny = acc[pn[accept] < cfg.step_tolerance]
        stalled = idx[~accept & (rk < cfg.step_tolerance)]
        ending = np.concatenate([tiny, stalled])
        if ending.size:
            ok = np.concatenate([
                np.ones(tiny.size, dtype=bool),
                np.linalg.norm(g[stalled], axis=1) < math.sqrt(cfg.gradient_tolerance),
            ])
            finish(ending, ok)
    return X, f, converged, iterations, histories


def _wrapped(X: np.ndarray) -> np.ndarray:
    out = X.copy()
    out[:, 2] = wrap_angle(out[:, 2])
    return out


def solve_batch(Z, X0, layout: AntennaLayout = DEFAULT_LAYOUT, config: EstimatorConfig | None = None,
                record_history: bool = False) -> BatchResult:
    """Solve many independent problems at once; row ``b`` uses ``Z[b]`` and ``X0[b]``."""
    config = config or EstimatorConfig()
    obj = _objective(Z, layout, config.weight_params, config.variant.weighted, config.solver)
    X0 = np.asarray(X0, dtype=float).reshape(len(obj), 3)
    if not np.all(np.isfinite(X0)):
        raise ValueError("x0 must be finite")
    X, f, conv, it, hist = minimize_batch(obj, X0, config.solver, record_history)
    return BatchResult(_wrapped(X), f, conv, it, None, hist)


def solve_two_stage_batch(Z, layout: AntennaLayout = DEFAULT_LAYOUT, config: EstimatorConfig | None = None,
                          record_history: bool = False) -> BatchResult:
    config = config or EstimatorConfig()
    unweighted = config.with_variant(Variant.UNWEIGHTED)
    obj1 = _objective(Z, layout, None, False)
    X1, f1, conv1, it1, hist1 = minimize_batch(obj1, np.zeros((len(obj1), 3)), unweighted.solver, record_history)
    X, f, conv, it = X1.copy(), f1.copy(), conv1.copy(), it1.copy()
    hist = hist1
    rows = np.nonzero(conv1)[0]
    if rows.size:
        obj2 = _objective(obj1.z[rows], layout, config.weight_params, config.variant.weighted, config.solver)
        X2, f2, conv2, it2, hist2 = minimize_batch(obj2, X1[rows], config.solver, record_history)
        X[rows], f[rows], conv[rows] = X2, f2, conv2
        it[rows] += it2
        if record_history:
            for k, h in zip(rows, hist2):
                hist[k] = h
    return BatchResult(_wrapped(X), f, conv, it, _wrapped(X1), hist)


def solve(zhat, layout: AntennaLayout = DEFAULT_LAYOUT, x0=None,
          config: EstimatorConfig | None = None) -> EstimateResult:
    """Local minimization of the configured objective starting at ``x0``.

    Non-convergence within ``max_iterations`` is reported via
    ``converged=False`` rather than raised.
    """
    config = config or EstimatorConfig()
    v0 = np.zeros(3) if x0 is None else _as_vec(x0)
    if config.variant.weighted and v0[0] == 0.0 and v0[1] == 0.0:
        raise DegenerateGeometryError("weighted solve needs a start with non-zero planar offset")
    return solve_batch(zhat, v0[None], layout, config, record_history=True).result(0)


def solve_two_stage(zhat, layout: AntennaLayout = DEFAULT_LAYOUT,
                    config: EstimatorConfig | None = None) -> EstimateResult:
    """Unweighted solve from the origin, then the configured objective from that result.

    If the first stage does not converge the second is skipped and the
    result carries ``converged=False``.
    """
    return solve_two_stage_batch(zhat, layout, config, record_history=True).result(0)


def estimate(zhat, layout: AntennaLayout = DEFAULT_LAYOUT, config: EstimatorConfig | None = None) -> EstimateResult:
    """Solve with the scheme the variant calls for: two-stage for Weighted, origin start otherwise."""
    config = config or EstimatorConfig()
    if config.variant.weighted:
        return solve_two_stage(zhat, layout, config)
    return solve(zhat, layout, np.zeros(3), config)
