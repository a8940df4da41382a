"""Recover per-frame camera depths of a 2D-labelled clip from physics consistency.

Every frame carries one latent camera depth. For an anchor frame ``n`` the
labels and depths of frames ``n-1, n, n+1`` give a world position and a
central-difference velocity; the forecaster advances that state to
``t[n + dn]`` for each horizon ``dn`` and the result is compared with what
is known about that future frame (the "future loss"). Gradients come from
forward-mode sensitivities of the discrete solver, seeded with the three
depths of the anchor window.
"""

from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import least_squares
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from . import _kernels
from ._validation import as_points, check_int, check_positive
from .exceptions import (
    DivergedRecovery,
    FrameIndexOutOfRange,
    InvalidInput,
    MissingGroundTruth,
    NonPositiveDepth,
    StepLimitExceeded,
)
from .geometry import backproject, project
from .integrator import SolverConfig
from .perception import heatmap_l2

LOSS_MODES = ("2d-predict", "2d-gt", "3d-gt")
DIVERGENCE_LIMIT = 1e6
SIGN_DEADZONE = 1e-9


@dataclass(frozen=True, eq=False)
class TrajectoryClip:
    """Frames of one video clip.

    ``labels`` are pixel coordinates (N, 2). ``gt_world`` (N, 3) and
    ``gt_depth`` (N,) are optional ground truth used only for supervision in
    ``3d-gt`` mode and for evaluation.
    """

    rig_id: str
    fps: float
    times: np.ndarray
    labels: np.ndarray
    gt_world: np.ndarray = None
    gt_depth: np.ndarray = None

    def __post_init__(self):
        fps = check_positive(self.fps, "fps")
        times = np.array(self.times, dtype=float).ravel()
        n = times.size
        if n < 4:
            raise InvalidInput(f"a clip needs at least 4 frames, got {n}")
        if np.any(np.abs(np.diff(times) - 1.0 / fps) > 1e-9):
            raise InvalidInput("frame times must be spaced by 1/fps")
        labels = as_points(self.labels, 2, "labels").reshape(-1, 2)
        if len(labels) != n:
            raise InvalidInput("one label per frame is required")
        object.__setattr__(self, "fps", fps)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "labels", labels.copy())
        object.__setattr__(self, "rig_id", str(self.rig_id))
        if self.gt_world is not None:
            gw = as_points(self.gt_world, 3, "gt_world").reshape(-1, 3)
            if len(gw) != n:
                raise InvalidInput("gt_world needs one row per frame")
            object.__setattr__(self, "gt_world", gw.copy())
        if self.gt_depth is not None:
            gd = np.array(self.gt_depth, dtype=float).ravel()
            if gd.size != n or np.any(~(gd > 0)):
                raise InvalidInput("gt_depth needs one positive value per frame")
            object.__setattr__(self, "gt_depth", gd)

    def __len__(self):
        return self.times.size

    def with_labels(self, labels):
        return replace(self, labels=labels)

    def to_dict(self):
        frames = []
        for i in range(len(self)):
            f = {"t": float(self.times[i]), "label": [float(x) for x in self.labels[i]]}
            if self.gt_world is not None:
                f["gt_world"] = [float(x) for x in self.gt_world[i]]
            if self.gt_depth is not None:
                f["gt_depth"] = float(self.gt_depth[i])
            frames.append(f)
        return {"rig_id": self.rig_id, "fps": self.fps, "frames": frames}

    @classmethod
    def from_dict(cls, d):
        try:
            frames = d["frames"]
            times = [f["t"] for f in frames]
            labels = [f["label"] for f in frames]
            gt_world = [f["gt_world"] for f in frames] if frames and all("gt_world" in f for f in frames) else None
            gt_depth = [f["gt_depth"] for f in frames] if frames and all("gt_depth" in f for f in frames) else None
            return cls(d.get("rig_id", ""), float(d["fps"]), times, labels, gt_world, gt_depth)
        except (KeyError, TypeError) as exc:
            raise InvalidInput(f"malformed clip: missing {exc}") from None


@dataclass(frozen=True)
class RecoveryConfig:
    delta_n: tuple = (4, 8, 15)
    loss_mode: str = "2d-gt"
    lr: float = 1e-2
    steps: int = 2000
    warmup_steps: int = 500
    init_depth: float = None
    lr_final: float = 1e-4
    detach_velocity: bool = False
    warm_start: bool = True
    warm_start_scales: tuple = (0.5, 1.0, 1.5)
    solver: SolverConfig = field(default_factory=SolverConfig)

    def __post_init__(self):
        dn = tuple(int(x) for x in np.atleast_1d(self.delta_n))
        if not dn or min(dn) < 1:
            raise InvalidInput("every delta_n must be >= 1")
        object.__setattr__(self, "delta_n", dn)
        if self.loss_mode not in LOSS_MODES:
            raise InvalidInput(f"loss_mode must be one of {LOSS_MODES}, got {self.loss_mode!r}")
        check_positive(self.lr, "lr")
        check_positive(self.lr_final, "lr_final")
        check_int(self.steps, "steps", 0)
        check_int(self.warmup_steps, "warmup_steps", 0)
        if self.init_depth is not None:
            check_positive(self.init_depth, "init_depth")
        scales = tuple(float(x) for x in np.atleast_1d(self.warm_start_scales))
        if not scales or min(scales) <= 0:
            raise InvalidInput("warm_start_scales must be positive")
        object.__setattr__(self, "warm_start_scales", scales)

    def to_dict(self):
        return {
            "delta_n": list(self.delta_n),
            "loss_mode": self.loss_mode,
            "lr": self.lr,
            "lr_final": self.lr_final,
            "steps": self.steps,
            "warmup_steps": self.warmup_steps,
            "init_depth": self.init_depth,
            "detach_velocity": self.detach_velocity,
            "warm_start": self.warm_start,
            "warm_start_scales": list(self.warm_start_scales),
            "solver": {
                "rtol": self.solver.rtol,
                "atol": self.solver.atol,
                "max_steps": self.solver.max_steps,
                "h_init": self.solver.h_init,
            },
        }


def _check_depths(depths, clip):
    z = np.asarray(depths, dtype=float).ravel()
    if z.size != len(clip):
        raise InvalidInput(f"expected {len(clip)} depths, got {z.size}")
    if np.any(~(z > 0)):
        raise NonPositiveDepth("latent depths must be > 0")
    return z


def velocity_estimate(clip, depths, n, rig):
    """Central-difference world velocity at frame ``n`` (m/s)."""
    if not 1 <= n <= len(clip) - 2:
        raise FrameIndexOutOfRange(f"velocity needs 1 <= n <= {len(clip) - 2}, got {n}")
    z = _check_depths(depths, clip)
    idx = [n - 1, n + 1]
    w = backproject(clip.labels[idx], z[idx], rig)
    return (w[1] - w[0]) / (clip.times[n + 1] - clip.times[n - 1])


class _ClipProblem:
    """Future-loss evaluator for one clip, rig and scene.

    Caches the back-projection rays so that world positions are affine in
    the depths: ``world_i = center + z_i * ray_i``.
    """

    def __init__(self, clip, scene, rig, delta_n, loss_mode, solver, detach_velocity=False):
        self.clip = clip
        self.scene = scene
        self.rig = rig
        self.delta_n = np.array(sorted(set(int(d) for d in delta_n)))
        if self.delta_n.size == 0 or self.delta_n.min() < 0:
            raise InvalidInput("horizons must be >= 0")
        self.loss_mode = loss_mode
        self.solver = solver
        self.detach_velocity = detach_velocity
        if loss_mode == "3d-gt" and clip.gt_world is None:
            raise MissingGroundTruth("3d-gt loss needs gt_world for every frame")
        self.center = rig.center
        self.rays = rig.ray(clip.labels)
        self.R = rig.extrinsics.rotation
        self.t = rig.extrinsics.translation
        k = rig.intrinsics
        self.f = np.array([k.fx, k.fy])
        self.c = np.array([k.cx, k.cy])

    @property
    def anchors(self):
        return np.arange(1, len(self.clip) - int(self.delta_n.max()))

    def check_anchor(self, n):
        if not (1 <= n and n + int(self.delta_n.max()) < len(self.clip)):
            raise FrameIndexOutOfRange(
                f"anchor {n} needs frames {n - 1}..{n + int(self.delta_n.max())} of {len(self.clip)}"
            )

    def initial_states(self, z, anchors):
        times = self.clip.times
        W = self.center + z[:, None] * self.rays
        dt = times[anchors + 1] - times[anchors - 1]
        Y0 = np.empty((anchors.size, 6))
        Y0[:, :3] = W[anchors]
        Y0[:, 3:] = (W[anchors + 1] - W[anchors - 1]) / dt[:, None]
        S0 = np.zeros((anchors.size, 6, 3))
        S0[:, :3, 1] = self.rays[anchors]
        if not self.detach_velocity:
            S0[:, 3:, 0] = -self.rays[anchors - 1] / dt[:, None]
            S0[:, 3:, 2] = self.rays[anchors + 1] / dt[:, None]
        return Y0, S0

    def forecast(self, z, anchors, with_sensitivities=True):
        """Forecast states (A, D, 6) and position sensitivities (A, D, 3, 3)."""
        Y0, S0 = self.initial_states(z, anchors)
        if not with_sensitivities:
            S0 = np.zeros((anchors.size, 6, 0))
        times = self.clip.times
        targets = np.ascontiguousarray(times[anchors[:, None] + self.delta_n[None, :]])
        ys = np.empty((anchors.size, self.delta_n.size, 6))
        Ss = np.empty((anchors.size, self.delta_n.size, 6, S0.shape[2]))
        stats = np.zeros(3)
        params, walls, obstacles = self.scene.packed
        s = self.solver
        status, row = _kernels.dopri5_batch(
            Y0, np.ascontiguousarray(S0), np.ascontiguousarray(times[anchors]), targets,
            params, walls, obstacles, s.rtol, s.atol, s.max_steps, s.h_init, ys, Ss, stats,
        )
        if status != _kernels.STATUS_OK:
            raise StepLimitExceeded(f"forecast from anchor {anchors[row]} failed at t={stats[0]:.9g}", float(stats[0]))
        return ys, Ss[:, :, :3, :]

    def _project(self, P):
        cam = P @ self.R.T + self.t
        Z = cam[..., 2]
        if np.any(Z <= 1e-9):
            raise NonPositiveDepth("forecast passed behind the camera")
        pix = self.f * cam[..., :2] / Z[..., None] + self.c
        # d(pixel)/d(world), shape (..., 2, 3)
        dcam = np.zeros(P.shape[:-1] + (2, 3))
        dcam[..., 0, 0] = self.f[0] / Z
        dcam[..., 1, 1] = self.f[1] / Z
        dcam[..., :, 2] = -self.f * cam[..., :2] / (Z * Z)[..., None]
        return pix, dcam @ self.R

    def residuals(self, z, anchors, want_jac=True):
        """Forecast-minus-target residuals (A, D, c) and their derivatives (A, D, c, 3).

        ``c`` is 2 (pixels) in the 2D modes and 3 (metres) in ``3d-gt``. The
        derivatives are taken w.r.t. the depths of frames ``n-1, n, n+1``.
        """
        ys, Sp = self.forecast(z, anchors, with_sensitivities=want_jac)
        future = anchors[:, None] + self.delta_n[None, :]
        P = ys[..., :3]
        if self.loss_mode == "3d-gt":
            return P - self.clip.gt_world[future], Sp if want_jac else None
        # labels are pinned, so the model's coordinates at the future frame are the labels
        pix, J = self._project(P)
        res = pix - self.clip.labels[future]
        return res, np.einsum("adij,adjk->adik", J, Sp) if want_jac else None

    def anchor_losses(self, z, anchors, want_grad=True):
        """Future loss per anchor (A,) and its gradient w.r.t. the three window depths (A, 3)."""
        res, dres = self.residuals(z, anchors, want_grad)
        loss = np.abs(res).sum(axis=-1).mean(axis=1)
        if not want_grad:
            return loss, None
        # subgradient 0 for residuals at round-off level keeps an exact fit stationary
        sgn = np.where(np.abs(res) > SIGN_DEADZONE, np.sign(res), 0.0)
        grad = np.einsum("adi,adik->ak", sgn, dres) / self.delta_n.size
        return loss, grad

    def total(self, z, want_grad=True):
        anchors = self.anchors
        loss, g = self.anchor_losses(z, anchors, want_grad)
        if not want_grad:
            return float(loss.mean()), None
        grad = np.zeros(z.size)
        for k in range(3):
            np.add.at(grad, anchors - 1 + k, g[:, k])
        return float(loss.mean()), grad / anchors.size

    def forecast_depths(self, z, frames):
        """Camera depth of ``frames`` predicted by forecasting from every anchor within reach."""
        anchors = self.anchors
        horizon = int(self.delta_n.max())
        Y0, _ = self.initial_states(z, anchors)
        params, walls, obstacles = self.scene.packed
        s = self.solver
        out = np.empty(len(frames))
        for i, j in enumerate(frames):
            use = anchors[(j - anchors >= 1) & (j - anchors <= horizon)]
            if use.size == 0:
                use = anchors[-1:]
            ys = np.empty((1, 6))
            depths = []
            for a in use:
                Ss = np.empty((1, 6, 0))
                stats = np.zeros(3)
                status = _kernels.dopri5_sample(
                    Y0[a - anchors[0]].copy(), np.zeros((6, 0)), self.clip.times[a], self.clip.times[[j]],
                    params, walls, obstacles, s.rtol, s.atol, s.max_steps, s.h_init, ys, Ss, stats,
                )
                if status != _kernels.STATUS_OK:
                    raise StepLimitExceeded(f"forecast to frame {j} failed", float(stats[0]))
                depths.append((ys[0, :3] @ self.R.T + self.t)[2])
            out[i] = np.mean(depths)
        if np.any(~(out > 0)):
            raise NonPositiveDepth("forecast depth is not positive")
        return out


def _problem(clip, scene, rig, config, delta_n=None):
    return _ClipProblem(clip, scene, rig, config.delta_n if delta_n is None else delta_n,
                        config.loss_mode, config.solver, config.detach_velocity)


def future_loss(clip, depths, scene, rig, n, config=None, delta_n=None):
    """Future loss of anchor ``n``: mean L1 discrepancy over the forecast horizons.

    Pixels for the 2D modes, metres for ``3d-gt``. ``delta_n`` overrides the
    configured horizons (a horizon of 0 compares the anchor frame itself).
    """
    config = config or RecoveryConfig()
    z = _check_depths(depths, clip)
    prob = _problem(clip, scene, rig, config, delta_n)
    prob.check_anchor(n)
    loss, _ = prob.anchor_losses(z, np.array([n]), want_grad=False)
    return float(loss[0])


def future_loss_gradient(clip, depths, scene, rig, n, config=None, delta_n=None):
    """Derivative of :func:`future_loss` w.r.t. every frame depth (zeros outside the window)."""
    config = config or RecoveryConfig()
    z = _check_depths(depths, clip)
    prob = _problem(clip, scene, rig, config, delta_n)
    prob.check_anchor(n)
    _, g = prob.anchor_losses(z, np.array([n]))
    grad = np.zeros(z.size)
    grad[n - 1:n + 2] = g[0]
    return grad


def mean_future_loss(clip, depths, scene, rig, config=None):
    """Objective of :func:`recover`: future loss averaged over every full anchor window."""
    config = config or RecoveryConfig()
    prob = _problem(clip, scene, rig, config)
    return prob.total(_check_depths(depths, clip), want_grad=False)[0]


def total_loss(future, predicted_heatmaps, target_heatmaps):
    """Future loss plus the mean heatmap L2 term over the frames involved."""
    if len(predicted_heatmaps) != len(target_heatmaps) or not predicted_heatmaps:
        raise InvalidInput("need matching, non-empty heatmap lists")
    hm = np.mean([heatmap_l2(p, t) for p, t in zip(predicted_heatmaps, target_heatmaps)])
    return float(future + hm)


@dataclass(frozen=True, eq=False)
class RecoveryResult:
    depths: np.ndarray
    world: np.ndarray
    loss_trace: np.ndarray
    optimized: np.ndarray

    @property
    def final_loss(self):
        return float(self.loss_trace[-1]) if self.loss_trace.size else float("nan")


def warm_start(prob, starts, max_nfev=300):
    """Gauss-Newton fit of the log-depths on the squared future-loss residuals.

    Runs a trust-region least-squares solve from each start and keeps the
    result with the lowest mean future loss. Evaluations whose forecast
    breaks down return a large constant residual so the trust region
    shrinks instead of failing.
    """
    anchors = prob.anchors
    n = len(prob.clip)
    n_res = anchors.size * prob.delta_n.size * (3 if prob.loss_mode == "3d-gt" else 2)
    rows = np.arange(anchors.size)

    def depths(s):
        return np.exp(np.clip(s, -20.0, 20.0))

    def fun(s):
        try:
            return prob.residuals(depths(s), anchors, want_jac=False)[0].ravel()
        except (NonPositiveDepth, StepLimitExceeded):
            return np.full(n_res, 1e4)

    def jac(s):
        z = depths(s)
        try:
            _, dres = prob.residuals(z, anchors)
        except (NonPositiveDepth, StepLimitExceeded):
            return np.zeros((n_res, n))
        J = np.zeros(dres.shape[:3] + (n,))
        for k in range(3):
            J[rows, :, :, anchors - 1 + k] = dres[..., k] * z[anchors - 1 + k][:, None, None]
        return J.reshape(n_res, n)

    best, best_loss = None, np.inf
    for z0 in starts:
        with np.errstate(over="ignore", invalid="ignore"):
            fit = least_squares(fun, np.log(z0), jac=jac, method="trf", x_scale="jac", max_nfev=max_nfev)
        z = depths(fit.x)
        try:
            loss = prob.total(z, want_grad=False)[0]
        except (NonPositiveDepth, StepLimitExceeded):
            continue
        if loss < best_loss:
            best, best_loss = z, loss
    return best


class _Adam:
    def __init__(self, size, beta1=0.9, beta2=0.999, eps=1e-8):
        self.m = np.zeros(size)
        self.v = np.zeros(size)
        self.beta1, self.beta2, self.eps = beta1, beta2, eps
        self.k = 0

    def step(self, grad, lr):
        self.k += 1
        self.m = self.beta1 * self.m + (1 - self.beta1) * grad
        self.v = self.beta2 * self.v + (1 - self.beta2) * grad * grad
        m_hat = self.m / (1 - self.beta1**self.k)
        v_hat = self.v / (1 - self.beta2**self.k)
        return lr * m_hat / (np.sqrt(v_hat) + self.eps)


def _learning_rate(config, k):
    """Constant through the warmup, then cosine decay to ``lr_final``."""
    decay_steps = config.steps - config.warmup_steps
    if k < config.warmup_steps or decay_steps <= 0:
        return config.lr
    frac = (k - config.warmup_steps) / decay_steps
    return config.lr_final + 0.5 * (config.lr - config.lr_final) * (1 + np.cos(np.pi * frac))


def recover(clip, scene, rig, config=None, init_depths=None):
    """Fit the latent depths of ``clip`` by minimising the mean future loss.

    With ``config.warm_start`` the log-depths are first fitted by
    Gauss-Newton on the squared residuals, started from constant depths
    ``init_depth * warm_start_scales`` (or from ``init_depths`` when given).
    Adam then minimises the L1 future loss, scaled by a factor rising
    linearly from 0 to 1 over ``warmup_steps``; the recorded trace is the
    unscaled loss before each update. Frames that no anchor window touches
    get the camera depth forecast from the anchors that reach them.

    Raises
    ------
    DivergedRecovery
        If the loss becomes non-finite or exceeds ``1e6``, or the forecast
        breaks down (behind the camera, step limit).
    """
    config = config or RecoveryConfig()
    if len(clip) <= max(config.delta_n) + 2:
        raise InvalidInput(f"clip of {len(clip)} frames is too short for delta_n={max(config.delta_n)}")
    prob = _problem(clip, scene, rig, config)
    if init_depths is None:
        init = config.init_depth if config.init_depth is not None else float(np.linalg.norm(rig.center))
        scales = config.warm_start_scales if config.warm_start else (1.0,)
        starts = [np.full(len(clip), f * init) for f in scales]
    else:
        starts = [_check_depths(init_depths, clip)]
    z0 = starts[0]
    if config.warm_start:
        z_ws = warm_start(prob, starts)
        if z_ws is not None:
            z0 = z_ws
    s = np.log(z0)
    adam = _Adam(s.size)
    trace = []
    try:
        for k in range(config.steps):
            loss, grad_z = prob.total(np.exp(s))
            trace.append(loss)
            if not np.isfinite(loss) or loss > DIVERGENCE_LIMIT:
                raise DivergedRecovery(f"loss {loss:.6g} at step {k}", trace)
            warm = min(1.0, k / config.warmup_steps) if config.warmup_steps else 1.0
            s = s - adam.step(warm * grad_z * np.exp(s), _learning_rate(config, k))
        z = np.exp(s)
        trace.append(prob.total(z, want_grad=False)[0])
        if not np.isfinite(trace[-1]) or trace[-1] > DIVERGENCE_LIMIT:
            raise DivergedRecovery(f"final loss {trace[-1]:.6g}", trace)
        optimized = np.zeros(len(clip), dtype=bool)
        optimized[: prob.anchors[-1] + 2] = True
        rest = np.flatnonzero(~optimized)
        if rest.size:
            z[rest] = prob.forecast_depths(z, rest)
    except (NonPositiveDepth, StepLimitExceeded, FloatingPointError) as exc:
        raise DivergedRecovery(f"forecast broke down: {exc}", trace) from exc
    world = backproject(clip.labels, z, rig)
    return RecoveryResult(z, world, np.asarray(trace), optimized)


class PhysicsDepthRecovery(BaseEstimator):
    """Estimator wrapper around :func:`recover`.

    ``fit(clip)`` optimises the clip's latent depths; ``transform`` returns
    them and ``predict`` the recovered world trajectory (N, 3).

    Parameters
    ----------
    scene : SceneGeometry
    rig : CameraRig
    delta_n : tuple of int
        Forecast horizons in frames.
    loss_mode : {"2d-predict", "2d-gt", "3d-gt"}
    lr, lr_final : float
        Adam step size on log-depths, held through the warmup then cosine-decayed.
    steps, warmup_steps : int
    init_depth : float, optional
        Initial depth for every frame; defaults to the camera's distance to the origin.
    detach_velocity : bool
        Stop gradients through the velocity estimate.
    warm_start : bool
        Run the Gauss-Newton warm start before the Adam iterations.
    warm_start_scales : tuple of float
        Multiples of ``init_depth`` used as constant-depth starting points.
    solver : SolverConfig, optional
    """

    def __init__(self, scene=None, rig=None, delta_n=(4, 8, 15), loss_mode="2d-gt", lr=1e-2, lr_final=1e-4,
                 steps=2000, warmup_steps=500, init_depth=None, detach_velocity=False, warm_start=True,
                 warm_start_scales=(0.5, 1.0, 1.5), solver=None):
        self.scene = scene
        self.rig = rig
        self.delta_n = delta_n
        self.loss_mode = loss_mode
        self.lr = lr
        self.lr_final = lr_final
        self.steps = steps
        self.warmup_steps = warmup_steps
        self.init_depth = init_depth
        self.detach_velocity = detach_velocity
        self.warm_start = warm_start
        self.warm_start_scales = warm_start_scales
        self.solver = solver

    def _config(self):
        return RecoveryConfig(
            delta_n=self.delta_n, loss_mode=self.loss_mode, lr=self.lr, lr_final=self.lr_final, steps=self.steps,
            warmup_steps=self.warmup_steps, init_depth=self.init_depth, detach_velocity=self.detach_velocity,
            warm_start=self.warm_start, warm_start_scales=self.warm_start_scales, solver=self.solver or SolverConfig(),
        )

    def fit(self, clip, y=None):
        if self.scene is None or self.rig is None:
            raise InvalidInput("PhysicsDepthRecovery needs a scene and a rig")
        result = recover(clip, self.scene, self.rig, self._config())
        self.depths_ = result.depths
        self.world_ = result.world
        self.loss_trace_ = result.loss_trace
        self.optimized_ = result.optimized
        self.n_iter_ = self.steps
        return self

    def _check_fitted(self):
        if not hasattr(self, "depths_"):
            raise NotFittedError("PhysicsDepthRecovery is not fitted yet")

    def transform(self, clip=None):
        self._check_fitted()
        return self.depths_

    def predict(self, clip=None):
        self._check_fitted()
        return self.world_

    def fit_predict(self, clip, y=None):
        return self.fit(clip).predict()


def project_world(world, rig):
    """Pixels of world points (thin alias used by the CLI and reports)."""
    return project(world, rig)[0]
