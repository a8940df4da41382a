"""Pinhole camera model, look-at rigs and extrinsic calibration.

World points are mapped to camera coordinates by a rigid transform
``p_cam = R @ p_world + t`` and to pixels by the intrinsic matrix.
Image coordinates follow the cell-index convention: ``u`` runs along the
image width, ``v`` along the height, with ``(0, 0)`` at the centre of the
top-left pixel.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize
from scipy.spatial.transform import Rotation
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from ._validation import as_points, check_positive, frozen_array
from .exceptions import (
    DegenerateConfiguration,
    DegenerateUpVector,
    InsufficientCorrespondences,
    InvalidInput,
    NonPositiveDepth,
)

MIN_DEPTH = 1e-9


@dataclass(frozen=True)
class IntrinsicParams:
    fx: float
    fy: float
    cx: float
    cy: float

    def __post_init__(self):
        for name in ("fx", "fy"):
            object.__setattr__(self, name, check_positive(getattr(self, name), name))
        for name in ("cx", "cy"):
            value = float(getattr(self, name))
            if not np.isfinite(value):
                raise InvalidInput(f"{name} must be finite")
            object.__setattr__(self, name, value)

    @property
    def matrix(self):
        return np.array([[self.fx, 0.0, self.cx], [0.0, self.fy, self.cy], [0.0, 0.0, 1.0]])

    @classmethod
    def from_fov(cls, fov_deg, width, height):
        """Square pixels with the vertical field of view ``fov_deg``, centred principal point."""
        f = 0.5 * height / np.tan(np.radians(fov_deg) / 2)
        return cls(f, f, width / 2, height / 2)

    def to_dict(self):
        return {"fx": self.fx, "fy": self.fy, "cx": self.cx, "cy": self.cy}

    @classmethod
    def from_dict(cls, d):
        try:
            return cls(float(d["fx"]), float(d["fy"]), float(d["cx"]), float(d["cy"]))
        except KeyError as exc:
            raise InvalidInput(f"intrinsics missing key {exc.args[0]!r}") from None


@dataclass(frozen=True, eq=False)
class ExtrinsicTransform:
    """Rigid world-to-camera transform ``p_cam = rotation @ p_world + translation``."""

    rotation: np.ndarray
    translation: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        R = frozen_array(self.rotation, (3, 3), "rotation")
        t = frozen_array(self.translation, (3,), "translation")
        if np.linalg.norm(R.T @ R - np.eye(3)) >= 1e-9 or np.linalg.det(R) <= 0:
            raise InvalidInput("rotation must be orthonormal with determinant +1")
        object.__setattr__(self, "rotation", R)
        object.__setattr__(self, "translation", t)

    @classmethod
    def identity(cls):
        return cls(np.eye(3), np.zeros(3))

    @property
    def matrix(self):
        M = np.eye(4)
        M[:3, :3] = self.rotation
        M[:3, 3] = self.translation
        return M

    @property
    def camera_center(self):
        return -self.rotation.T @ self.translation

    def apply(self, points):
        return points @ self.rotation.T + self.translation

    def apply_inverse(self, points):
        return (points - self.translation) @ self.rotation

    def to_dict(self):
        return {
            "rotation": [float(x) for x in self.rotation.ravel()],
            "translation": [float(x) for x in self.translation],
        }

    @classmethod
    def from_dict(cls, d):
        try:
            rot = np.asarray(d["rotation"], dtype=float)
            trans = np.asarray(d["translation"], dtype=float)
        except KeyError as exc:
            raise InvalidInput(f"extrinsics missing key {exc.args[0]!r}") from None
        if rot.size != 9 or trans.size != 3:
            raise InvalidInput("extrinsics need 9 rotation and 3 translation numbers")
        return cls(rot.reshape(3, 3), trans)

    def __eq__(self, other):
        if not isinstance(other, ExtrinsicTransform):
            return NotImplemented
        return np.array_equal(self.rotation, other.rotation) and np.array_equal(
            self.translation, other.translation
        )

    def __hash__(self):
        return hash((self.rotation.tobytes(), self.translation.tobytes()))


@dataclass(frozen=True)
class CameraRig:
    intrinsics: IntrinsicParams
    extrinsics: ExtrinsicTransform

    @property
    def center(self):
        return self.extrinsics.camera_center

    def world_to_camera(self, points):
        return self.extrinsics.apply(as_points(points, 3))

    def camera_to_world(self, points):
        return self.extrinsics.apply_inverse(as_points(points, 3))

    def ray(self, pixels):
        """World-frame direction ``d`` with ``backproject(pixel, z) = center + z * d``."""
        pixels = as_points(pixels, 2, "pixels")
        k = self.intrinsics
        cam = np.stack(
            [(pixels[..., 0] - k.cx) / k.fx, (pixels[..., 1] - k.cy) / k.fy, np.ones(pixels.shape[:-1])],
            axis=-1,
        )
        return cam @ self.extrinsics.rotation

    def project(self, points):
        return project(points, self)

    def backproject(self, pixels, depth):
        return backproject(pixels, depth, self)

    def to_dict(self):
        return {"intrinsics": self.intrinsics.to_dict(), "extrinsics": self.extrinsics.to_dict()}

    @classmethod
    def from_dict(cls, d):
        try:
            return cls(IntrinsicParams.from_dict(d["intrinsics"]), ExtrinsicTransform.from_dict(d["extrinsics"]))
        except KeyError as exc:
            raise InvalidInput(f"camera missing key {exc.args[0]!r}") from None


@dataclass(frozen=True)
class Correspondence:
    """A scene point with known world position and its labelled pixel."""

    world: tuple
    pixel: tuple

    def __post_init__(self):
        w = as_points(self.world, 3, "world")
        p = as_points(self.pixel, 2, "pixel")
        if w.shape != (3,) or p.shape != (2,):
            raise InvalidInput("a correspondence holds one world point and one pixel")
        object.__setattr__(self, "world", tuple(float(x) for x in w))
        object.__setattr__(self, "pixel", tuple(float(x) for x in p))

    def to_dict(self):
        return {"world": list(self.world), "pixel": list(self.pixel)}

    @classmethod
    def from_dict(cls, d):
        try:
            return cls(d["world"], d["pixel"])
        except (KeyError, TypeError) as exc:
            raise InvalidInput(f"malformed correspondence: {exc}") from None


def correspondence_arrays(correspondences):
    """Stack correspondences into ``(world (N, 3), pixels (N, 2))``."""
    items = [c if isinstance(c, Correspondence) else Correspondence.from_dict(c) for c in correspondences]
    world = np.array([c.world for c in items], dtype=float).reshape(-1, 3)
    pixels = np.array([c.pixel for c in items], dtype=float).reshape(-1, 2)
    return world, pixels


def project(world, rig):
    """Project world points to pixels.

    Parameters
    ----------
    world : array_like, shape (..., 3)
        Points in world coordinates (m).
    rig : CameraRig

    Returns
    -------
    pixels : ndarray, shape (..., 2)
    depth : ndarray, shape (...)
        Camera depth of each point (m).

    Raises
    ------
    NonPositiveDepth
        If any point lies at or behind the camera plane.
    """
    cam = rig.world_to_camera(world)
    z = cam[..., 2]
    if np.any(z <= MIN_DEPTH):
        raise NonPositiveDepth("point at or behind the camera plane")
    k = rig.intrinsics
    u = k.fx * cam[..., 0] / z + k.cx
    v = k.fy * cam[..., 1] / z + k.cy
    return np.stack([u, v], axis=-1), z


def backproject(pixels, depth, rig):
    """Lift pixels with known camera depth back to world coordinates."""
    pixels = as_points(pixels, 2, "pixels")
    depth = np.asarray(depth, dtype=float)
    if np.any(~(depth > 0)):
        raise NonPositiveDepth("camera depth must be > 0")
    k = rig.intrinsics
    cam = np.stack(
        [(pixels[..., 0] - k.cx) * depth / k.fx, (pixels[..., 1] - k.cy) * depth / k.fy,
         np.broadcast_to(depth, pixels.shape[:-1])],
        axis=-1,
    )
    return rig.extrinsics.apply_inverse(cam)


def look_at(center, target, intrinsics, up=(0.0, 0.0, 1.0)):
    """Rig at ``center`` whose optical axis passes through ``target``.

    World ``up`` maps to the upward image direction (decreasing ``v``).
    """
    center = np.asarray(center, dtype=float)
    forward = np.asarray(target, dtype=float) - center
    forward /= np.linalg.norm(forward)
    up = np.asarray(up, dtype=float)
    up_perp = up - (up @ forward) * forward
    norm = np.linalg.norm(up_perp)
    if norm < 1e-9:
        raise DegenerateUpVector("view axis is parallel to the up vector")
    y_axis = -up_perp / norm
    x_axis = np.cross(y_axis, forward)
    R = np.stack([x_axis, y_axis, forward])
    return CameraRig(intrinsics, ExtrinsicTransform(R, -R @ center))


def spherical_center(d, theta, phi):
    """Camera centre at radius ``d`` with polar angle ``theta`` and azimuth ``phi`` (degrees).

    Negative ``theta`` places the camera above the ground plane.
    """
    th, ph = np.radians(theta), np.radians(phi)
    return d * np.array([np.cos(th) * np.cos(ph), np.cos(th) * np.sin(ph), -np.sin(th)])


def rig_from_spherical(d, theta, phi, intrinsics):
    """Look-at rig on a sphere around the world origin."""
    d = check_positive(d, "d")
    return look_at(spherical_center(d, theta, phi), np.zeros(3), intrinsics)


# Camera placements of the synthetic scenes: (d [m], theta [deg], phi [deg]).
SYNTHETIC_CAMERAS = (
    (8.0, -60.0, 40.0),
    (10.0, -65.0, 0.0),
    (10.0, -55.0, 60.0),
    (9.0, -60.0, 20.0),
    (7.0, -70.0, 50.0),
    (9.0, -50.0, 10.0),
    (10.0, -60.0, 30.0),
    (8.0, -70.0, 0.0),
    (8.0, -50.0, 60.0),
)


def synthetic_rig(index, intrinsics=None):
    """Rig number ``index`` (1-based) of the synthetic camera table."""
    if not 1 <= index <= len(SYNTHETIC_CAMERAS):
        raise InvalidInput(f"camera index must be in 1..{len(SYNTHETIC_CAMERAS)}")
    if intrinsics is None:
        intrinsics = default_intrinsics()
    return rig_from_spherical(*SYNTHETIC_CAMERAS[index - 1], intrinsics)


def default_intrinsics():
    """224 x 224 sensor with a 60 degree field of view."""
    return IntrinsicParams.from_fov(60.0, 224, 224)


# ---------------------------------------------------------------------------
# calibration


def _hartley(points):
    centroid = points.mean(axis=0)
    dist = np.linalg.norm(points - centroid, axis=1).mean()
    if dist <= 0:
        raise DegenerateConfiguration("all correspondences coincide")
    scale = np.sqrt(points.shape[1]) / dist
    T = np.eye(points.shape[1] + 1)
    T[:-1, :-1] *= scale
    T[:-1, -1] = -scale * centroid
    return T


def _split_correspondences(world, pixels):
    world = as_points(world, 3, "world")
    pixels = as_points(pixels, 2, "pixels")
    if world.ndim != 2 or pixels.ndim != 2 or len(world) != len(pixels):
        raise InvalidInput("world and pixel arrays must be (N, 3) and (N, 2) with equal N")
    return world, pixels


def dlt_extrinsics(world, pixels, intrinsics):
    """Linear pose estimate from 2D-3D correspondences with known intrinsics.

    Both point sets are isotropically normalised before the homogeneous
    system is solved; the rotation block of the result is projected onto
    SO(3) with an SVD.
    """
    world, pixels = _split_correspondences(world, pixels)
    n = len(world)
    if n < 6:
        raise InsufficientCorrespondences(f"need at least 6 correspondences, got {n}")

    K_inv = np.linalg.inv(intrinsics.matrix)
    img = (np.c_[pixels, np.ones(n)] @ K_inv.T)[:, :2]
    T2, T3 = _hartley(img), _hartley(world)
    x = np.c_[img, np.ones(n)] @ T2.T
    X = np.c_[world, np.ones(n)] @ T3.T

    A = np.zeros((2 * n, 12))
    A[0::2, 0:4] = X
    A[0::2, 8:12] = -x[:, [0]] * X
    A[1::2, 4:8] = X
    A[1::2, 8:12] = -x[:, [1]] * X
    _, s, Vt = np.linalg.svd(A)
    # one null direction is expected; a second one means the points do not pin the pose
    if s[-2] < 1e-10 * s[0]:
        raise DegenerateConfiguration("correspondences do not determine the pose (e.g. coplanar points)")
    P = np.linalg.inv(T2) @ Vt[-1].reshape(3, 4) @ T3

    M = P[:, :3]
    if np.linalg.det(M) < 0:
        P = -P
        M = -M
    U, S, Vt_m = np.linalg.svd(M)
    R = U @ Vt_m
    t = P[:, 3] / S.mean()
    return ExtrinsicTransform(R, t)


def reprojection_errors(extrinsics, world, pixels, intrinsics):
    """Per-point pixel distance between projected ``world`` and ``pixels``."""
    proj, _ = project(world, CameraRig(intrinsics, extrinsics))
    return np.linalg.norm(proj - pixels, axis=-1)


def reprojection_rms(extrinsics, world, pixels, intrinsics):
    return float(np.sqrt(np.mean(reprojection_errors(extrinsics, world, pixels, intrinsics) ** 2)))


@dataclass(frozen=True)
class RefinementResult:
    extrinsics: ExtrinsicTransform
    converged: bool
    loss_trace: tuple
    n_iter: int

    @property
    def rms(self):
        return float(np.sqrt(self.loss_trace[-1]))


def _pose_from_params(params, R0):
    R = Rotation.from_rotvec(params[:3]).as_matrix() @ R0
    U, _, Vt = np.linalg.svd(R)
    return U @ Vt, params[3:]


def refine_extrinsics(initial, world, pixels, intrinsics, max_iter=200, gtol=1e-10, fd_step=1e-6):
    """Minimise the mean squared reprojection error over the 6-dof pose.

    The rotation is parametrised as an axis-angle increment applied to the
    initial rotation. Gradients are central finite differences. The loss
    trace holds the loss at the initial pose followed by every accepted
    iterate; BFGS with a sufficient-decrease line search keeps it
    non-increasing.
    """
    world, pixels = _split_correspondences(world, pixels)
    R0 = initial.rotation
    K = intrinsics

    def loss(params):
        R, t = _pose_from_params(params, R0)
        cam = world @ R.T + t
        z = cam[:, 2]
        if np.any(z <= MIN_DEPTH):
            return np.inf
        du = K.fx * cam[:, 0] / z + K.cx - pixels[:, 0]
        dv = K.fy * cam[:, 1] / z + K.cy - pixels[:, 1]
        return float(np.mean(du * du + dv * dv))

    def grad(params):
        g = np.empty(6)
        for i in range(6):
            e = np.zeros(6)
            e[i] = fd_step
            g[i] = (loss(params + e) - loss(params - e)) / (2 * fd_step)
        return g

    x0 = np.r_[np.zeros(3), initial.translation]
    if not np.isfinite(loss(x0)):
        raise NonPositiveDepth("initial pose puts correspondences behind the camera")
    trace = [loss(x0)]
    if np.max(np.abs(grad(x0))) < gtol:
        return RefinementResult(initial, True, tuple(trace), 0)

    res = minimize(
        loss, x0, jac=grad, method="BFGS",
        callback=lambda xk: trace.append(loss(xk)),
        options={"gtol": gtol, "maxiter": max_iter},
    )
    best = res.x if res.fun <= trace[0] else x0
    if loss(best) < trace[-1]:
        trace.append(loss(best))
    R, t = _pose_from_params(best, R0)
    # status 1 means the iteration budget ran out; precision-loss stops happen at the minimum
    return RefinementResult(ExtrinsicTransform(R, t), res.status != 1, tuple(trace), int(res.nit))


def calibrate_extrinsics(world, pixels, intrinsics, refine=True, **kwargs):
    """DLT initialisation followed by quasi-Newton refinement."""
    initial = dlt_extrinsics(world, pixels, intrinsics)
    if not refine:
        return RefinementResult(initial, True, (reprojection_rms(initial, world, pixels, intrinsics) ** 2,), 0)
    return refine_extrinsics(initial, world, pixels, intrinsics, **kwargs)


def rotation_angle_between(R1, R2):
    """Geodesic distance on SO(3) in radians."""
    c = (np.trace(R1.T @ R2) - 1) / 2
    return float(np.arccos(np.clip(c, -1.0, 1.0)))


class ExtrinsicCalibrator(BaseEstimator):
    """Estimate a camera pose from 2D-3D correspondences.

    ``fit(X, y)`` takes world points ``X`` of shape (N, 3) and pixel
    observations ``y`` of shape (N, 2). ``predict`` projects world points
    with the fitted pose and ``score`` returns the negative reprojection RMS.

    Examples
    --------
    >>> cal = ExtrinsicCalibrator(intrinsics=IntrinsicParams(100, 100, 112, 112))
    >>> cal.fit(world, pixels).rig_.extrinsics  # doctest: +SKIP
    """

    def __init__(self, intrinsics=None, refine=True, max_iter=200, gtol=1e-10):
        self.intrinsics = intrinsics
        self.refine = refine
        self.max_iter = max_iter
        self.gtol = gtol

    def fit(self, X, y):
        if self.intrinsics is None:
            raise InvalidInput("ExtrinsicCalibrator needs intrinsics")
        result = calibrate_extrinsics(X, y, self.intrinsics, refine=self.refine,
                                      **({"max_iter": self.max_iter, "gtol": self.gtol} if self.refine else {}))
        self.rig_ = CameraRig(self.intrinsics, result.extrinsics)
        self.converged_ = result.converged
        self.loss_trace_ = np.asarray(result.loss_trace)
        self.n_iter_ = result.n_iter
        self.rms_ = reprojection_rms(result.extrinsics, X, y, self.intrinsics)
        return self

    def _check_fitted(self):
        if not hasattr(self, "rig_"):
            raise NotFittedError("ExtrinsicCalibrator is not fitted yet")

    def predict(self, X):
        self._check_fitted()
        return project(X, self.rig_)[0]

    def score(self, X, y):
        self._check_fitted()
        return -reprojection_rms(self.rig_.extrinsics, X, y, self.intrinsics)
