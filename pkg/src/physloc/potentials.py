"""Scene potentials and the force field they induce.

Ballistic scenes combine gravity above a floor at ``z = 0``, a steep floor
barrier, optional infinite walls and sigmoid-box obstacles. The stored
potential uses exact ReLU barriers while the acceleration replaces each
ReLU derivative by ``sigmoid(beta_gwf * x)`` so that bounces stay smooth.
Spring scenes tie the ball to the world origin with Hooke's law.
"""

from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from ._validation import as_points, as_vector, check_positive
from .exceptions import InvalidInput


@dataclass(frozen=True)
class SmoothingParams:
    beta_obstacle: float = 66.0
    beta_gwf: float = 200.0
    barrier_c: float = 1000.0

    def __post_init__(self):
        for name in ("beta_obstacle", "beta_gwf", "barrier_c"):
            object.__setattr__(self, name, check_positive(getattr(self, name), name))


@dataclass(frozen=True)
class Obstacle:
    """Box of size ``2*l x 2*w x h`` whose base centre sits at ``center``, rotated by ``yaw``."""

    center: tuple
    yaw: float
    l: float
    w: float
    h: float

    def __post_init__(self):
        object.__setattr__(self, "center", tuple(float(x) for x in as_vector(self.center, 3, "center")))
        object.__setattr__(self, "yaw", float(self.yaw))
        for name in ("l", "w", "h"):
            object.__setattr__(self, name, check_positive(getattr(self, name), name))

    @property
    def _rotation(self):
        c, s = np.cos(self.yaw), np.sin(self.yaw)
        return np.array([[c, s, 0.0], [-s, c, 0.0], [0.0, 0.0, 1.0]])


_AXES = {"x": 0, "y": 1}
_SIDES = {"keep-above": 1.0, "keep-below": -1.0}


@dataclass(frozen=True)
class WallSpec:
    """Infinite wall perpendicular to ``axis`` at ``offset``.

    ``keep-above`` confines the ball to ``coord >= offset``, ``keep-below``
    to ``coord <= offset``.
    """

    axis: str
    offset: float
    side: str

    def __post_init__(self):
        if self.axis not in _AXES:
            raise InvalidInput(f"wall axis must be 'x' or 'y', got {self.axis!r}")
        if self.side not in _SIDES:
            raise InvalidInput(f"wall side must be 'keep-above' or 'keep-below', got {self.side!r}")
        object.__setattr__(self, "offset", float(self.offset))


@dataclass(frozen=True)
class SceneGeometry:
    kind: str = "ballistic"
    gravity: float = 1.0
    mass: float = 1.0
    spring_k: float = 0.0
    walls: tuple = ()
    obstacles: tuple = ()
    smoothing: SmoothingParams = field(default_factory=SmoothingParams)

    def __post_init__(self):
        object.__setattr__(self, "walls", tuple(self.walls))
        object.__setattr__(self, "obstacles", tuple(self.obstacles))
        check_positive(self.mass, "mass")
        if self.kind == "ballistic":
            check_positive(self.gravity, "gravity")
        elif self.kind == "spring":
            check_positive(self.spring_k, "spring_k")
            if self.walls or self.obstacles:
                raise InvalidInput("spring scenes cannot have walls or obstacles")
        else:
            raise InvalidInput(f"scene kind must be 'ballistic' or 'spring', got {self.kind!r}")
        object.__setattr__(self, "_packed", self._pack())

    @classmethod
    def ballistic(cls, gravity=1.0, mass=1.0, walls=(), obstacles=(), smoothing=None):
        return cls("ballistic", gravity, mass, 0.0, walls, obstacles, smoothing or SmoothingParams())

    @classmethod
    def spring(cls, spring_k=3.0, mass=1.0):
        return cls("spring", 0.0, mass, spring_k)

    def _pack(self):
        s = self.smoothing
        kind = _kernels.KIND_BALLISTIC if self.kind == "ballistic" else _kernels.KIND_SPRING
        params = np.array([kind, self.gravity, self.mass, self.spring_k, s.barrier_c, s.beta_gwf, s.beta_obstacle])
        walls = np.array([[_AXES[w.axis], w.offset, _SIDES[w.side]] for w in self.walls], dtype=float).reshape(-1, 3)
        obstacles = np.array(
            [[*o.center, o.yaw, o.l, o.w, o.h] for o in self.obstacles], dtype=float
        ).reshape(-1, 7)
        return params, walls, obstacles

    @property
    def packed(self):
        """``(params, walls, obstacles)`` arrays consumed by the compiled kernels."""
        return self._packed

    def to_dict(self):
        s = self.smoothing
        return {
            "kind": self.kind,
            "gravity": self.gravity,
            "mass": self.mass,
            "spring_k": self.spring_k,
            "smoothing": {"beta_obstacle": s.beta_obstacle, "beta_gwf": s.beta_gwf, "barrier_c": s.barrier_c},
            "walls": [{"axis": w.axis, "offset": w.offset, "side": w.side} for w in self.walls],
            "obstacles": [
                {"center": list(o.center), "yaw": o.yaw, "l": o.l, "w": o.w, "h": o.h} for o in self.obstacles
            ],
        }

    @classmethod
    def from_dict(cls, d):
        try:
            smoothing = SmoothingParams(**d.get("smoothing", {}))
            return cls(
                kind=d.get("kind", "ballistic"),
                gravity=float(d.get("gravity", 1.0 if d.get("kind", "ballistic") == "ballistic" else 0.0)),
                mass=float(d.get("mass", 1.0)),
                spring_k=float(d.get("spring_k", 0.0)),
                walls=[WallSpec(**w) for w in d.get("walls", [])],
                obstacles=[Obstacle(**o) for o in d.get("obstacles", [])],
                smoothing=smoothing,
            )
        except TypeError as exc:
            raise InvalidInput(f"malformed scene: {exc}") from None


def world_to_object(r, obstacle):
    """Coordinates of ``r`` in the frame where ``obstacle`` is axis-aligned at the origin."""
    r = as_points(r, 3)
    return (r - np.asarray(obstacle.center)) @ obstacle._rotation.T


def object_to_world(p, obstacle):
    p = as_points(p, 3)
    return p @ obstacle._rotation + np.asarray(obstacle.center)


def _map_points(fn, r):
    r = as_points(r, 3)
    flat = np.ascontiguousarray(r.reshape(-1, 3))
    out = np.array([fn(p) for p in flat])
    return out.reshape(r.shape[:-1] + out.shape[1:])


def potential_energy(r, scene):
    """Potential energy in J at world position(s) ``r``."""
    params, walls, obstacles = scene.packed
    out = _map_points(lambda p: _kernels.potential_per_mass(p, params, walls, obstacles), r)
    return scene.mass * out if out.ndim else float(scene.mass * out)


def acceleration(r, scene):
    """Acceleration in m/s^2 at world position(s) ``r``."""
    params, walls, obstacles = scene.packed
    J = np.empty((3, 3))

    def one(p):
        a = np.empty(3)
        _kernels.accel_jac(p, params, walls, obstacles, a, J, False)
        return a

    return _map_points(one, r)


def acceleration_jacobian(r, scene):
    """Derivative of :func:`acceleration` w.r.t. position, shape (..., 3, 3)."""
    params, walls, obstacles = scene.packed

    def one(p):
        a = np.empty(3)
        J = np.empty((3, 3))
        _kernels.accel_jac(p, params, walls, obstacles, a, J, True)
        return J

    return _map_points(one, r)


def hamiltonian(state, scene):
    """Total energy ``m |v|^2 / 2 + V(r)`` in J of a :class:`~physloc.integrator.BallState`."""
    v = as_points(state.v, 3, "velocity")
    kinetic = 0.5 * scene.mass * np.sum(v * v, axis=-1)
    return kinetic + potential_energy(state.r, scene)


def barrier_distance(r, scene):
    """Distance from ``r`` to the nearest floor or wall plane (m)."""
    r = as_points(r, 3)
    d = np.abs(r[..., 2])
    for w in scene.walls:
        d = np.minimum(d, np.abs(r[..., _AXES[w.axis]] - w.offset))
    return d
