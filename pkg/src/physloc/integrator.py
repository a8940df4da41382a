"""Adaptive Dormand-Prince 5(4) integration of the ball's equations of motion.

``integrate_dual`` carries a 6 x P sensitivity matrix through the same
Runge-Kutta stages as the state (forward-mode differentiation of the
discrete solver). Step sizes are chosen from the state alone, so the
primal trajectory is identical with or without sensitivities.
"""

from dataclasses import dataclass

import numpy as np

from . import _kernels
from ._validation import as_vector, check_int, check_positive
from .exceptions import InvalidInput, StepLimitExceeded


@dataclass(frozen=True)
class BallState:
    r: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "r", as_vector(self.r, 3, "r").copy())
        object.__setattr__(self, "v", as_vector(self.v, 3, "v").copy())

    @classmethod
    def from_vector(cls, y):
        return cls(y[:3], y[3:6])

    def as_vector(self):
        return np.concatenate([self.r, self.v])

    def __eq__(self, other):
        if not isinstance(other, BallState):
            return NotImplemented
        return np.array_equal(self.r, other.r) and np.array_equal(self.v, other.v)


@dataclass(frozen=True)
class DualState:
    """State plus derivatives of its 6 components w.r.t. P seed parameters."""

    primal: BallState
    partials: np.ndarray

    def __post_init__(self):
        partials = np.array(self.partials, dtype=float)
        if partials.ndim != 2 or partials.shape[0] != 6:
            raise InvalidInput(f"partials must have shape (6, P), got {partials.shape}")
        object.__setattr__(self, "partials", partials)

    @classmethod
    def seeded(cls, state):
        """Seed with the identity: partials are d(state)/d(state0)."""
        return cls(state, np.eye(6))


@dataclass(frozen=True)
class SolverConfig:
    rtol: float = 1e-8
    atol: float = 1e-10
    max_steps: int = 100000
    h_init: float = 1e-3

    def __post_init__(self):
        check_positive(self.rtol, "rtol")
        check_positive(self.atol, "atol")
        check_positive(self.h_init, "h_init")
        check_int(self.max_steps, "max_steps", 1)


@dataclass(frozen=True)
class SolveInfo:
    n_accepted: int
    n_rejected: int


def _check_status(status, stats):
    if status == _kernels.STATUS_STEP_LIMIT:
        raise StepLimitExceeded(f"step limit exceeded at t={stats[0]:.9g}", float(stats[0]))
    if status == _kernels.STATUS_NONFINITE:
        raise StepLimitExceeded(f"non-finite state at t={stats[0]:.9g}", float(stats[0]))


def _run(y0, S0, t0, times, scene, cfg):
    times = np.asarray(times, dtype=float)
    if np.any(np.diff(times) < 0) or (times.size and times[0] < t0):
        raise InvalidInput("sample times must be ascending and not before t0")
    params, walls, obstacles = scene.packed
    ys = np.empty((times.size, 6))
    Ss = np.empty((times.size, 6, S0.shape[1]))
    stats = np.zeros(3)
    status = _kernels.dopri5_sample(
        np.ascontiguousarray(y0, dtype=float), np.ascontiguousarray(S0, dtype=float), float(t0), times,
        params, walls, obstacles, cfg.rtol, cfg.atol, cfg.max_steps, cfg.h_init, ys, Ss, stats,
    )
    _check_status(status, stats)
    return ys, Ss, SolveInfo(int(stats[1]), int(stats[2]))


def integrate(state0, t0, t1, scene, cfg=None, full_output=False):
    """Advance ``state0`` from ``t0`` to ``t1``.

    Returns the state at ``t1``; with ``full_output`` also a :class:`SolveInfo`
    holding the accepted and rejected step counts.

    Raises
    ------
    StepLimitExceeded
        When more than ``cfg.max_steps`` steps are attempted. The exception's
        ``t_reached`` attribute holds the last accepted time.
    """
    cfg = cfg or SolverConfig()
    if t1 < t0:
        raise InvalidInput("t1 must be >= t0")
    ys, _, info = _run(state0.as_vector(), np.zeros((6, 0)), t0, [t1], scene, cfg)
    out = state0 if t1 == t0 else BallState.from_vector(ys[0])
    return (out, info) if full_output else out


def sample_trajectory(state0, t0, times, scene, cfg=None):
    """States at each of the ascending ``times``, integrating segment by segment."""
    cfg = cfg or SolverConfig()
    ys, _, _ = _run(state0.as_vector(), np.zeros((6, 0)), t0, times, scene, cfg)
    return [BallState.from_vector(y) for y in ys]


def integrate_dual(state0, t0, t1, scene, cfg=None):
    """Like :func:`integrate` for a :class:`DualState`, propagating its partials."""
    cfg = cfg or SolverConfig()
    if t1 < t0:
        raise InvalidInput("t1 must be >= t0")
    ys, Ss, _ = _run(state0.primal.as_vector(), state0.partials, t0, [t1], scene, cfg)
    if t1 == t0:
        return state0
    return DualState(BallState.from_vector(ys[0]), Ss[0])


def sample_trajectory_dual(y0, S0, t0, times, scene, cfg=None):
    """Array-level variant of :func:`sample_trajectory` with sensitivities.

    Returns ``(states, partials)`` with shapes ``(T, 6)`` and ``(T, 6, P)``.
    """
    cfg = cfg or SolverConfig()
    ys, Ss, _ = _run(y0, S0, t0, times, scene, cfg)
    return ys, Ss


def spring_analytic(r0, v0, k, m, t):
    """Exact position of a mass on an origin-anchored spring; array ``t`` gives rows."""
    k = check_positive(k, "k")
    m = check_positive(m, "m")
    omega = np.sqrt(k / m)
    r0 = np.asarray(r0, dtype=float)
    v0 = np.asarray(v0, dtype=float)
    t = np.asarray(t, dtype=float)[..., None]
    return r0 * np.cos(omega * t) + v0 / omega * np.sin(omega * t)


def free_fall_analytic(r0, v0, g, t):
    """Exact ballistic position without barriers; array ``t`` gives rows."""
    r0 = np.asarray(r0, dtype=float)
    v0 = np.asarray(v0, dtype=float)
    t = np.asarray(t, dtype=float)[..., None]
    return r0 + v0 * t + np.array([0.0, 0.0, -0.5 * g]) * t * t
