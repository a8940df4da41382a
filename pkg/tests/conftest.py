import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from physloc.geometry import project, synthetic_rig
from physloc.integrator import BallState, SolverConfig, sample_trajectory
from physloc.potentials import SceneGeometry
from physloc.recovery import TrajectoryClip

settings.register_profile("physloc", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("physloc")


def make_clip(state, rig, scene, n=30, fps=30.0, noise=0.0, rng=None):
    times = np.arange(n) / fps
    states = sample_trajectory(state, 0.0, times, scene, SolverConfig(rtol=1e-10, atol=1e-12))
    world = np.array([s.r for s in states])
    pix, depth = project(world, rig)
    if noise:
        pix = pix + (rng or np.random.default_rng(0)).normal(0.0, noise, pix.shape)
    return TrajectoryClip("1", fps, times, pix, world, depth)


@pytest.fixture(scope="session")
def rig1():
    return synthetic_rig(1)


@pytest.fixture(scope="session")
def ballistic():
    return SceneGeometry.ballistic(gravity=1.0)


@pytest.fixture(scope="session")
def flight_clip(rig1, ballistic):
    """Noiseless 30-frame clip of a ball in free flight."""
    return make_clip(BallState([0.3, -0.5, 2.0], [0.5, 0.3, 0.8]), rig1, ballistic)


@pytest.fixture(scope="session")
def bounce_clip(rig1, ballistic):
    """Noiseless clip with one floor bounce."""
    return make_clip(BallState([0.2, 0.1, 0.6], [0.4, -0.3, -1.0]), rig1, ballistic)


# one line per acceptance criterion, printed after the run
ACCEPTANCE = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
