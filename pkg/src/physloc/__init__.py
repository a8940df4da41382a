"""Recover 3D ball trajectories from single-camera 2D labels with a physics forecaster."""

__version__ = "0.1.0"
