"""Distance-to-ground-truth metrics, overall and binned by ground-truth depth."""

from dataclasses import dataclass

import numpy as np

from ._validation import as_points, check_int
from .exceptions import EmptyEvaluationSet, InvalidInput


@dataclass(frozen=True)
class BinSpec:
    b: int = 3
    z_min: float = 0.05
    z_max: float = 2.0

    def __post_init__(self):
        check_int(self.b, "b", 1)
        if not self.z_min < self.z_max:
            raise InvalidInput("z_min must be < z_max")

    @property
    def edges(self):
        e = self.z_min + (self.z_max - self.z_min) * np.arange(self.b + 1) / self.b
        e[-1] = self.z_max
        return e

    def assign(self, z):
        """Bin index per depth, -1 for depths outside ``[z_min, z_max]``."""
        z = np.asarray(z, dtype=float)
        idx = np.searchsorted(self.edges, z, side="right") - 1
        # half-open bins except the last, which also takes z_max
        idx = np.where(z == self.z_max, self.b - 1, idx)
        return np.where((z < self.z_min) | (z > self.z_max), -1, idx)


@dataclass(frozen=True)
class BinResult:
    index: int
    z_lo: float
    z_hi: float
    count: int
    mean: float
    std: float


def distances(predicted, truth):
    predicted = as_points(predicted, 3, "predicted")
    truth = as_points(truth, 3, "truth")
    if predicted.shape != truth.shape:
        raise InvalidInput("predicted and truth must have the same shape")
    return np.linalg.norm(predicted - truth, axis=-1)


def dtg(predicted, truth):
    """Mean and population standard deviation of the Euclidean errors (m)."""
    d = distances(predicted, truth).ravel()
    if d.size == 0:
        raise EmptyEvaluationSet("no evaluation pairs")
    return float(d.mean()), float(d.std())


def dtg_binned(predicted, truth, spec=None):
    """Per-bin DtG using the ground-truth camera depth ``truth[:, 2]``.

    Both point sets are expected in camera coordinates. Empty bins report
    ``nan`` mean and std with count 0. Returns ``(bins, n_out_of_range)``.
    """
    spec = spec or BinSpec()
    d = distances(predicted, truth).ravel()
    if d.size == 0:
        raise EmptyEvaluationSet("no evaluation pairs")
    z = as_points(truth, 3).reshape(-1, 3)[:, 2]
    idx = spec.assign(z)
    edges = spec.edges
    bins = []
    for j in range(spec.b):
        sel = d[idx == j]
        if sel.size:
            bins.append(BinResult(j, float(edges[j]), float(edges[j + 1]), int(sel.size),
                                  float(sel.mean()), float(sel.std())))
        else:
            bins.append(BinResult(j, float(edges[j]), float(edges[j + 1]), 0, float("nan"), float("nan")))
    return bins, int(np.sum(idx < 0))
