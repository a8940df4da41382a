"""Heatmap decoding: 2D soft-argmax and softmax-weighted depth read-out.

Coordinates are cell indices: ``x`` counts columns (width) and ``y`` rows
(height), so a peak in row ``h`` and column ``w`` decodes to ``(w, h)``.
"""

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from ._validation import check_positive
from .exceptions import GridShapeMismatch, InvalidInput


@dataclass(frozen=True, eq=False)
class ScalarGrid:
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.ndim != 2 or v.shape[0] < 1 or v.shape[1] < 1:
            raise InvalidInput(f"grid must be a non-empty 2D array, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise InvalidInput("grid values must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def shape(self):
        return self.values.shape

    def to_dict(self):
        h, w = self.shape
        return {"h": h, "w": w, "values": [float(x) for x in self.values.ravel()]}

    @classmethod
    def from_dict(cls, d):
        try:
            return cls(np.asarray(d["values"], dtype=float).reshape(int(d["h"]), int(d["w"])))
        except (KeyError, ValueError) as exc:
            raise InvalidInput(f"malformed grid: {exc}") from None


def _values(grid):
    return grid.values if isinstance(grid, ScalarGrid) else ScalarGrid(grid).values


def softmax_weights(heatmap, beta=10.0):
    """``softmax(beta * heatmap)`` over all cells."""
    beta = check_positive(beta, "beta")
    scaled = beta * _values(heatmap)
    e = np.exp(scaled - scaled.max())
    return e / e.sum()


def soft_argmax(heatmap, beta=10.0):
    """Expected ``(x, y)`` cell index under the sharpened softmax of ``heatmap``."""
    beta = check_positive(beta, "beta")
    scaled = beta * _values(heatmap)
    e = np.exp(scaled - scaled.max())
    H, W = e.shape
    # normalise last so a uniform grid lands exactly on the centre
    total = e.sum()
    return np.array([e.sum(axis=0) @ np.arange(W), e.sum(axis=1) @ np.arange(H)]) / total


def weighted_depth(heatmap, depthmap, beta=10.0):
    """Depthmap averaged with the heatmap's softmax weights (m)."""
    d = _values(depthmap)
    p = softmax_weights(heatmap, beta)
    if p.shape != d.shape:
        raise GridShapeMismatch(f"heatmap {p.shape} and depthmap {d.shape} differ")
    return float(np.sum(p * d))


def gaussian_heatmap(center, sigma, height, width):
    """Un-normalised Gaussian bump with peak 1 at ``center = (x, y)``."""
    sigma = check_positive(sigma, "sigma")
    x0, y0 = (float(c) for c in center)
    w = np.arange(width)[None, :]
    h = np.arange(height)[:, None]
    return ScalarGrid(np.exp(-((w - x0) ** 2 + (h - y0) ** 2) / (2 * sigma**2)))


def heatmap_l2(predicted, target):
    """Mean squared difference over all cells."""
    a, b = _values(predicted), _values(target)
    if a.shape != b.shape:
        raise GridShapeMismatch(f"grid shapes {a.shape} and {b.shape} differ")
    return float(np.mean((a - b) ** 2))


class SoftArgmaxDecoder(TransformerMixin, BaseEstimator):
    """Turn a stack of heatmaps (and optionally depthmaps) into coordinates.

    ``transform`` maps an array of shape (n, H, W) to (n, 2) image
    coordinates; with ``depthmaps`` of the same shape it returns (n, 3)
    rows ``(x, y, z)``.
    """

    def __init__(self, beta=10.0):
        self.beta = beta

    def fit(self, X=None, y=None):
        return self

    def transform(self, X, depthmaps=None):
        X = np.asarray(X, dtype=float)
        if X.ndim == 2:
            X = X[None]
        coords = np.array([soft_argmax(h, self.beta) for h in X])
        if depthmaps is None:
            return coords
        D = np.asarray(depthmaps, dtype=float).reshape(X.shape[0], *np.shape(depthmaps)[-2:])
        z = np.array([weighted_depth(h, d, self.beta) for h, d in zip(X, D)])
        return np.c_[coords, z]
