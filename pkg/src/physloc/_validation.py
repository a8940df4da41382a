"""Small input checks shared by the estimators and the functional API."""

import numbers

import numpy as np

from .exceptions import InvalidInput


def as_points(x, dim, name="points"):
    """Return ``x`` as a float array whose last axis has length ``dim``.

    A single point of shape ``(dim,)`` is accepted as well. Non-finite values
    raise :class:`InvalidInput`.
    """
    arr = np.asarray(x, dtype=float)
    if arr.ndim == 0 or arr.shape[-1] != dim:
        raise InvalidInput(f"{name} must have trailing dimension {dim}, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidInput(f"{name} contains non-finite values")
    return arr


def as_vector(x, dim, name="vector"):
    arr = as_points(x, dim, name)
    if arr.shape != (dim,):
        raise InvalidInput(f"{name} must have shape ({dim},), got {arr.shape}")
    return arr


def check_positive(value, name, strict=True):
    if not isinstance(value, numbers.Real) or not np.isfinite(value):
        raise InvalidInput(f"{name} must be a finite real number, got {value!r}")
    if strict and value <= 0:
        raise InvalidInput(f"{name} must be > 0, got {value}")
    if not strict and value < 0:
        raise InvalidInput(f"{name} must be >= 0, got {value}")
    return float(value)


def check_int(value, name, minimum):
    if isinstance(value, bool) or not isinstance(value, numbers.Integral):
        raise InvalidInput(f"{name} must be an integer, got {value!r}")
    if value < minimum:
        raise InvalidInput(f"{name} must be >= {minimum}, got {value}")
    return int(value)


def frozen_array(x, shape=None, name="array"):
    arr = np.array(x, dtype=float)
    if shape is not None and arr.shape != shape:
        raise InvalidInput(f"{name} must have shape {shape}, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidInput(f"{name} contains non-finite values")
    arr.setflags(write=False)
    return arr
