"""JSON and CSV file helpers shared by the simulator and the command line."""

import csv
import json
from pathlib import Path

import numpy as np

from .exceptions import InvalidInput, IOFailure
from .geometry import CameraRig, correspondence_arrays
from .perception import ScalarGrid
from .potentials import SceneGeometry
from .recovery import TrajectoryClip


def _default(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, Path):
        return str(obj)
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def dumps(obj):
    """Deterministic JSON text (shortest round-trip floats, fixed key order)."""
    return json.dumps(obj, indent=1, default=_default, allow_nan=True) + "\n"


def write_json(path, obj):
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(dumps(obj))
    except OSError as exc:
        raise IOFailure(f"cannot write {path}: {exc.strerror or exc}") from None
    return path


def read_json(path):
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise IOFailure(f"cannot read {path}: {exc.strerror or exc}") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise InvalidInput(f"{path}: invalid JSON ({exc.msg} at line {exc.lineno})") from None


def write_csv(path, header, rows):
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for row in rows:
                w.writerow([repr(float(x)) if isinstance(x, (float, np.floating)) else x for x in row])
    except OSError as exc:
        raise IOFailure(f"cannot write {path}: {exc.strerror or exc}") from None
    return path


def read_csv(path):
    """Return ``(header, rows)`` with rows as lists of strings."""
    path = Path(path)
    try:
        with path.open(newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise IOFailure(f"cannot read {path}: {exc.strerror or exc}") from None
    if not rows:
        raise InvalidInput(f"{path}: empty CSV")
    return rows[0], rows[1:]


def load_camera(path):
    return CameraRig.from_dict(read_json(path))


def load_scene(path):
    return SceneGeometry.from_dict(read_json(path))


def load_clip(path):
    return TrajectoryClip.from_dict(read_json(path))


def load_correspondences(path):
    data = read_json(path)
    if not isinstance(data, list):
        raise InvalidInput(f"{path}: expected a list of correspondences")
    return correspondence_arrays(data)


def load_grid(path):
    return ScalarGrid.from_dict(read_json(path))
