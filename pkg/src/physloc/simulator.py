"""Synthetic clip and dataset generation.

Ground truth comes from the same potential model the recovery uses,
integrated at tight tolerance. Every clip draws from its own PCG64 stream
seeded by ``SeedSequence([seed, split, rig, clip])``, so the dataset does
not depend on generation order or on how many workers produce it.
"""

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ._validation import as_vector, check_int, check_positive
from .exceptions import InvalidInput, NonPositiveDepth, UnsatisfiableBounds
from .geometry import CameraRig, project, synthetic_rig
from .integrator import BallState, SolverConfig, sample_trajectory
from .io import write_json
from .potentials import SceneGeometry
from .recovery import TrajectoryClip

SPLITS = ("train", "val", "test")
MAX_REJECTIONS = 1000
GROUND_TRUTH_SOLVER = SolverConfig(rtol=1e-10, atol=1e-12)


@dataclass(frozen=True)
class InitBounds:
    """Axis-aligned box for the initial position (m) and velocity (m/s)."""

    position_lo: tuple = (-2.0, -2.0, 1.0)
    position_hi: tuple = (2.0, 2.0, 4.0)
    velocity_lo: tuple = (-2.0, -2.0, -2.0)
    velocity_hi: tuple = (2.0, 2.0, 2.0)

    def __post_init__(self):
        for name in ("position_lo", "position_hi", "velocity_lo", "velocity_hi"):
            object.__setattr__(self, name, tuple(float(x) for x in as_vector(getattr(self, name), 3, name)))
        lo = np.r_[self.position_lo, self.velocity_lo]
        hi = np.r_[self.position_hi, self.velocity_hi]
        if np.any(lo > hi):
            raise InvalidInput("init bounds need lo <= hi on every axis")

    def sample(self, rng):
        lo = np.r_[self.position_lo, self.velocity_lo]
        hi = np.r_[self.position_hi, self.velocity_hi]
        return BallState.from_vector(lo + (hi - lo) * rng.random(6))

    def to_dict(self):
        return {k: list(getattr(self, k)) for k in ("position_lo", "position_hi", "velocity_lo", "velocity_hi")}


@dataclass(frozen=True)
class DatasetSpec:
    """Everything needed to regenerate a synthetic dataset.

    ``clips_per_rig`` clips are generated for every rig a split uses;
    ``train_rigs`` (1-based positions in ``rigs``) restricts the training
    split, validation and test always use every rig.
    """

    scene: SceneGeometry = field(default_factory=SceneGeometry.ballistic)
    rigs: tuple = ()
    fps: float = 30.0
    frames_per_clip: int = 30
    clips_per_rig: int = 100
    seed: int = 0
    label_noise_px: float = 0.0
    init_bounds: InitBounds = field(default_factory=InitBounds)
    train_rigs: tuple = None
    image_size: tuple = (224, 224)

    def __post_init__(self):
        rigs = tuple(self.rigs) or (synthetic_rig(1),)
        if not all(isinstance(r, CameraRig) for r in rigs):
            raise InvalidInput("rigs must be CameraRig instances")
        object.__setattr__(self, "rigs", rigs)
        object.__setattr__(self, "fps", check_positive(self.fps, "fps"))
        check_int(self.frames_per_clip, "frames_per_clip", 4)
        check_int(self.clips_per_rig, "clips_per_rig", 0)
        check_int(self.seed, "seed", 0)
        object.__setattr__(self, "label_noise_px", check_positive(self.label_noise_px, "label_noise_px", strict=False))
        if self.train_rigs is not None:
            train = tuple(int(i) for i in self.train_rigs)
            if not train or min(train) < 1 or max(train) > len(rigs):
                raise InvalidInput(f"train_rigs must index 1..{len(rigs)}")
            object.__setattr__(self, "train_rigs", train)
        w, h = (int(x) for x in self.image_size)
        if w < 1 or h < 1:
            raise InvalidInput("image_size must be positive")
        object.__setattr__(self, "image_size", (w, h))

    @property
    def times(self):
        return np.arange(self.frames_per_clip) / self.fps

    def rigs_for(self, split):
        if split == "train" and self.train_rigs is not None:
            return self.train_rigs
        return tuple(range(1, len(self.rigs) + 1))

    def to_dict(self):
        return {
            "scene": self.scene.to_dict(),
            "rigs": [r.to_dict() for r in self.rigs],
            "fps": self.fps,
            "frames_per_clip": self.frames_per_clip,
            "clips_per_rig": self.clips_per_rig,
            "seed": self.seed,
            "label_noise_px": self.label_noise_px,
            "init_bounds": self.init_bounds.to_dict(),
            "train_rigs": None if self.train_rigs is None else list(self.train_rigs),
            "image_size": list(self.image_size),
        }

    @classmethod
    def from_dict(cls, d):
        """Build a spec from JSON; a rig may be a camera object or a synthetic camera number."""
        if not isinstance(d, dict):
            raise InvalidInput("dataset spec must be a JSON object")
        known = {"scene", "rigs", "fps", "frames_per_clip", "clips_per_rig", "seed", "label_noise_px",
                 "init_bounds", "train_rigs", "image_size"}
        unknown = set(d) - known
        if unknown:
            raise InvalidInput(f"unknown dataset spec keys: {sorted(unknown)}")
        kwargs = {k: d[k] for k in ("fps", "frames_per_clip", "clips_per_rig", "seed", "label_noise_px",
                                    "train_rigs", "image_size") if k in d and d[k] is not None}
        if "scene" in d:
            kwargs["scene"] = SceneGeometry.from_dict(d["scene"])
        if "rigs" in d:
            kwargs["rigs"] = tuple(
                synthetic_rig(int(r)) if isinstance(r, (int, float)) else CameraRig.from_dict(r) for r in d["rigs"]
            )
        if "init_bounds" in d:
            try:
                kwargs["init_bounds"] = InitBounds(**d["init_bounds"])
            except TypeError as exc:
                raise InvalidInput(f"malformed init_bounds: {exc}") from None
        return cls(**kwargs)


def sd_s_spec(**overrides):
    """Single-camera analog: camera 1, 100 clips per split."""
    return DatasetSpec(rigs=(synthetic_rig(1),), **overrides)


def sd_m_spec(**overrides):
    """Nine cameras; training clips come from cameras 1-6 only."""
    rigs = tuple(synthetic_rig(i) for i in range(1, 10))
    return DatasetSpec(rigs=rigs, train_rigs=tuple(range(1, 7)), **overrides)


def clip_rng(seed, split_index, rig_index, clip_index):
    """Independent generator for one clip."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, split_index, rig_index, clip_index])))


def in_frame(world, rig, image_size):
    """True when every point projects in front of the camera and inside the image."""
    try:
        pix, _ = project(world, rig)
    except NonPositiveDepth:
        return False
    w, h = image_size
    return bool(np.all((pix[:, 0] >= 0) & (pix[:, 0] <= w - 1) & (pix[:, 1] >= 0) & (pix[:, 1] <= h - 1)))


def sample_initial_state(bounds, rng, scene=None, rigs=(), times=None, image_size=(224, 224), cfg=None):
    """Uniform initial state inside ``bounds``.

    With ``scene``, ``rigs`` and ``times`` given, draws are rejected until
    the trajectory over ``times`` stays in every rig's image.

    Raises
    ------
    UnsatisfiableBounds
        After 1000 consecutive rejections.
    """
    if not rigs:
        return bounds.sample(rng)
    if scene is None or times is None:
        raise InvalidInput("frustum rejection needs a scene and sample times")
    cfg = cfg or GROUND_TRUTH_SOLVER
    for _ in range(MAX_REJECTIONS):
        state = bounds.sample(rng)
        world = np.array([s.r for s in sample_trajectory(state, times[0], times, scene, cfg)])
        if all(in_frame(world, rig, image_size) for rig in rigs):
            return state
    raise UnsatisfiableBounds(f"no initial state kept the ball in view after {MAX_REJECTIONS} draws")


def generate_clip(spec, rig, rng, rig_id="1", frustum_rigs=None):
    """Simulate one clip seen by ``rig``.

    ``frustum_rigs`` (default: just ``rig``) are the cameras the trajectory
    has to stay visible in.
    """
    times = spec.times
    rigs = (rig,) if frustum_rigs is None else tuple(frustum_rigs)
    state = sample_initial_state(spec.init_bounds, rng, spec.scene, rigs, times, spec.image_size)
    world = np.array([s.r for s in sample_trajectory(state, times[0], times, spec.scene, GROUND_TRUTH_SOLVER)])
    pix, depth = project(world, rig)
    if spec.label_noise_px > 0:
        pix = pix + rng.normal(0.0, spec.label_noise_px, pix.shape)
    return TrajectoryClip(str(rig_id), spec.fps, times, pix, world, depth)


def _clip_job(args):
    spec, split_index, rig_index, clip_index = args
    rng = clip_rng(spec.seed, split_index, rig_index, clip_index)
    return generate_clip(spec, spec.rigs[rig_index - 1], rng, rig_id=str(rig_index), frustum_rigs=spec.rigs)


def clip_name(rig_index, clip_index):
    return f"rig{rig_index}_clip{clip_index:04d}.json"


@dataclass
class DatasetBundle:
    spec: DatasetSpec
    splits: dict

    def __len__(self):
        return sum(len(v) for v in self.splits.values())

    def write(self, out_dir):
        """Write the bundle; returns the list of written paths (clip files first)."""
        out = Path(out_dir)
        written = []
        for split, clips in self.splits.items():
            for name, clip in clips:
                written.append(write_json(out / split / name, clip.to_dict()))
        written.append(write_json(out / "scene.json", self.spec.scene.to_dict()))
        rig_files = []
        for i, rig in enumerate(self.spec.rigs, start=1):
            rig_files.append(f"rigs/rig{i}.json")
            written.append(write_json(out / rig_files[-1], rig.to_dict()))
        index = {
            "seed": self.spec.seed,
            "scene_file": "scene.json",
            "rig_files": rig_files,
            "spec": self.spec.to_dict(),
            "splits": {s: [n for n, _ in c] for s, c in self.splits.items()},
        }
        written.append(write_json(out / "dataset.json", index))
        return written


def generate_dataset(spec, out_dir=None, jobs=1):
    """Generate train/val/test splits and optionally write them to ``out_dir``.

    Clips are ordered by rig then clip index inside each split, independent
    of ``jobs``.
    """
    jobs = check_int(jobs, "jobs", 1)
    tasks = []
    for s_idx, split in enumerate(SPLITS):
        for rig_index in spec.rigs_for(split):
            for c in range(spec.clips_per_rig):
                tasks.append((split, (spec, s_idx, rig_index, c)))
    if jobs == 1:
        clips = [_clip_job(t) for _, t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            clips = list(pool.map(_clip_job, [t for _, t in tasks], chunksize=4))
    splits = {s: [] for s in SPLITS}
    for (split, (_, _, rig_index, c)), clip in zip(tasks, clips):
        splits[split].append((clip_name(rig_index, c), clip))
    bundle = DatasetBundle(spec, splits)
    if out_dir is not None:
        bundle.write(out_dir)
    return bundle

