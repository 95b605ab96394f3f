"""Ground-truth scenes, exhaustive-search reference and batch scoring."""
from __future__ import annotations

import time
from dataclasses import dataclass, field
from itertools import product

import numpy as np

from .errors import HeadPoseError, InvalidInputError
from .estimator import DEFAULT_MODEL, EstimationConfig, estimate_pose
from .geometry import (EulerAngles, PinholeCamera, WeakPerspectiveCamera, compose_rotation, project_full,
                       project_weak)
from .normalization import FeaturePointSet2D, FeaturePointSet3D
from .optimizer import ObjectiveContext, objective_batch
from .sphere import SYMMETRIC, apply_morph, expand_params, fit_sphere, spherical_angles

MAX_GRID_EVALS = 10**7


def instance_rng(seed: int, index: int = 0) -> np.random.Generator:
    """Counter-based stream keyed on (seed, index), independent of processing order."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), int(index)])))


@dataclass
class SceneSpec:
    angles: EulerAngles
    camera: WeakPerspectiveCamera | PinholeCamera = field(default_factory=WeakPerspectiveCamera)
    model: FeaturePointSet3D = DEFAULT_MODEL
    noise_px: float = 0.0
    morph: np.ndarray | None = None   # symmetric-mode free vector, radians
    seed: int = 0
    index: int = 0

    def __post_init__(self):
        if not self.noise_px >= 0:
            raise InvalidInputError(f"noise must be non-negative, got {self.noise_px!r}")


@dataclass
class GroundTruth:
    angles: EulerAngles
    rotation: np.ndarray
    points3d: np.ndarray     # model points after the true morph, before rotation
    clean: np.ndarray        # noise-free landmark pixels


def morph_model(model: FeaturePointSet3D, free, mode=SYMMETRIC) -> FeaturePointSet3D:
    """Move model points over the sphere through them by the given offsets."""
    sphere = fit_sphere(model.points)
    base = spherical_angles(model.points, sphere)
    pts = apply_morph(base, expand_params(free, mode).offsets, sphere)
    return FeaturePointSet3D(model.labels, pts)


def generate_scene(spec: SceneSpec):
    """Render four landmarks for a known pose. Returns ``(landmarks, truth)``."""
    model = spec.model
    if spec.morph is not None:
        model = morph_model(model, spec.morph)
    R = compose_rotation(spec.angles)
    if isinstance(spec.camera, PinholeCamera):
        clean = project_full(spec.camera, R, model.points)
    else:
        clean = project_weak(spec.camera, R, model.points)
    uv = clean
    if spec.noise_px > 0:
        uv = clean + spec.noise_px * instance_rng(spec.seed, spec.index).standard_normal(clean.shape)
    return FeaturePointSet2D(model.labels, uv), GroundTruth(spec.angles, R, model.points, clean)


def random_symmetric_morph(rng: np.random.Generator, magnitude: float) -> np.ndarray:
    return rng.uniform(-magnitude, magnitude, size=4)


def brute_force_morph(ctx: ObjectiveContext, grid, chunk=200_000):
    """Exhaustively evaluate the objective on a parameter grid.

    ``grid`` is either one ``(lo, hi, step)`` triple applied to every free
    parameter, or a sequence of 1-D arrays, one per parameter. Returns the
    best grid point and its objective.
    """
    n = ctx.n_params
    if len(grid) == 3 and np.isscalar(grid[0]):
        lo, hi, step = grid
        if not step > 0:
            raise InvalidInputError("grid step must be positive")
        axis = lo + step * np.arange(int(round((hi - lo) / step)) + 1)
        axes = [axis] * n
    else:
        axes = [np.asarray(a, dtype=float).reshape(-1) for a in grid]
    if len(axes) != n:
        raise InvalidInputError(f"grid has {len(axes)} axes for {n} parameters")
    total = int(np.prod([len(a) for a in axes]))
    if total > MAX_GRID_EVALS:
        raise InvalidInputError(f"grid needs {total} evaluations, budget is {MAX_GRID_EVALS}")
    if not all(np.all(np.isfinite(a)) for a in axes):
        raise InvalidInputError("grid values must be finite")

    points = np.array(list(product(*axes))) if total <= chunk else None
    best_val, best_x = np.inf, None
    if points is not None:
        values = objective_batch(points, ctx)
        i = int(np.argmin(values))
        return points[i], float(values[i])
    it = product(*axes)
    while True:
        block = np.array([p for _, p in zip(range(chunk), it)])
        if len(block) == 0:
            break
        values = objective_batch(block, ctx)
        i = int(np.argmin(values))
        if values[i] < best_val:
            best_val, best_x = float(values[i]), block[i]
    return best_x, best_val


def angle_errors(estimated, truth) -> np.ndarray:
    """Absolute angle differences in degrees, wrapped to [0, 180]."""
    d = np.asarray(estimated, dtype=float) - np.asarray(truth, dtype=float)
    return np.abs((d + 180.0) % 360.0 - 180.0)


def mae_std(abs_errors) -> tuple[np.ndarray, np.ndarray]:
    """Per-column mean and population standard deviation of absolute errors."""
    e = np.atleast_2d(np.asarray(abs_errors, dtype=float))
    return e.mean(axis=0), e.std(axis=0)


@dataclass
class Instance:
    image_id: str
    landmarks: FeaturePointSet2D
    truth: EulerAngles
    model: FeaturePointSet3D = DEFAULT_MODEL


@dataclass
class BatchReport:
    ids: list[str]
    errors: np.ndarray          # (n_ok, 3) absolute pitch/yaw/roll errors, degrees
    mae: np.ndarray
    std: np.ndarray
    wall_times: np.ndarray      # seconds per successful instance
    failures: dict[str, str]

    @property
    def count(self):
        return len(self.ids)

    @property
    def mean_mae(self) -> float:
        return float(self.mae.mean())


def evaluate_batch(instances, cfg: EstimationConfig | None = None, estimator=estimate_pose) -> BatchReport:
    cfg = cfg or EstimationConfig()
    ids, errors, times, failures = [], [], [], {}
    for inst in instances:
        start = time.perf_counter()
        try:
            result = estimator(inst.landmarks, inst.model, cfg)
        except HeadPoseError as exc:
            failures[inst.image_id] = str(exc)
            continue
        times.append(time.perf_counter() - start)
        ids.append(inst.image_id)
        errors.append(angle_errors(result.angles.as_array(), inst.truth.as_array()))
    if not ids:
        nan = np.full(3, np.nan)
        return BatchReport([], np.empty((0, 3)), nan, nan, np.array([]), failures)
    errors = np.array(errors)
    mae, std = mae_std(errors)
    return BatchReport(ids, errors, mae, std, np.array(times), failures)
