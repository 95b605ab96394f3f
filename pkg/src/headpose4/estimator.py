"""Four-point head pose estimation pipeline."""
from __future__ import annotations

from contextlib import contextmanager
from dataclasses import dataclass, field

import numpy as np

from .errors import HeadPoseError, InvalidInputError
from .geometry import EulerAngles, euler_from_rotation
from .normalization import (DEFAULT_LABELS, FeaturePointSet2D, FeaturePointSet3D, check_non_coplanar,
                            normalize2d, normalize3d)
from .optimizer import (LMConfig, LMTrace, ObjectiveContext, final_rotation, initial_rotation, lm_solve,
                        morphed_points, objective)
from .sphere import SYMMETRIC, MorphParams, expand_params, fit_sphere, n_free, spherical_angles

# Bilaterally symmetric, non-coplanar stand-in face model in millimetres.
# +y is up, +z points out of the face toward the camera.
DEFAULT_MODEL = FeaturePointSet3D(DEFAULT_LABELS, [
    [0.0, -62.0, -10.0],
    [0.0, -20.0, 21.0],
    [-34.0, 18.0, 0.0],
    [34.0, 18.0, 0.0],
])

DEFAULT_ETA = 1.77


@dataclass
class EstimationConfig:
    eta: float = DEFAULT_ETA
    lm: LMConfig = field(default_factory=LMConfig)
    mode: str = SYMMETRIC
    morph: bool = True

    def __post_init__(self):
        if not self.eta >= 0:
            raise InvalidInputError(f"eta must be non-negative, got {self.eta!r}")
        n_free(self.mode)


@dataclass
class EstimationResult:
    angles: EulerAngles
    rotation: np.ndarray
    iterations: int
    objective: float
    converged: bool
    morph: MorphParams | None = None
    initial_rotation: np.ndarray | None = None
    initial_objective: float | None = None
    trace: LMTrace | None = None


@contextmanager
def _stage(name):
    try:
        yield
    except HeadPoseError as exc:
        if exc.stage is None:
            exc.stage = name
        raise


def estimate_pose(landmarks: FeaturePointSet2D, model: FeaturePointSet3D = DEFAULT_MODEL,
                  cfg: EstimationConfig | None = None) -> EstimationResult:
    """Estimate (pitch, yaw, roll) from four labeled landmarks.

    Landmarks are matched to the model by label and processed in the
    model's order; in symmetric mode the model's first two points must lie
    on the symmetry plane and the last two form the mirrored pair.
    """
    cfg = cfg or EstimationConfig()
    with _stage("input"):
        if len(model) != 4:
            raise InvalidInputError(f"the model must have exactly four points, got {len(model)}")
        landmarks = landmarks.reorder(model.labels)
        check_non_coplanar(model.points, "model points")

    with _stage("normalize"):
        m = normalize2d(landmarks)
        M = normalize3d(model)

    with _stage("initial_rotation"):
        R1 = initial_rotation(m, M)
    # objective at zero morph, written out directly so the no-morph path needs no sphere
    E0 = float(np.sum((m.vectors - M.vectors @ R1[:2].T) ** 2))

    if not cfg.morph:
        with _stage("euler"):
            angles = euler_from_rotation(R1)
        return EstimationResult(angles, R1, 0, E0, True, None, R1, E0, None)

    with _stage("sphere"):
        sphere = fit_sphere(M.vectors)
        base = spherical_angles(M.vectors, sphere)
    with _stage("morph"):
        ctx = ObjectiveContext.build(m.vectors, base, sphere, R1, cfg.eta, cfg.mode)
        free, trace = lm_solve(ctx, cfg.lm)
        morphed = morphed_points(free, ctx)
        E = objective(free, ctx)
    with _stage("final_rotation"):
        R = final_rotation(m, morphed)
    with _stage("euler"):
        angles = euler_from_rotation(R)
    return EstimationResult(angles, R, trace.iterations, E, trace.converged,
                            expand_params(free, cfg.mode), R1, trace.records[0].objective, trace)


def estimate_pose_no_morph(landmarks: FeaturePointSet2D, model: FeaturePointSet3D = DEFAULT_MODEL,
                           cfg: EstimationConfig | None = None) -> EstimationResult:
    cfg = cfg or EstimationConfig()
    return estimate_pose(landmarks, model, EstimationConfig(cfg.eta, cfg.lm, cfg.mode, morph=False))
