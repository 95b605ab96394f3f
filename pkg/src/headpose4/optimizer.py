"""Rotation from normalized correspondences and the morphing refinement.

The rotation is fixed at its initial least-squares value while the model's
spherical angles are refined; it is re-solved once, from the morphed
points, after the solver stops.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateGeometryError, InvalidInputError, NumericalFailureError
from .geometry import complete_rotation, nearest_row_orthonormal
from .normalization import NormalizedSet
from .sphere import Sphere, expand_params, expansion_matrix, n_free, rectangular

MAX_CONDITION = 1e12


def _vectors(data, dim):
    v = data.vectors if isinstance(data, NormalizedSet) else np.asarray(data, dtype=float)
    if v.ndim != 2 or v.shape[1] != dim:
        raise InvalidInputError(f"expected (N, {dim}) vectors, got shape {v.shape}")
    return v


def solve_rotation(targets, points) -> np.ndarray:
    """Least-squares ``R'`` with ``targets[i] ~= R' @ points[i]``, orthonormalized and completed to 3x3."""
    m = _vectors(targets, 2)
    M = _vectors(points, 3)
    if len(m) != len(M):
        raise InvalidInputError(f"{len(m)} image points but {len(M)} model points")
    gram = M.T @ M
    if not np.all(np.isfinite(gram)) or np.linalg.cond(gram) > MAX_CONDITION:
        raise DegenerateGeometryError("model points are coplanar with the centroid; rotation is not determined")
    R2 = np.linalg.solve(gram, M.T @ m).T
    r1, r2 = nearest_row_orthonormal(R2)
    return complete_rotation(r1, r2)


def initial_rotation(norm2d, norm3d) -> np.ndarray:
    return solve_rotation(norm2d, norm3d)


def final_rotation(norm2d, morphed) -> np.ndarray:
    return solve_rotation(norm2d, morphed)


@dataclass(frozen=True, eq=False)
class ObjectiveContext:
    """Everything the morph objective needs apart from the free parameters."""

    targets: np.ndarray     # (4, 2) normalized image points
    base: np.ndarray        # (4, 2) model (azimuth, elevation) on the sphere
    sphere: Sphere
    initial: np.ndarray     # (4, 3) model points at zero morph
    rotation: np.ndarray    # 3x3, held fixed; only the first two rows project
    eta: float = 1.77
    mode: str = "symmetric"

    @classmethod
    def build(cls, targets, base, sphere, rotation, eta=1.77, mode="symmetric"):
        if not (eta >= 0 and math.isfinite(eta)):
            raise InvalidInputError(f"penalty weight must be a finite non-negative number, got {eta!r}")
        n_free(mode)
        base = np.asarray(base, dtype=float)
        targets = _vectors(targets, 2)
        if base.shape != (4, 2) or targets.shape != (4, 2):
            raise InvalidInputError("the morph objective is defined for exactly four points")
        return cls(targets, base, sphere, rectangular(base, sphere),
                   np.asarray(rotation, dtype=float), float(eta), mode)

    @property
    def n_params(self):
        return n_free(self.mode)


def _offsets(free, ctx):
    """(K, n) free vectors -> (K, 4, 2) offsets via the constant expansion matrix."""
    return (free @ expansion_matrix(ctx.mode).T).reshape(-1, 4, 2)


def morphed_points(free, ctx: ObjectiveContext) -> np.ndarray:
    offsets = expand_params(free, ctx.mode).offsets
    return rectangular(ctx.base + offsets, ctx.sphere)


def objective_terms(free, ctx: ObjectiveContext) -> tuple[float, float]:
    """(re-projection sum of squares, unweighted penalty sum of squares)."""
    pts = morphed_points(free, ctx)
    reproj = ctx.targets - pts @ ctx.rotation[:2].T
    penalty = pts - ctx.initial
    return float(np.sum(reproj**2)), float(np.sum(penalty**2))


def objective(free, ctx: ObjectiveContext) -> float:
    reproj, penalty = objective_terms(free, ctx)
    return reproj + ctx.eta * penalty


def objective_batch(free, ctx: ObjectiveContext) -> np.ndarray:
    """Objective for a (K, n) stack of parameter vectors."""
    free = np.atleast_2d(np.asarray(free, dtype=float))
    ang = ctx.base + _offsets(free, ctx)
    az, el = ang[..., 0], ang[..., 1]
    sin_el = np.sin(el)
    d = np.stack([sin_el * np.cos(az), sin_el * np.sin(az), np.cos(el)], axis=-1)
    pts = ctx.sphere.center + ctx.sphere.radius * d
    reproj = ctx.targets - pts @ ctx.rotation[:2].T
    penalty = pts - ctx.initial
    return np.sum(reproj**2, axis=(1, 2)) + ctx.eta * np.sum(penalty**2, axis=(1, 2))


def residuals(free, ctx: ObjectiveContext) -> np.ndarray:
    """Stacked residuals whose squared norm is the objective.

    8 re-projection components (u, v per point) followed by 12 penalty
    components ``sqrt(eta) * (x, y, z)`` per point.
    """
    pts = morphed_points(free, ctx)
    reproj = ctx.targets - pts @ ctx.rotation[:2].T
    penalty = math.sqrt(ctx.eta) * (pts - ctx.initial)
    return np.concatenate([reproj.ravel(), penalty.ravel()])


def jacobian(free, ctx: ObjectiveContext) -> np.ndarray:
    """Analytic d(residuals)/d(free), shape (20, n_free)."""
    offsets = expand_params(free, ctx.mode).offsets
    ang = ctx.base + offsets
    az, el = ang[:, 0], ang[:, 1]
    l = ctx.sphere.radius
    s_az, c_az, s_el, c_el = np.sin(az), np.cos(az), np.sin(el), np.cos(el)
    d_az = l * np.column_stack([-s_el * s_az, s_el * c_az, np.zeros(4)])
    d_el = l * np.column_stack([c_el * c_az, c_el * s_az, -s_el])
    P = ctx.rotation[:2]
    root_eta = math.sqrt(ctx.eta)
    J = np.zeros((20, 8))
    for i in range(4):
        for j, d in ((2 * i, d_az[i]), (2 * i + 1, d_el[i])):
            J[2 * i:2 * i + 2, j] = -(P @ d)
            J[8 + 3 * i:11 + 3 * i, j] = root_eta * d
    return J @ expansion_matrix(ctx.mode)


@dataclass
class LMConfig:
    lambda0: float = 1e-3
    increase: float = 10.0
    decrease: float = 10.0
    lambda_min: float = 1e-12
    lambda_max: float = 1e8
    max_iter: int = 100
    tol: float = 1e-6        # stop once an accepted step lowers the objective by no more than this
    gtol: float = 1e-12      # gradient infinity-norm treated as stationary

    def __post_init__(self):
        if not (self.lambda0 > 0 and self.increase > 1 and self.decrease > 1):
            raise InvalidInputError("damping must start positive and change by factors > 1")
        if self.max_iter < 0 or self.tol < 0:
            raise InvalidInputError("max_iter and tol must be non-negative")


@dataclass(frozen=True)
class LMRecord:
    iteration: int
    objective: float
    damping: float
    accepted: bool


@dataclass
class LMTrace:
    records: list[LMRecord] = field(default_factory=list)
    iterations: int = 0
    reason: str = ""

    @property
    def converged(self) -> bool:
        return self.reason in ("tol", "gradient", "stalled")

    @property
    def accepted(self) -> list[float]:
        return [r.objective for r in self.records if r.accepted]

    @property
    def objective(self) -> float:
        return self.accepted[-1]


def lm_solve(ctx: ObjectiveContext, cfg: LMConfig | None = None):
    """Levenberg-Marquardt over the free morph parameters, starting at zero morph.

    Steps solve ``(J'J + lam * diag(J'J)) dx = -J'r``; a step is kept only if
    it lowers the objective. Returns ``(free, trace)``.
    """
    cfg = cfg or LMConfig()
    trace = LMTrace()
    x = np.zeros(ctx.n_params)
    E = objective(x, ctx)
    if not math.isfinite(E):
        raise NumericalFailureError("objective is not finite at zero morph", trace=trace)
    lam = cfg.lambda0
    trace.records.append(LMRecord(0, E, lam, True))

    while True:
        if trace.iterations >= cfg.max_iter:
            trace.reason = "max_iter"
            break
        r = residuals(x, ctx)
        J = jacobian(x, ctx)
        if not (np.all(np.isfinite(J)) and np.all(np.isfinite(r))):
            raise NumericalFailureError("non-finite residual or Jacobian", trace=trace)
        g = J.T @ r
        if np.max(np.abs(g)) <= cfg.gtol:
            trace.reason = "gradient"
            break
        A = J.T @ J
        diag = np.diag(A).copy()
        diag = np.maximum(diag, 1e-12 * max(diag.max(), 1e-300))
        trace.iterations += 1
        k = trace.iterations

        accepted = False
        while True:
            try:
                step = np.linalg.solve(A + lam * np.diag(diag), -g)
            except np.linalg.LinAlgError:
                step = None
            if step is not None and np.all(np.isfinite(step)):
                x_new = x + step
                E_new = objective(x_new, ctx)
                if not math.isfinite(E_new):
                    raise NumericalFailureError(f"objective became non-finite at iteration {k}", trace=trace)
                if E_new < E:
                    accepted = True
                    break
                trace.records.append(LMRecord(k, E_new, lam, False))
            lam *= cfg.increase
            if lam > cfg.lambda_max:
                break

        if not accepted:
            trace.reason = "stalled"
            break
        drop = E - E_new
        x, E = x_new, E_new
        trace.records.append(LMRecord(k, E, lam, True))
        lam = max(lam / cfg.decrease, cfg.lambda_min)
        if drop <= cfg.tol:
            trace.reason = "tol"
            break
    return x, trace
