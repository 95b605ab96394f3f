"""Rotation algebra and the two camera projection models.

Conventions: a head pose is (pitch, yaw, roll) = rotations about the X, Y
and Z axes, composed as ``R = R_z(roll) @ R_y(yaw) @ R_x(pitch)`` so that
``R[2, 0] == -sin(yaw)`` and the angles come back out with the usual
atan2 formulas. Public angles are degrees; the elementary factor builders
take radians.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import BehindCameraError, DegenerateGeometryError, GimbalLockError, InvalidInputError

# |yaw| closer than this to 90 degrees cannot be decomposed
GIMBAL_MARGIN_DEG = 1e-6
_ORTHO_TOL = 1e-8


def _check_angle(angle):
    if not math.isfinite(angle):
        raise InvalidInputError(f"angle must be finite, got {angle!r}")


def rot_x(angle: float) -> np.ndarray:
    _check_angle(angle)
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[1.0, 0.0, 0.0],
                     [0.0, c, -s],
                     [0.0, s, c]])


def rot_y(angle: float) -> np.ndarray:
    _check_angle(angle)
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, 0.0, s],
                     [0.0, 1.0, 0.0],
                     [-s, 0.0, c]])


def rot_z(angle: float) -> np.ndarray:
    _check_angle(angle)
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, -s, 0.0],
                     [s, c, 0.0],
                     [0.0, 0.0, 1.0]])


@dataclass(frozen=True)
class EulerAngles:
    """Pitch, yaw and roll in degrees."""

    pitch: float
    yaw: float
    roll: float

    def __post_init__(self):
        for name in ("pitch", "yaw", "roll"):
            value = float(getattr(self, name))
            _check_angle(value)
            object.__setattr__(self, name, value)

    @classmethod
    def from_radians(cls, pitch, yaw, roll):
        return cls(math.degrees(pitch), math.degrees(yaw), math.degrees(roll))

    def radians(self) -> tuple[float, float, float]:
        return math.radians(self.pitch), math.radians(self.yaw), math.radians(self.roll)

    def as_array(self) -> np.ndarray:
        return np.array([self.pitch, self.yaw, self.roll])


def compose_rotation(angles: EulerAngles) -> np.ndarray:
    """Rotation matrix ``R_z(roll) @ R_y(yaw) @ R_x(pitch)``."""
    ax, ay, az = angles.radians()
    return rot_z(az) @ rot_y(ay) @ rot_x(ax)


def euler_from_rotation(R) -> EulerAngles:
    """Inverse of :func:`compose_rotation` on the principal branch.

    Pitch and roll use two-argument arctangents, so they are recovered over
    (-180, 180]; yaw lies in (-90, 90).
    """
    R = np.asarray(R, dtype=float)
    if R.shape != (3, 3) or not np.all(np.isfinite(R)):
        raise InvalidInputError("rotation must be a finite 3x3 matrix")
    r31 = min(1.0, max(-1.0, R[2, 0]))
    cos_yaw = math.hypot(R[2, 1], R[2, 2])
    if cos_yaw < math.sin(math.radians(GIMBAL_MARGIN_DEG)):
        raise GimbalLockError(f"yaw is within {GIMBAL_MARGIN_DEG} deg of +-90; pitch and roll are not separable")
    pitch = math.atan2(R[2, 1], R[2, 2])
    yaw = -math.atan2(r31, cos_yaw)
    roll = math.atan2(R[1, 0], R[0, 0])
    return EulerAngles.from_radians(pitch, yaw, roll)


def is_rotation(R, tol=1e-10) -> bool:
    R = np.asarray(R, dtype=float)
    if R.shape != (3, 3):
        return False
    r1, r2, r3 = R
    return (abs(r1 @ r2) <= tol
            and abs(np.linalg.norm(r1) - 1.0) <= tol
            and abs(np.linalg.norm(r2) - 1.0) <= tol
            and np.allclose(r3, np.cross(r1, r2), rtol=0.0, atol=tol)
            and abs(np.linalg.det(R) - 1.0) <= tol)


def nearest_row_orthonormal(M) -> np.ndarray:
    """Closest 2x3 matrix (Frobenius norm) with orthonormal rows: the polar factor of ``M``."""
    M = np.asarray(M, dtype=float)
    if M.shape != (2, 3):
        raise InvalidInputError(f"expected a 2x3 matrix, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise InvalidInputError("matrix has non-finite entries")
    U, s, Vt = np.linalg.svd(M, full_matrices=False)
    if s[0] == 0.0 or s[1] <= 1e-12 * s[0]:
        raise DegenerateGeometryError(f"matrix is rank deficient (singular values {s[0]:.3g}, {s[1]:.3g})")
    return U @ Vt


def complete_rotation(r1, r2) -> np.ndarray:
    """Stack ``r1``, ``r2`` and ``r1 x r2`` as the rows of a rotation matrix."""
    r1 = np.asarray(r1, dtype=float)
    r2 = np.asarray(r2, dtype=float)
    if r1.shape != (3,) or r2.shape != (3,):
        raise InvalidInputError("row vectors must be 3-vectors")
    if (abs(r1 @ r2) > _ORTHO_TOL or abs(r1 @ r1 - 1.0) > _ORTHO_TOL
            or abs(r2 @ r2 - 1.0) > _ORTHO_TOL):
        raise InvalidInputError("rows are not orthonormal")
    return np.vstack([r1, r2, np.cross(r1, r2)])


@dataclass(frozen=True)
class WeakPerspectiveCamera:
    """Scaled orthographic camera: ``uv = s' * (R[:2] @ X + t)``.

    ``s_prime`` is focal length over object distance (pixels per model unit).
    """

    s_prime: float = 1.0
    t: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        if not (math.isfinite(self.s_prime) and self.s_prime > 0):
            raise InvalidInputError(f"s_prime must be positive, got {self.s_prime!r}")
        object.__setattr__(self, "t", tuple(float(v) for v in self.t))
        if len(self.t) != 2:
            raise InvalidInputError("weak-perspective translation is a 2-vector")


@dataclass(frozen=True)
class PinholeCamera:
    alpha: float
    beta: float
    gamma: float = 0.0
    u0: float = 0.0
    v0: float = 0.0
    t: tuple[float, float, float] = (0.0, 0.0, 0.0)

    def __post_init__(self):
        if not (self.alpha > 0 and self.beta > 0):
            raise InvalidInputError("focal scales alpha and beta must be positive")
        object.__setattr__(self, "t", tuple(float(v) for v in self.t))
        if len(self.t) != 3:
            raise InvalidInputError("pinhole translation is a 3-vector")

    @property
    def intrinsics(self) -> np.ndarray:
        return np.array([[self.alpha, self.gamma, self.u0],
                         [0.0, self.beta, self.v0],
                         [0.0, 0.0, 1.0]])

    def matched_weak(self) -> WeakPerspectiveCamera:
        """Weak-perspective camera this one approaches as the object recedes (requires alpha == beta, gamma == 0)."""
        t1, t2, t3 = self.t
        s_prime = self.alpha / t3
        return WeakPerspectiveCamera(s_prime, (t1 + self.u0 / s_prime, t2 + self.v0 / s_prime))


def project_weak(camera: WeakPerspectiveCamera, R, points) -> np.ndarray:
    """Project one 3-vector or an (N, 3) array to pixels."""
    R = np.asarray(R, dtype=float)
    X = np.asarray(points, dtype=float)
    return camera.s_prime * (X @ R[:2].T + np.asarray(camera.t))


def project_full(camera: PinholeCamera, R, points) -> np.ndarray:
    R = np.asarray(R, dtype=float)
    X = np.asarray(points, dtype=float)
    cam = X @ R.T + np.asarray(camera.t)
    h = cam @ camera.intrinsics.T
    depth = h[..., 2]
    if np.any(depth <= 0):
        raise BehindCameraError("point has non-positive projective depth")
    return h[..., :2] / depth[..., None]
