"""Sphere through four points, spherical coordinates and on-sphere morphing.

Elevation is the polar angle from the +z axis (0 at the north pole) and
azimuth is measured from +x toward +y. Morph offsets are stored per point
as ``(d_azimuth, d_elevation)`` in radians.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError
from .normalization import check_non_coplanar

SYMMETRIC = "symmetric"
FREE = "free"
MODES = (SYMMETRIC, FREE)

ON_SPHERE_RTOL = 1e-6


@dataclass(frozen=True, eq=False)
class Sphere:
    center: np.ndarray
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", np.asarray(self.center, dtype=float).reshape(3))
        if not self.radius > 0:
            raise InvalidInputError(f"sphere radius must be positive, got {self.radius!r}")


@dataclass(frozen=True)
class SphericalPoint:
    radius: float
    azimuth: float
    elevation: float


def fit_sphere(points) -> Sphere:
    """The unique sphere through four non-coplanar points.

    Subtracting the first sphere equation from the other three leaves a
    3x3 linear system for the center, solved here relative to the first
    point by LU with partial pivoting.
    """
    P = np.asarray(points, dtype=float)
    if P.shape != (4, 3):
        raise InvalidInputError(f"expected 4 points in 3D, got shape {P.shape}")
    check_non_coplanar(P)
    D = P[1:] - P[0]
    b = 0.5 * np.einsum("ij,ij->i", D, D)
    offset = np.linalg.solve(D, b)
    center = P[0] + offset
    return Sphere(center, float(np.linalg.norm(offset)))


def spherical_angles(points, sphere: Sphere) -> np.ndarray:
    """(N, 3) on-sphere points -> (N, 2) array of (azimuth, elevation)."""
    d = np.atleast_2d(np.asarray(points, dtype=float)) - sphere.center
    l = sphere.radius
    radial = np.linalg.norm(d, axis=1)
    if np.any(np.abs(radial - l) > ON_SPHERE_RTOL * l):
        raise InvalidInputError("point is not on the sphere")
    elevation = np.arccos(np.clip(d[:, 2] / l, -1.0, 1.0))
    azimuth = np.arctan2(d[:, 1], d[:, 0])
    # atan2 already gives 0 at an exact pole; keep the convention explicit
    azimuth[(elevation == 0.0) | (elevation == np.pi)] = 0.0
    return np.column_stack([azimuth, elevation])


def to_spherical(point, sphere: Sphere) -> SphericalPoint:
    az, el = spherical_angles(point, sphere)[0]
    return SphericalPoint(sphere.radius, float(az), float(el))


def rectangular(angles, sphere: Sphere) -> np.ndarray:
    """(N, 2) array of (azimuth, elevation) -> (N, 3) points."""
    a = np.atleast_2d(np.asarray(angles, dtype=float))
    az, el = a[:, 0], a[:, 1]
    sin_el = np.sin(el)
    d = np.column_stack([sin_el * np.cos(az), sin_el * np.sin(az), np.cos(el)])
    return sphere.center + sphere.radius * d


def to_rectangular(sp: SphericalPoint, sphere: Sphere) -> np.ndarray:
    # the sphere's own radius wins; SphericalPoint.radius is informational
    return rectangular([[sp.azimuth, sp.elevation]], sphere)[0]


def apply_morph(base, delta, sphere: Sphere) -> np.ndarray:
    """Offset spherical angles by ``delta`` and return rectangular points.

    ``base`` and ``delta`` are (N, 2) arrays of (azimuth, elevation), or a
    single :class:`SphericalPoint` with a 2-vector offset.
    """
    if isinstance(base, SphericalPoint):
        d_az, d_el = np.asarray(delta, dtype=float).reshape(-1)[-2:]
        return rectangular([[base.azimuth + d_az, base.elevation + d_el]], sphere)[0]
    return rectangular(np.asarray(base, dtype=float) + np.asarray(delta, dtype=float), sphere)


@dataclass(frozen=True, eq=False)
class MorphParams:
    """Per-point offsets, shape (4, 2): columns are (d_azimuth, d_elevation)."""

    offsets: np.ndarray
    mode: str = FREE

    def __post_init__(self):
        off = np.array(self.offsets, dtype=float)
        if off.shape != (4, 2):
            raise InvalidInputError(f"morph offsets must have shape (4, 2), got {off.shape}")
        off.setflags(write=False)
        object.__setattr__(self, "offsets", off)

    def satisfies_symmetry(self) -> bool:
        o = self.offsets
        return o[0, 0] == 0.0 and o[1, 0] == 0.0 and o[2, 1] == o[3, 1] and o[2, 0] == -o[3, 0]


def n_free(mode: str) -> int:
    if mode == SYMMETRIC:
        return 4
    if mode == FREE:
        return 8
    raise InvalidInputError(f"unknown constraint mode {mode!r}; expected one of {MODES}")


def expand_params(free, mode: str) -> MorphParams:
    """Map the solver's free vector onto per-point offsets.

    symmetric: ``free = (e1, e2, e34, a34)`` gives chin and nose tip elevation
    offsets only, and the canthus pair a shared elevation offset with
    opposite azimuth offsets. free: the 8 offsets in row-major order.
    """
    x = np.asarray(free, dtype=float).reshape(-1)
    if len(x) != n_free(mode):
        raise InvalidInputError(f"{mode} mode takes {n_free(mode)} parameters, got {len(x)}")
    if mode == FREE:
        return MorphParams(x.reshape(4, 2), mode)
    e1, e2, e34, a34 = x
    return MorphParams([[0.0, e1], [0.0, e2], [a34, e34], [-a34, e34]], mode)


def expansion_matrix(mode: str) -> np.ndarray:
    """Constant (8, n_free) matrix with ``offsets.ravel() == E @ free``."""
    if mode == FREE:
        return np.eye(8)
    E = np.zeros((8, n_free(mode)))
    E[1, 0] = 1.0
    E[3, 1] = 1.0
    E[5, 2] = E[7, 2] = 1.0
    E[4, 3] = 1.0
    E[6, 3] = -1.0
    return E
