"""Labeled landmark sets and their centroid/unit-length normalization.

Normalizing every deviation from the centroid to unit length removes the
weak-perspective scale and translation, leaving (approximately) a pure
rotation between the 2D and 3D sets.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .errors import DegenerateGeometryError, InvalidInputError

# the vocabulary of the bundled model, in canonical order
DEFAULT_LABELS = ("chin", "nose_tip", "left_canthus", "right_canthus")

COINCIDENCE_RTOL = 1e-9
COPLANARITY_RTOL = 1e-9


@dataclass(frozen=True, eq=False)
class _PointSet:
    labels: tuple[str, ...]
    points: np.ndarray

    dim = 0

    def __post_init__(self):
        labels = tuple(str(label) for label in self.labels)
        pts = np.array(self.points, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != self.dim:
            raise InvalidInputError(f"expected an (N, {self.dim}) array of points, got shape {pts.shape}")
        if len(labels) != len(pts):
            raise InvalidInputError(f"{len(labels)} labels for {len(pts)} points")
        if len(set(labels)) != len(labels):
            raise InvalidInputError(f"duplicate labels in {labels}")
        if not np.all(np.isfinite(pts)):
            raise InvalidInputError("point coordinates must be finite")
        pts.setflags(write=False)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "points", pts)

    def __len__(self):
        return len(self.labels)

    def __getitem__(self, label):
        return self.points[self.labels.index(label)]

    def reorder(self, labels):
        """Return the same points in the order given by ``labels``."""
        missing = [label for label in labels if label not in self.labels]
        if missing:
            raise InvalidInputError(f"missing landmark(s): {', '.join(missing)}")
        idx = [self.labels.index(label) for label in labels]
        return type(self)(tuple(labels), self.points[idx])

    @classmethod
    def from_mapping(cls, mapping):
        return cls(tuple(mapping), np.array(list(mapping.values()), dtype=float))


class FeaturePointSet2D(_PointSet):
    """Landmark pixel coordinates ``(u, v)``."""

    dim = 2


class FeaturePointSet3D(_PointSet):
    """Model coordinates ``(x, y, z)``."""

    dim = 3


@dataclass(frozen=True, eq=False)
class NormalizedSet:
    labels: tuple[str, ...]
    vectors: np.ndarray   # (N, d) unit deviations from the centroid
    centroid: np.ndarray
    lengths: np.ndarray   # deviation norms before scaling, kept for diagnostics


def centroid(points) -> np.ndarray:
    pts = points.points if isinstance(points, _PointSet) else np.asarray(points, dtype=float)
    if pts.ndim != 2 or len(pts) == 0:
        raise InvalidInputError("cannot take the centroid of an empty set")
    return pts.mean(axis=0)


centroid2d = centroid
centroid3d = centroid


def _normalize(pset: _PointSet) -> NormalizedSet:
    pts = pset.points
    c = centroid(pts)
    dev = pts - c
    lengths = np.linalg.norm(dev, axis=1)
    diag = np.linalg.norm(pts.max(axis=0) - pts.min(axis=0))
    for label, length in zip(pset.labels, lengths):
        if length <= COINCIDENCE_RTOL * diag or length == 0.0:
            raise DegenerateGeometryError(f"landmark '{label}' coincides with the centroid")
    return NormalizedSet(pset.labels, dev / lengths[:, None], c, lengths)


def normalize2d(pset: FeaturePointSet2D) -> NormalizedSet:
    if not isinstance(pset, FeaturePointSet2D):
        pset = FeaturePointSet2D(tuple(str(i) for i in range(len(pset))), pset)
    return _normalize(pset)


def normalize3d(pset: FeaturePointSet3D) -> NormalizedSet:
    if not isinstance(pset, FeaturePointSet3D):
        pset = FeaturePointSet3D(tuple(str(i) for i in range(len(pset))), pset)
    return _normalize(pset)


def coplanarity_measure(points) -> float:
    """Triple product of the deviations from the first point, divided by (max pairwise distance)^3.

    Zero for coplanar points; the sign follows the point order.
    """
    P = np.asarray(points, dtype=float)
    if P.shape != (4, 3):
        raise InvalidInputError(f"expected 4 points in 3D, got shape {P.shape}")
    span = max(np.linalg.norm(a - b) for a, b in combinations(P, 2))
    if span == 0.0:
        return 0.0
    return float(np.linalg.det(P[1:] - P[0])) / span**3


def check_non_coplanar(points, what="points"):
    if abs(coplanarity_measure(points)) <= COPLANARITY_RTOL:
        raise DegenerateGeometryError(f"the four {what} are coplanar")


def projection_ratio(R, deviation) -> float:
    """Norm of the first two rotated components of ``deviation`` over its full norm.

    Equals 1 exactly when ``deviation`` lies in the span of the first two
    rows of ``R`` and drops to 0 along the third row.
    """
    v = np.asarray(deviation, dtype=float)
    norm = np.linalg.norm(v)
    if v.shape != (3,) or not np.isfinite(norm) or norm == 0.0:
        raise InvalidInputError("deviation must be a finite non-zero 3-vector")
    return float(np.linalg.norm(np.asarray(R, dtype=float)[:2] @ v) / norm)
