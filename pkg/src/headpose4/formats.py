"""CSV readers and writers for models, landmarks, poses and predictions.

Every file is UTF-8 with a header row. Lines starting with ``#`` are
comments (provenance headers) and are skipped when reading.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass

from .errors import InvalidInputError
from .geometry import EulerAngles
from .normalization import FeaturePointSet3D

MODEL_COLUMNS = ("label", "x", "y", "z")
LANDMARK_COLUMNS = ("image_id", "label", "u", "v")
POSE_COLUMNS = ("image_id", "pitch", "yaw", "roll")
PREDICTION_COLUMNS = ("image_id", "pitch", "yaw", "roll", "iterations", "final_objective", "converged")


class ParseError(InvalidInputError):
    def __init__(self, path, line, message):
        super().__init__(f"{path}:{line}: {message}" if line else f"{path}: {message}")
        self.path = path
        self.line = line


def _rows(path, columns):
    """Yield ``(line_number, row_dict)`` for the data rows of a CSV file."""
    with open(path, encoding="utf-8", newline="") as fh:
        lines = [(n, text) for n, text in enumerate(fh, start=1) if text.strip() and not text.startswith("#")]
    if not lines:
        raise ParseError(path, 0, "no records (missing header)")
    header_line, header_text = lines[0]
    header = [h.strip() for h in next(csv.reader([header_text]))]
    missing = [c for c in columns if c not in header]
    if missing:
        raise ParseError(path, header_line, f"header lacks column(s) {', '.join(missing)}")
    if len(lines) == 1:
        raise ParseError(path, 0, "no records")
    for n, text in lines[1:]:
        values = next(csv.reader([text]))
        if len(values) != len(header):
            raise ParseError(path, n, f"expected {len(header)} fields, got {len(values)}")
        yield n, dict(zip(header, (v.strip() for v in values)))


def _float(path, n, row, key):
    # float() ignores locale, so "1,5" is rejected rather than misread
    try:
        value = float(row[key])
    except ValueError:
        raise ParseError(path, n, f"{key}={row[key]!r} is not a number") from None
    if not math.isfinite(value):
        raise ParseError(path, n, f"{key} must be finite")
    return value


def read_model(path) -> FeaturePointSet3D:
    labels, points = [], []
    for n, row in _rows(path, MODEL_COLUMNS):
        if row["label"] in labels:
            raise ParseError(path, n, f"duplicate label {row['label']!r}")
        labels.append(row["label"])
        points.append([_float(path, n, row, c) for c in "xyz"])
    return FeaturePointSet3D(tuple(labels), points)


def write_model(path, model: FeaturePointSet3D, comment=None):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        if comment:
            fh.write(f"# {comment}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(MODEL_COLUMNS)
        for label, p in zip(model.labels, model.points):
            w.writerow([label] + [repr(float(v)) for v in p])


def read_landmarks(path) -> dict[str, dict[str, tuple[float, float]]]:
    """image_id -> {label: (u, v)}, in first-appearance order."""
    images: dict[str, dict[str, tuple[float, float]]] = {}
    for n, row in _rows(path, LANDMARK_COLUMNS):
        image = images.setdefault(row["image_id"], {})
        if row["label"] in image:
            raise ParseError(path, n, f"duplicate label {row['label']!r} for image {row['image_id']!r}")
        image[row["label"]] = (_float(path, n, row, "u"), _float(path, n, row, "v"))
    return images


def write_landmarks(path, images, comment=None):
    """``images`` maps image_id -> (labels, (N, 2) pixels); rows sorted by image_id."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        if comment:
            fh.write(f"# {comment}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(LANDMARK_COLUMNS)
        for image_id in sorted(images):
            labels, uv = images[image_id]
            for label, (u, v) in zip(labels, uv):
                w.writerow([image_id, label, f"{u:.9f}", f"{v:.9f}"])


def read_poses(path) -> dict[str, EulerAngles]:
    poses = {}
    for n, row in _rows(path, POSE_COLUMNS):
        if row["image_id"] in poses:
            raise ParseError(path, n, f"duplicate image_id {row['image_id']!r}")
        poses[row["image_id"]] = EulerAngles(*(_float(path, n, row, k) for k in ("pitch", "yaw", "roll")))
    return poses


def write_poses(path, poses, comment=None):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        if comment:
            fh.write(f"# {comment}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(POSE_COLUMNS)
        for image_id in sorted(poses):
            a = poses[image_id]
            w.writerow([image_id, f"{a.pitch:.6f}", f"{a.yaw:.6f}", f"{a.roll:.6f}"])


@dataclass
class Prediction:
    image_id: str
    angles: EulerAngles | None
    iterations: int = 0
    objective: float = math.nan
    converged: bool = False
    error: str | None = None       # set for failed instances
    wall_time_ms: float | None = None

    @property
    def ok(self):
        return self.error is None


def write_predictions(path, predictions, comment=None, timing=False):
    columns = PREDICTION_COLUMNS + (("wall_time_ms",) if timing else ())
    with open(path, "w", encoding="utf-8", newline="") as fh:
        if comment:
            fh.write(f"# {comment}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for p in sorted(predictions, key=lambda p: p.image_id):
            if p.ok:
                a = p.angles
                row = [p.image_id, f"{a.pitch:.6f}", f"{a.yaw:.6f}", f"{a.roll:.6f}", p.iterations,
                       f"{p.objective:.9e}", "true" if p.converged else "false"]
            else:
                row = [p.image_id, "nan", "nan", "nan", 0, "nan", f"error: {p.error}"]
            if timing:
                row.append("" if p.wall_time_ms is None else f"{p.wall_time_ms:.3f}")
            w.writerow(row)


def read_predictions(path) -> dict[str, Prediction]:
    preds = {}
    for n, row in _rows(path, PREDICTION_COLUMNS):
        image_id = row["image_id"]
        if image_id in preds:
            raise ParseError(path, n, f"duplicate image_id {image_id!r}")
        status = row["converged"]
        wall = row.get("wall_time_ms") or None
        if status.startswith("error"):
            preds[image_id] = Prediction(image_id, None, error=status.partition(":")[2].strip() or "failed")
            continue
        if status not in ("true", "false"):
            raise ParseError(path, n, f"converged must be true, false or error: ..., got {status!r}")
        angles = EulerAngles(*(_float(path, n, row, k) for k in ("pitch", "yaw", "roll")))
        try:
            iterations = int(row["iterations"])
            objective = float(row["final_objective"])
        except ValueError:
            raise ParseError(path, n, "iterations and final_objective must be numeric") from None
        preds[image_id] = Prediction(image_id, angles, iterations, objective, status == "true",
                                     wall_time_ms=None if wall is None else _float(path, n, row, "wall_time_ms"))
    return preds
