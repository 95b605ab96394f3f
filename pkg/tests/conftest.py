from pathlib import Path

import numpy as np
import pytest

from headpose4.estimator import DEFAULT_MODEL
from headpose4.geometry import EulerAngles
from headpose4.normalization import normalize2d, normalize3d
from headpose4.optimizer import ObjectiveContext, initial_rotation
from headpose4.sphere import fit_sphere, spherical_angles
from headpose4.synthetic import SceneSpec, generate_scene, instance_rng, random_symmetric_morph

DATA = Path(__file__).parent / "data"

_acceptance_lines = []


@pytest.fixture
def data_dir():
    return DATA


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def perturbed_instance(seed, index, magnitude=0.15, pose_range=30.0):
    """Landmarks of the default model after a random symmetric morph, at a random pose."""
    r = instance_rng(seed, index)
    angles = EulerAngles(*r.uniform(-pose_range, pose_range, 3))
    morph = random_symmetric_morph(r, magnitude)
    landmarks, truth = generate_scene(SceneSpec(angles, morph=morph))
    return landmarks, angles, truth


def context_for(landmarks, eta=1.77, mode="symmetric", model=DEFAULT_MODEL):
    m = normalize2d(landmarks.reorder(model.labels))
    M = normalize3d(model)
    sphere = fit_sphere(M.vectors)
    return ObjectiveContext.build(m.vectors, spherical_angles(M.vectors, sphere), sphere,
                                  initial_rotation(m, M), eta, mode)


@pytest.fixture
def acceptance_report():
    def record(criterion, passed, detail):
        line = f"[{'PASS' if passed else 'FAIL'}] {criterion}: {detail}"
        _acceptance_lines.append(line)
        print(line)
        return passed
    return record


def pytest_terminal_summary(terminalreporter):
    if _acceptance_lines:
        terminalreporter.section("acceptance criteria")
        for line in _acceptance_lines:
            terminalreporter.write_line(line)
