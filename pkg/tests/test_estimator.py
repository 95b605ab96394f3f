import numpy as np
import pytest
from conftest import perturbed_instance

from headpose4.errors import DegenerateGeometryError, GimbalLockError, HeadPoseError, InvalidInputError
from headpose4.estimator import DEFAULT_MODEL, EstimationConfig, estimate_pose, estimate_pose_no_morph
from headpose4.formats import read_poses
from headpose4.geometry import EulerAngles, WeakPerspectiveCamera, compose_rotation, is_rotation
from headpose4.normalization import FeaturePointSet2D, FeaturePointSet3D
from headpose4.optimizer import LMConfig
from headpose4.synthetic import SceneSpec, generate_scene


def scene(pitch, yaw, roll, camera=None):
    spec = SceneSpec(EulerAngles(pitch, yaw, roll))
    if camera is not None:
        spec.camera = camera
    return generate_scene(spec)[0]


def test_result_fields():
    lm, _, _ = perturbed_instance(11, 0)
    res = estimate_pose(lm)
    assert is_rotation(res.rotation) and is_rotation(res.initial_rotation)
    assert res.iterations == res.trace.iterations >= 1
    assert res.objective <= res.initial_objective
    assert res.morph.satisfies_symmetry()
    assert np.isfinite(res.angles.as_array()).all()


def test_scale_and_translation_invariance():
    for i in range(10):
        lm, _, _ = perturbed_instance(12, i)
        moved = FeaturePointSet2D(lm.labels, 1.3 * lm.points + [12, -7])
        a = estimate_pose(lm).angles.as_array()
        b = estimate_pose(moved).angles.as_array()
        assert np.max(np.abs(a - b)) <= 1e-6


def test_label_order_does_not_matter():
    lm, _, _ = perturbed_instance(12, 3)
    shuffled = lm.reorder(lm.labels[::-1])
    assert estimate_pose(lm).angles == estimate_pose(shuffled).angles


def test_morph_never_raises_objective():
    for i in range(30):
        lm, _, _ = perturbed_instance(13, i)
        on = estimate_pose(lm)
        off = estimate_pose_no_morph(lm)
        assert on.objective <= off.objective + 1e-12
        assert on.initial_objective == pytest.approx(off.objective, rel=1e-12)


def test_no_morph_matches_reference_grid(data_dir):
    truth = read_poses(data_dir / "grid125_poses.csv")
    expected = read_poses(data_dir / "grid125_nomorph_baseline.csv")
    cam = WeakPerspectiveCamera(4.0, (80.0, 60.0))
    for image_id, angles in truth.items():
        lm = scene(*angles.as_array(), camera=cam)
        got = estimate_pose_no_morph(lm).angles.as_array()
        # baseline is stored with six decimals
        assert np.max(np.abs(got - expected[image_id].as_array())) <= 5e-6 + 1e-9


def test_no_morph_reports_zero_iterations():
    res = estimate_pose_no_morph(scene(10, -5, 3))
    assert res.iterations == 0 and res.converged and res.morph is None and res.trace is None
    assert np.array_equal(res.rotation, res.initial_rotation)


def test_large_eta_approaches_no_morph():
    lm = scene(0, 0, 0)
    a = estimate_pose(lm, cfg=EstimationConfig(eta=1e8)).angles.as_array()
    b = estimate_pose_no_morph(lm).angles.as_array()
    assert np.max(np.abs(a - b)) <= 1e-3


def test_roll_sweep_is_monotone():
    rolls = np.linspace(-60, 60, 25)
    est = [estimate_pose(scene(0, 0, r)).angles.roll for r in rolls]
    assert np.all(np.diff(est) > 0)
    # pure in-plane rotation survives the normalization unchanged
    np.testing.assert_allclose(est, rolls, atol=1e-9)


def test_free_mode_runs():
    lm, _, _ = perturbed_instance(14, 0)
    res = estimate_pose(lm, cfg=EstimationConfig(mode="free"))
    assert res.morph.offsets.shape == (4, 2) and res.converged


def test_deterministic():
    lm, _, _ = perturbed_instance(14, 2)
    a, b = estimate_pose(lm), estimate_pose(lm)
    assert np.array_equal(a.rotation, b.rotation) and a.iterations == b.iterations


def test_max_iter_respected():
    lm, _, _ = perturbed_instance(14, 5)
    res = estimate_pose(lm, cfg=EstimationConfig(lm=LMConfig(max_iter=1)))
    assert res.iterations <= 1


def test_config_validation():
    with pytest.raises(InvalidInputError):
        EstimationConfig(eta=-1)
    with pytest.raises(InvalidInputError):
        EstimationConfig(mode="mirror")


def test_missing_label_stage():
    lm = scene(0, 0, 0)
    partial = FeaturePointSet2D(lm.labels[:3], lm.points[:3])
    with pytest.raises(InvalidInputError, match="right_canthus") as info:
        estimate_pose(partial)
    assert info.value.stage == "input"


def test_coincident_landmark_stage():
    lm = scene(0, 0, 0)
    pts = lm.points.copy()
    pts[0] = pts[1:].mean(axis=0)
    with pytest.raises(DegenerateGeometryError) as info:
        estimate_pose(FeaturePointSet2D(lm.labels, pts))
    assert info.value.stage == "normalize"
    assert str(info.value).startswith("[normalize]")


def test_coplanar_model_stage():
    flat = FeaturePointSet3D(DEFAULT_MODEL.labels, [[0, -60, 0], [0, -20, 0], [-30, 20, 0], [30, 20, 0]])
    with pytest.raises(DegenerateGeometryError) as info:
        estimate_pose(scene(0, 0, 0), flat)
    assert info.value.stage == "input"


def test_gimbal_lock_stage():
    # landmarks rendered from a rotation with |r31| = 1
    R = compose_rotation(EulerAngles(0, 90, 0))
    M = DEFAULT_MODEL.points
    lm = FeaturePointSet2D(DEFAULT_MODEL.labels, M @ R[:2].T)
    with pytest.raises(HeadPoseError) as info:
        estimate_pose_no_morph(lm)
    assert isinstance(info.value, GimbalLockError)
    assert info.value.stage == "euler"
