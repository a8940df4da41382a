import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from physloc.exceptions import (
    DegenerateConfiguration,
    DegenerateUpVector,
    InsufficientCorrespondences,
    InvalidInput,
    NonPositiveDepth,
)
from physloc.geometry import (
    SYNTHETIC_CAMERAS,
    CameraRig,
    Correspondence,
    ExtrinsicCalibrator,
    ExtrinsicTransform,
    IntrinsicParams,
    backproject,
    calibrate_extrinsics,
    correspondence_arrays,
    default_intrinsics,
    dlt_extrinsics,
    project,
    refine_extrinsics,
    reprojection_rms,
    rig_from_spherical,
    rotation_angle_between,
    synthetic_rig,
)

K100 = IntrinsicParams(100.0, 100.0, 112.0, 112.0)
IDENTITY_RIG = CameraRig(K100, ExtrinsicTransform.identity())


def scene_points(rng, n=11):
    pts = rng.uniform(-2.0, 2.0, (n, 3))
    pts[:, 2] = rng.uniform(0.0, 2.0, n)
    return pts


def test_project_optical_axis():
    pix, depth = project([0.0, 0.0, 5.0], IDENTITY_RIG)
    np.testing.assert_allclose(pix, [112.0, 112.0])
    assert depth == 5.0


def test_project_offset_point():
    pix, depth = project([1.0, 0.0, 5.0], IDENTITY_RIG)
    np.testing.assert_allclose(pix, [132.0, 112.0])
    assert depth == 5.0


def test_project_behind_camera():
    with pytest.raises(NonPositiveDepth):
        project([0.0, 0.0, -1.0], IDENTITY_RIG)
    with pytest.raises(NonPositiveDepth):
        project([0.0, 0.0, 0.0], IDENTITY_RIG)


def test_backproject_principal_point():
    np.testing.assert_allclose(backproject([112.0, 112.0], 5.0, IDENTITY_RIG), [0.0, 0.0, 5.0])


def test_backproject_rejects_nonpositive_depth():
    with pytest.raises(NonPositiveDepth):
        backproject([112.0, 112.0], 0.0, IDENTITY_RIG)


def test_round_trip_1000_points(rig1):
    rng = np.random.default_rng(1)
    world = rng.uniform(-3, 3, (1000, 3))
    pix, depth = project(world, rig1)
    assert np.max(np.abs(backproject(pix, depth, rig1) - world)) < 1e-9


def test_double_depth_doubles_ray(rig1):
    w = np.array([0.4, -0.3, 1.2])
    pix, depth = project(w, rig1)
    far = backproject(pix, 2 * depth, rig1)
    np.testing.assert_allclose(far, rig1.center + 2 * (w - rig1.center), atol=1e-12)


def test_ray_matches_backprojection(rig1):
    pix = np.array([[10.0, 200.0], [112.0, 112.0]])
    z = np.array([3.0, 7.5])
    np.testing.assert_allclose(rig1.center + z[:, None] * rig1.ray(pix), backproject(pix, z, rig1), atol=1e-12)


@given(
    arrays(float, 3, elements=st.floats(-4, 4)),
    st.floats(4.0, 12.0), st.floats(-80.0, -10.0), st.floats(0.0, 360.0),
)
def test_round_trip_property(point, d, theta, phi):
    rig = rig_from_spherical(d, theta, phi, default_intrinsics())
    cam = rig.world_to_camera(point)
    if cam[2] <= 1e-3:
        return
    pix, depth = project(point, rig)
    assert np.max(np.abs(backproject(pix, depth, rig) - point)) < 1e-9


def test_camera_one_geometry():
    rig = synthetic_rig(1)
    assert np.linalg.norm(rig.center) == pytest.approx(8.0, abs=1e-12)
    pix, _ = project([0.0, 0.0, 0.0], rig)
    np.testing.assert_allclose(pix, [112.0, 112.0], atol=1e-9)
    # the camera sits above the ground and world up maps to decreasing v
    assert rig.center[2] > 0
    up, _ = project([0.0, 0.0, 1.0], rig)
    assert up[1] < pix[1]


def test_camera_two_distance():
    assert np.linalg.norm(synthetic_rig(2).center) == pytest.approx(10.0, abs=1e-12)


def test_camera_table_values():
    assert SYNTHETIC_CAMERAS[0] == (8.0, -60.0, 40.0)
    assert SYNTHETIC_CAMERAS[1] == (10.0, -65.0, 0.0)
    assert len(SYNTHETIC_CAMERAS) == 9


@given(st.floats(0.5, 50.0), st.floats(-89.0, 89.0), st.floats(-180.0, 180.0))
def test_spherical_rig_invariants(d, theta, phi):
    rig = rig_from_spherical(d, theta, phi, K100)
    R = rig.extrinsics.rotation
    assert np.linalg.norm(R.T @ R - np.eye(3)) < 1e-12
    assert np.linalg.norm(rig.center) == pytest.approx(d, rel=1e-12)
    pix, _ = project([0.0, 0.0, 0.0], rig)
    np.testing.assert_allclose(pix, [K100.cx, K100.cy], atol=1e-9)


@pytest.mark.parametrize("theta", [90.0, -90.0])
def test_vertical_view_axis_is_degenerate(theta):
    with pytest.raises(DegenerateUpVector):
        rig_from_spherical(5.0, theta, 0.0, K100)


def test_extrinsics_validation():
    with pytest.raises(InvalidInput):
        ExtrinsicTransform(np.diag([1.0, 1.0, -1.0]), np.zeros(3))
    with pytest.raises(InvalidInput):
        ExtrinsicTransform(2 * np.eye(3), np.zeros(3))


def test_intrinsics_validation():
    with pytest.raises(InvalidInput):
        IntrinsicParams(0.0, 100.0, 1.0, 1.0)
    assert np.linalg.det(K100.matrix) != 0


def test_camera_json_round_trip(rig1):
    back = CameraRig.from_dict(rig1.to_dict())
    assert back.intrinsics == rig1.intrinsics
    np.testing.assert_array_equal(back.extrinsics.rotation, rig1.extrinsics.rotation)
    with pytest.raises(InvalidInput):
        CameraRig.from_dict({"intrinsics": rig1.intrinsics.to_dict()})


def test_correspondences():
    items = [{"world": [1, 2, 3], "pixel": [4, 5]}, Correspondence((0, 0, 1), (2, 2))]
    world, pix = correspondence_arrays(items)
    assert world.shape == (2, 3) and pix.shape == (2, 2)
    with pytest.raises(InvalidInput):
        Correspondence.from_dict({"world": [1, 2, 3]})


@pytest.mark.parametrize("index", range(1, 10))
def test_dlt_noiseless(index):
    rig = synthetic_rig(index)
    world = scene_points(np.random.default_rng(index))
    pix, _ = project(world, rig)
    ext = dlt_extrinsics(world, pix, rig.intrinsics)
    assert reprojection_rms(ext, world, pix, rig.intrinsics) < 1e-6


def test_dlt_identity_pose():
    rng = np.random.default_rng(3)
    world = rng.uniform(-1, 1, (11, 3)) + [0, 0, 5]
    pix, _ = project(world, IDENTITY_RIG)
    ext = dlt_extrinsics(world, pix, K100)
    np.testing.assert_allclose(ext.rotation, np.eye(3), atol=1e-9)
    np.testing.assert_allclose(ext.translation, np.zeros(3), atol=1e-9)


def test_dlt_needs_six_points(rig1):
    world = scene_points(np.random.default_rng(0), 5)
    pix, _ = project(world, rig1)
    with pytest.raises(InsufficientCorrespondences):
        dlt_extrinsics(world, pix, rig1.intrinsics)


def test_dlt_coplanar_points_are_degenerate(rig1):
    world = scene_points(np.random.default_rng(0), 11)
    world[:, 2] = 0.0
    pix, _ = project(world, rig1)
    with pytest.raises(DegenerateConfiguration):
        dlt_extrinsics(world, pix, rig1.intrinsics)


def test_refine_at_ground_truth_is_fixed(rig1):
    world = scene_points(np.random.default_rng(4))
    pix, _ = project(world, rig1)
    res = refine_extrinsics(rig1.extrinsics, world, pix, rig1.intrinsics)
    np.testing.assert_allclose(res.extrinsics.rotation, rig1.extrinsics.rotation, atol=1e-9)
    np.testing.assert_allclose(res.extrinsics.translation, rig1.extrinsics.translation, atol=1e-9)


def perturbed(ext, angle_deg, shift, rng):
    from scipy.spatial.transform import Rotation

    axis = rng.normal(size=3)
    axis /= np.linalg.norm(axis)
    dR = Rotation.from_rotvec(np.radians(angle_deg) * axis).as_matrix()
    d = rng.normal(size=3)
    return ExtrinsicTransform(dR @ ext.rotation, ext.translation + shift * d / np.linalg.norm(d))


def test_refine_from_perturbed_pose(rig1):
    rng = np.random.default_rng(5)
    world = scene_points(rng)
    pix, _ = project(world, rig1)
    start = perturbed(rig1.extrinsics, 2.0, 0.05, rng)
    res = refine_extrinsics(start, world, pix, rig1.intrinsics)
    assert reprojection_rms(res.extrinsics, world, pix, rig1.intrinsics) < 1e-6
    assert res.converged


def test_refine_trace_is_monotone_on_noisy_points(rig1):
    rng = np.random.default_rng(6)
    world = scene_points(rng)
    pix, _ = project(world, rig1)
    pix = pix + rng.normal(0, 0.5, pix.shape)
    start = perturbed(rig1.extrinsics, 1.0, 0.02, rng)
    res = refine_extrinsics(start, world, pix, rig1.intrinsics)
    trace = np.asarray(res.loss_trace)
    assert np.all(np.diff(trace) <= 1e-12 * trace[0])
    assert trace[-1] <= trace[0]


def test_calibration_recovers_pose_exactly():
    for index in (1, 4, 9):
        rig = synthetic_rig(index)
        world = scene_points(np.random.default_rng(10 + index))
        pix, _ = project(world, rig)
        res = calibrate_extrinsics(world, pix, rig.intrinsics)
        assert rotation_angle_between(res.extrinsics.rotation, rig.extrinsics.rotation) < 1e-6
        assert np.linalg.norm(res.extrinsics.translation - rig.extrinsics.translation) < 1e-6


def test_world_and_camera_distances_agree(rig1):
    rng = np.random.default_rng(7)
    a, b = rng.normal(size=(50, 3)), rng.normal(size=(50, 3))
    dw = np.linalg.norm(a - b, axis=1)
    dc = np.linalg.norm(rig1.world_to_camera(a) - rig1.world_to_camera(b), axis=1)
    np.testing.assert_allclose(dw, dc, atol=1e-12)


def test_calibrator_estimator(rig1):
    world = scene_points(np.random.default_rng(8))
    pix, _ = project(world, rig1)
    cal = ExtrinsicCalibrator(intrinsics=rig1.intrinsics)
    assert cal.get_params()["refine"] is True
    cal.fit(world, pix)
    assert cal.rms_ < 1e-6
    np.testing.assert_allclose(cal.predict(world), pix, atol=1e-6)
    assert cal.score(world, pix) > -1e-6
