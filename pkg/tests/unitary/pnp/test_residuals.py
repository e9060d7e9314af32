import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from twinnav.geometry import RigidTransform, project
from twinnav.pnp import (
    Correspondence,
    PoseParameters,
    jacobian,
    pose_to_transform,
    residuals,
    transform_to_pose,
)

H = 1e-6


def _random_case(seed, n=8):
    rng = np.random.default_rng(seed)
    pose = PoseParameters(rng.normal(0.0, 0.4, 3), [rng.normal(0, 20), rng.normal(0, 20), 600.0])
    world = rng.uniform(-80.0, 80.0, (n, 3))
    obs = rng.uniform(0.0, 480.0, (n, 2))
    return pose, [Correspondence(p, uv) for p, uv in zip(world, obs)]


def _numeric_jacobian(K, pose, corr):
    x = pose.vector
    columns = []
    for k in range(6):
        step = np.zeros(6)
        step[k] = H
        plus = residuals(K, PoseParameters.from_vector(x + step), corr)
        minus = residuals(K, PoseParameters.from_vector(x - step), corr)
        columns.append((plus - minus) / (2 * H))
    return np.stack(columns, axis=1)


def test_self_consistent_observations(camera):
    pose, corr = _random_case(0)
    T = pose_to_transform(pose)
    corr = [Correspondence(c.world_point, project(camera, T, c.world_point)) for c in corr]
    assert np.allclose(residuals(camera, pose, corr), 0.0, rtol=0, atol=1e-9)


def test_sign_convention(camera):
    pose = PoseParameters(np.zeros(3), np.zeros(3))
    corr = [Correspondence((0.0, 0.0, 100.0), (camera.cx - 1.0, camera.cy))]
    assert np.allclose(residuals(camera, pose, corr), [1.0, 0.0], rtol=0, atol=1e-12)


@given(seed=st.integers(min_value=0, max_value=2 ** 32 - 1))
@settings(max_examples=30)
def test_elementwise_oracle(camera, seed):
    pose, corr = _random_case(seed)
    T = pose_to_transform(pose)
    expected = []
    for c in corr:
        px = project(camera, T, c.world_point)
        expected += [px.u - c.observation[0], px.v - c.observation[1]]
    assert np.allclose(residuals(camera, pose, corr), expected, rtol=0, atol=1e-9)


@given(seed=st.integers(min_value=0, max_value=2 ** 32 - 1))
@settings(max_examples=100)
def test_jacobian_finite_differences(camera, seed):
    pose, corr = _random_case(seed)
    J = jacobian(camera, pose, corr)
    numeric = _numeric_jacobian(camera, pose, corr)
    assert J.shape == (16, 6)
    assert np.max(np.abs(J - numeric)) / np.max(np.abs(J)) < 1e-4


def test_jacobian_at_zero_rotation(camera):
    _, corr = _random_case(9)
    pose = PoseParameters(np.zeros(3), [10.0, -5.0, 600.0])
    J = jacobian(camera, pose, corr)
    numeric = _numeric_jacobian(camera, pose, corr)
    assert np.max(np.abs(J - numeric)) / np.max(np.abs(J)) < 1e-4


@pytest.mark.parametrize("depth", [200.0, 600.0, 1500.0])
def test_on_axis_translation_columns(camera, depth):
    pose = PoseParameters(np.zeros(3), np.zeros(3))
    corr = [Correspondence((0.0, 0.0, depth), (0.0, 0.0))]
    J = jacobian(camera, pose, corr)
    assert J[0, 3] == pytest.approx(camera.fx / depth, rel=1e-12)
    assert J[1, 4] == pytest.approx(camera.fy / depth, rel=1e-12)
    assert J[0, 5] == 0.0


def test_pose_conversion_roundtrip():
    pose = PoseParameters([0.3, -0.2, 0.1], [1.0, 2.0, 600.0])
    back = transform_to_pose(pose_to_transform(pose))
    assert np.allclose(back.axis_angle, pose.axis_angle, atol=1e-12)
    assert np.array_equal(back.translation, pose.translation)


def test_axis_angle_kept_below_pi():
    omega = np.array([0.0, 0.0, 1.5 * np.pi])
    pose = PoseParameters(omega, np.zeros(3))
    assert np.linalg.norm(pose.axis_angle) < np.pi + 1e-6
    T = pose_to_transform(pose)
    assert isinstance(T, RigidTransform)
    expected = pose_to_transform(PoseParameters([0.0, 0.0, -0.5 * np.pi], np.zeros(3)))
    assert np.allclose(T.rotation, expected.rotation, atol=1e-12)


def test_correspondence_validation():
    with pytest.raises(ValueError):
        Correspondence((0.0, 0.0), (1.0, 1.0))
    with pytest.raises(ValueError):
        Correspondence((0.0, 0.0, 1.0), (1.0, float("nan")))
