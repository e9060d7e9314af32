import numpy as np
import pytest

from twinnav import config
from twinnav.geometry import CameraIntrinsics, RigidTransform
from twinnav.radiance.field import EncodingConfig, init_field
from twinnav.simulate.scene import build_head_scene


def random_rotation(rng, max_angle=np.pi):
    axis = rng.normal(size=3)
    axis /= np.linalg.norm(axis)
    angle = rng.uniform(-max_angle, max_angle)
    K = np.array([[0, -axis[2], axis[1]], [axis[2], 0, -axis[0]], [-axis[1], axis[0], 0]])
    # Rodrigues, kept independent of scipy
    return np.eye(3) + np.sin(angle) * K + (1 - np.cos(angle)) * K @ K


def random_transform(rng, max_angle=np.pi, scale=100.0):
    return RigidTransform(random_rotation(rng, max_angle), rng.normal(0.0, scale, 3))


def homogeneous(T):
    m = np.eye(4)
    m[:3, :3] = T.rotation
    m[:3, 3] = T.translation
    return m


@pytest.fixture(scope="session")
def camera():
    yield CameraIntrinsics.from_dict(config.CAMERA)


@pytest.fixture(scope="session")
def unit_camera():
    yield CameraIntrinsics(1.0, 1.0, 0.0, 0.0, 4, 4)


@pytest.fixture(scope="session")
def head_scene():
    yield build_head_scene()


@pytest.fixture(scope="module")
def tiny_field():
    """Small network with non-zero biases so every code path carries signal."""
    params = init_field(EncodingConfig(2, 1), trunk_depth=2, trunk_width=8, color_width=8, seed=3)
    rng = np.random.default_rng(11)
    arrays = [a + (0.1 * rng.normal(size=a.shape) if a.ndim == 1 else 0) for a in params.arrays()]
    yield params.with_arrays(arrays)


@pytest.fixture(scope="module")
def zero_field():
    params = init_field(EncodingConfig(2, 1), trunk_depth=2, trunk_width=8, color_width=8)
    yield params.zeros_like()
