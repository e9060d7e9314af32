import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tests.conftest import homogeneous, random_transform
from twinnav.exceptions import BadConfig, PointBehindCamera
from twinnav.geometry import (
    CameraIntrinsics,
    Ray,
    RigidTransform,
    generate_ray,
    generate_rays,
    invert,
    project,
    project_points,
    transform_point,
)


@pytest.mark.parametrize("z", [1e-3, 1.0, 600.0, 1e6])
def test_optical_axis_hits_principal_point(camera, z):
    px = project(camera, RigidTransform.identity(), (0.0, 0.0, z))
    assert px == (camera.cx, camera.cy)


def test_unit_intrinsics(unit_camera):
    px = project(unit_camera, RigidTransform.identity(), (1.0, 1.0, 1.0))
    assert px.u == 1.0 and px.v == 1.0


@given(seed=st.integers(min_value=0, max_value=2 ** 32 - 1))
@settings(max_examples=50)
def test_project_two_step_oracle(camera, seed):
    rng = np.random.default_rng(seed)
    T = random_transform(rng)
    p_cam = np.array([rng.uniform(-100, 100), rng.uniform(-100, 100), rng.uniform(50, 1000)])
    p_world = transform_point(invert(T), p_cam)

    X, Y, Z, _ = homogeneous(T) @ np.append(p_world, 1.0)
    K = camera.matrix
    uvw = K @ np.array([X, Y, Z])
    px = project(camera, T, p_world)
    assert np.allclose([px.u, px.v], uvw[:2] / uvw[2], rtol=0, atol=1e-6)


@pytest.mark.parametrize("z", [0.0, 1e-6, -5.0])
def test_behind_camera(camera, z):
    with pytest.raises(PointBehindCamera):
        project(camera, RigidTransform.identity(), (0.0, 0.0, z))


def test_behind_camera_names_first_index(camera):
    points = [(0, 0, 100), (0, 0, 200), (0, 0, -1), (0, 0, -2)]
    with pytest.raises(PointBehindCamera) as exc:
        project_points(camera, RigidTransform.identity(), points)
    assert exc.value.index == 2


def test_principal_point_ray(camera):
    ray = generate_ray(camera, RigidTransform.identity(), (camera.cx, camera.cy))
    assert np.array_equal(ray.origin, [0.0, 0.0, 0.0])
    assert np.allclose(ray.direction, [0.0, 0.0, 1.0], rtol=0, atol=1e-15)


def test_horizontal_neighbours_share_vertical_slope(camera):
    a = generate_ray(camera, RigidTransform.identity(), (100.0, 50.0))
    b = generate_ray(camera, RigidTransform.identity(), (101.0, 50.0))
    assert a.direction[1] / a.direction[2] == pytest.approx(b.direction[1] / b.direction[2])
    assert a.direction[0] != b.direction[0]


def test_ray_reprojects_to_its_pixel(camera):
    rng = np.random.default_rng(8)
    T_c2w = random_transform(rng)
    ray = generate_ray(camera, T_c2w, (123.25, 321.5))
    px = project(camera, invert(T_c2w), ray.at(500.0))
    assert np.allclose([px.u, px.v], [123.25, 321.5], atol=1e-8)


def test_generate_rays_pixel_centres():
    K = CameraIntrinsics(10.0, 10.0, 2.0, 1.0, 4, 3)
    T = random_transform(np.random.default_rng(5))
    origins, dirs = generate_rays(K, T)
    assert origins.shape == dirs.shape == (12, 3)
    assert np.allclose(np.linalg.norm(dirs, axis=1), 1.0, atol=1e-12)
    # row-major: index 5 is row 1, column 1
    single = generate_ray(K, T, (1.5, 1.5))
    assert np.allclose(dirs[5], single.direction, atol=1e-12)
    assert np.allclose(origins[5], single.origin)


def test_ray_direction_must_be_unit():
    with pytest.raises(ValueError):
        Ray((0, 0, 0), (0, 0, 2))


@pytest.mark.parametrize(
    "fields",
    [
        dict(fx=0.0),
        dict(fy=-1.0),
        dict(cx=640.0),
        dict(cy=-0.5),
        dict(width=0),
        dict(fx=float("nan")),
    ],
)
def test_intrinsics_validation(camera, fields):
    values = dict(camera.to_dict(), **fields)
    with pytest.raises(BadConfig):
        CameraIntrinsics(**values)


def test_intrinsics_missing_field():
    with pytest.raises(BadConfig, match="fy"):
        CameraIntrinsics.from_dict({"fx": 1, "cx": 0, "cy": 0, "width": 2, "height": 2})


def test_scaled_keeps_field_of_view(camera):
    small = camera.scaled(64, 48)
    assert (small.width, small.height) == (64, 48)
    assert small.fx / small.width == camera.fx / camera.width
    assert small.cx / small.width == camera.cx / camera.width
