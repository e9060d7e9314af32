import numpy as np
import pytest

from twinnav.exceptions import BadConfig
from twinnav.simulate.scene import (
    LANDMARKS_XY,
    PEAK_DENSITY,
    SceneConfig,
    build_head_scene,
    ellipsoid_distance,
    smoothstep,
)


def test_density_peaks_inside(head_scene):
    assert head_scene.density([0.0, 0.0, 0.0])[0] == PEAK_DENSITY


@pytest.mark.parametrize("direction", [(1, 0, 0), (0, -1, 0), (0, 0, -1), (0.6, 0.0, 0.8)])
def test_density_vanishes_far_away(head_scene, direction):
    p = 300.0 * np.asarray(direction, dtype=np.float64)
    assert head_scene.density(p)[0] == 0.0


def test_landmarks_on_surface(head_scene):
    distances = head_scene.surface_function(head_scene.landmarks.array)
    assert np.all(np.abs(distances) < 1.0)


def test_landmarks_face_the_camera(head_scene):
    assert sorted(head_scene.landmarks.names) == sorted(LANDMARKS_XY)
    assert np.all(head_scene.landmarks.array[:, 2] < -50.0)


def test_nose_tip_protrudes(head_scene):
    nose = head_scene.landmarks["nose_tip"]
    assert nose[2] == pytest.approx(-130.0)
    assert nose[2] < head_scene.landmarks["left_eye_left_corner"][2]


def test_colors_in_range(head_scene):
    points = np.random.default_rng(0).uniform(-300, 300, (1000, 3))
    rgb = head_scene.color(points)
    assert np.all((rgb >= 0.0) & (rgb <= 1.0))


def test_query_ignores_direction(head_scene):
    points = np.random.default_rng(1).uniform(-120, 120, (50, 3))
    a = head_scene.query(points, np.tile([0, 0, 1.0], (50, 1)))
    b = head_scene.query(points, np.tile([1.0, 0, 0], (50, 1)))
    assert all(np.array_equal(x, y) for x, y in zip(a, b))


def test_ellipsoid_distance_on_sphere():
    points = np.array([[10.0, 0, 0], [0, 20.0, 0], [0, 0, 5.0], [0, 0, 0]])
    d = ellipsoid_distance(points, (0, 0, 0), (10.0, 10.0, 10.0))
    assert np.allclose(d, [0.0, 10.0, -5.0, -10.0])


def test_smoothstep_edges():
    assert smoothstep(-2.0, 2.0, np.array([-3.0, -2.0, 0.0, 2.0, 5.0])).tolist() == [
        0.0,
        0.0,
        0.5,
        1.0,
        1.0,
    ]


def test_model_scale():
    scene = build_head_scene(SceneConfig(model_scale=1.1))
    model = scene.model_landmarks()
    assert model.frame == "model"
    assert np.allclose(model.array, 1.1 * scene.landmarks.array)


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(head_axes_mm=(75.0, 0.0, 110.0)),
        dict(shell_mm=0.0),
        dict(peak_density=-1.0),
        dict(model_scale=0.0),
        dict(landmarks_xy={"a": (0.0, 0.0), "b": (1.0, 1.0)}),
        dict(landmarks_xy={"a": (0.0, 0.0), "b": (1.0, 1.0), "c": (500.0, 0.0)}),
    ],
)
def test_bad_scene_config(kwargs):
    with pytest.raises(BadConfig):
        build_head_scene(SceneConfig(**kwargs))


def test_config_roundtrip():
    cfg = SceneConfig(model_scale=0.9, shell_mm=3.0)
    assert SceneConfig.from_dict(cfg.to_dict()) == cfg


def test_config_unknown_key():
    with pytest.raises(BadConfig):
        SceneConfig.from_dict({"skull": 1})
