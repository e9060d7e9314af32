import numpy as np
import pytest

from twinnav.exceptions import BadConfig, DimensionMismatch, FormatError, InsufficientViews
from twinnav.geometry import CameraIntrinsics, RigidTransform
from twinnav.image import ImageBuffer, write_ppm
from twinnav.io import save_intrinsics, transform_to_list, write_json
from twinnav.radiance.render import RenderConfig
from twinnav.radiance.train import Adam, TrainConfig, load_dataset, train

TARGET = (0.7, 0.4, 0.6)
K8 = CameraIntrinsics(10.0, 10.0, 4.0, 4.0, 8, 8)
POSE = RigidTransform(np.eye(3), [0.0, 0.0, -600.0])


def _smoke_config(**kwargs):
    values = dict(
        steps=100,
        batch_size=64,
        learning_rate=1e-2,
        seed=1,
        render=RenderConfig(400.0, 800.0, 16, stratified=True),
        log_every=25,
        threads=1,
        L_x=2,
        L_d=1,
        trunk_depth=2,
        trunk_width=16,
        color_width=16,
    )
    values.update(kwargs)
    return TrainConfig(**values)


@pytest.fixture(scope="module")
def uniform_views():
    image = ImageBuffer.filled(8, 8, TARGET)
    yield [(image, K8, POSE), (image, K8, POSE)]


def test_adam_first_step_moves_by_learning_rate():
    params = [np.array([1.0, -2.0, 3.0])]
    grads = [np.array([0.5, -4.0, 1e-2])]
    Adam(lr=0.1).step(params, grads)
    assert np.allclose(params[0], [0.9, -1.9, 2.9], atol=1e-6)


def test_adam_updates_in_place():
    p = np.zeros(2)
    optimizer = Adam(lr=0.01)
    for _ in range(3):
        optimizer.step([p], [np.array([1.0, -1.0])])
    assert optimizer.t == 3
    assert p[0] < 0 < p[1]


def test_needs_two_views(uniform_views):
    with pytest.raises(InsufficientViews):
        train(uniform_views[:1], _smoke_config())


def test_image_size_must_match_intrinsics(uniform_views):
    image = ImageBuffer.filled(4, 4, TARGET)
    with pytest.raises(DimensionMismatch):
        train([uniform_views[0], (image, K8, POSE)], _smoke_config())


def test_uniform_view_loss_drops(uniform_views):
    result = train(uniform_views, _smoke_config())
    assert len(result.losses) == 100
    assert result.losses[-1] <= result.losses[0] / 10


def test_training_is_reproducible(uniform_views):
    cfg = _smoke_config(steps=10)
    a = train(uniform_views, cfg)
    b = train(uniform_views, cfg)
    assert a.losses == b.losses
    assert np.array_equal(a.params.flat(), b.params.flat())


def test_init_is_not_modified(uniform_views):
    cfg = _smoke_config(steps=3)
    init = cfg.initial_field()
    before = init.flat().copy()
    result = train(uniform_views, cfg, init)
    assert np.array_equal(init.flat(), before)
    assert not np.array_equal(result.params.flat(), before)


def test_config_from_dict():
    cfg = TrainConfig.from_dict(
        {"steps": 5, "render": {"near": 100.0, "far": 200.0, "samples": 4}, "L_x": 3}
    )
    assert cfg.steps == 5 and cfg.L_x == 3
    assert cfg.render.samples == 4 and not cfg.render.stratified
    assert cfg.initial_field().encoding.L_x == 3


def test_config_rejects_unknown_keys():
    with pytest.raises(BadConfig):
        TrainConfig.from_dict({"epochs": 5})


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(steps=-1),
        dict(batch_size=0),
        dict(learning_rate=0.0),
        dict(dtype="float16"),
        dict(chunk_size=0),
    ],
)
def test_config_validation(kwargs):
    with pytest.raises(ValueError):
        TrainConfig(**kwargs)


def test_load_dataset(tmp_path):
    save_intrinsics(tmp_path / "intrinsics.json", K8)
    write_ppm(ImageBuffer.filled(8, 8, (0.0, 1.0, 0.0)), tmp_path / "images" / "0000.ppm")
    write_json(
        tmp_path / "manifest.json",
        {
            "intrinsics": "intrinsics.json",
            "frames": [
                {"image": "images/0000.ppm", "transform_cam_to_world": transform_to_list(POSE)}
            ],
        },
    )
    views = load_dataset(tmp_path / "manifest.json")
    assert len(views) == 1
    image, K, pose = views[0]
    assert K == K8
    assert np.array_equal(pose.matrix, POSE.matrix)
    assert np.array_equal(image.pixels[0, 0], [0.0, 1.0, 0.0])


def test_load_dataset_missing_keys(tmp_path):
    write_json(tmp_path / "manifest.json", {"frames": []})
    with pytest.raises(FormatError):
        load_dataset(tmp_path / "manifest.json")


@pytest.mark.parametrize("dtype", ["float32", "float64"])
def test_both_precisions_train(uniform_views, dtype):
    result = train(uniform_views, _smoke_config(dtype=dtype, chunk_size=16, threads=2))
    assert result.losses[-1] <= result.losses[0] / 10
    assert all(a.dtype == np.float64 for a in result.params.arrays())
