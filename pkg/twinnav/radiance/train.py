"""
Fit a radiance field to posed images with Adam on random ray batches.
"""

import logging
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import List, Optional

import numpy as np

from twinnav import config
from twinnav.exceptions import DimensionMismatch, FormatError, InsufficientViews
from twinnav.geometry import generate_rays
from twinnav.image import read_ppm
from twinnav.io import load_intrinsics, parse_transform, read_json
from twinnav.radiance.backprop import batch_gradient
from twinnav.radiance.field import EncodingConfig, FieldParameters, init_field
from twinnav.radiance.render import RenderConfig

LOGGER = logging.getLogger(__name__)


class Adam:
    """Adam with bias-corrected moments, updating a list of arrays in place."""

    def __init__(
        self,
        lr=config.LEARNING_RATE,
        beta1=config.BETA1,
        beta2=config.BETA2,
        epsilon=config.EPSILON,
    ):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.epsilon = epsilon
        self.m = {}
        self.v = {}
        self.t = 0

    def step(self, params, grads):
        self.t += 1
        bc1 = 1.0 - self.beta1 ** self.t
        bc2 = 1.0 - self.beta2 ** self.t
        step_size = self.lr / bc1

        for k, (p, g) in enumerate(zip(params, grads)):
            if k not in self.m:
                self.m[k] = np.zeros_like(p)
                self.v[k] = np.zeros_like(p)
            self.m[k] *= self.beta1
            self.m[k] += (1.0 - self.beta1) * g
            self.v[k] *= self.beta2
            self.v[k] += (1.0 - self.beta2) * (g * g)
            p -= step_size * self.m[k] / (np.sqrt(self.v[k] / bc2) + self.epsilon)


@dataclass(frozen=True)
class TrainConfig:
    steps: int = config.TRAIN_STEPS
    batch_size: int = config.BATCH_SIZE
    learning_rate: float = config.LEARNING_RATE
    beta1: float = config.BETA1
    beta2: float = config.BETA2
    epsilon: float = config.EPSILON
    seed: int = 0
    render: RenderConfig = field(default_factory=lambda: RenderConfig(stratified=True))
    log_every: int = config.LOG_EVERY
    threads: Optional[int] = None
    deterministic: bool = True
    L_x: int = config.L_X
    L_d: int = config.L_D
    trunk_depth: int = config.TRUNK_DEPTH
    trunk_width: int = config.TRUNK_WIDTH
    color_width: int = config.COLOR_WIDTH
    bounds: tuple = config.SCENE_BOUNDS_MM
    dtype: str = config.TRAIN_DTYPE
    chunk_size: int = config.TRAIN_CHUNK_SIZE

    def __post_init__(self):
        if self.steps < 0:
            raise ValueError("steps must be >= 0")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be > 0")
        if not (0 <= self.beta1 < 1 and 0 <= self.beta2 < 1):
            raise ValueError("beta1 and beta2 must lie in [0, 1)")
        if self.log_every < 1:
            raise ValueError("log_every must be >= 1")
        if self.dtype not in ("float32", "float64"):
            raise ValueError(f"dtype must be float32 or float64, got {self.dtype!r}")
        if self.chunk_size < 1:
            raise ValueError("chunk_size must be >= 1")

    @classmethod
    def from_dict(cls, data):
        config.check_keys(data, [f.name for f in fields(cls)], "train")
        data = dict(data)
        if "render" in data:
            data["render"] = RenderConfig.from_dict(data["render"])
        if "bounds" in data:
            data["bounds"] = tuple(tuple(corner) for corner in data["bounds"])
        return cls(**data)

    def initial_field(self):
        return init_field(
            EncodingConfig(self.L_x, self.L_d),
            self.trunk_depth,
            self.trunk_width,
            self.color_width,
            self.seed,
            self.bounds,
        )


@dataclass(eq=False)
class TrainResult:
    params: FieldParameters
    losses: List[float]


def _ray_table(dataset):
    origins, dirs, colors = [], [], []
    for i, (image, K, pose) in enumerate(dataset):
        if (image.width, image.height) != (K.width, K.height):
            raise DimensionMismatch(
                f"view {i}: image is {image.width}x{image.height}, "
                f"intrinsics are {K.width}x{K.height}"
            )
        o, d = generate_rays(K, pose)
        origins.append(o)
        dirs.append(d)
        colors.append(image.flat())
    return np.concatenate(origins), np.concatenate(dirs), np.concatenate(colors)


def train(dataset, cfg=None, init=None):
    """
    Arguments
    ---------
    dataset : list of (ImageBuffer, CameraIntrinsics, RigidTransform)
        Posed views; poses are camera-to-world.
    cfg : TrainConfig
    init : FieldParameters, optional
        Starting weights. Defaults to `cfg.initial_field()`.

    Returns
    -------
    TrainResult
        Final parameters and the loss of every step.
    """
    cfg = cfg or TrainConfig()
    if len(dataset) < 2:
        raise InsufficientViews(f"need at least 2 views, got {len(dataset)}")
    threads = config.resolve_threads(cfg.threads)
    origins, dirs, colors = _ray_table(dataset)
    params = (init or cfg.initial_field()).copy()
    arrays = params.arrays()
    optimizer = Adam(cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.epsilon)
    rng = np.random.default_rng(cfg.seed)

    LOGGER.info(
        "training on %d rays from %d views for %d steps", len(origins), len(dataset), cfg.steps
    )
    losses = []
    for step in range(1, cfg.steps + 1):
        idx = rng.integers(0, len(origins), size=cfg.batch_size)
        loss, grad = batch_gradient(
            params.with_arrays(arrays),
            origins[idx],
            dirs[idx],
            colors[idx],
            cfg.render,
            rng=rng,
            threads=threads,
            deterministic=cfg.deterministic,
            dtype=np.dtype(cfg.dtype),
            chunk_size=cfg.chunk_size,
        )
        optimizer.step(arrays, grad.arrays())
        losses.append(loss)
        if step % cfg.log_every == 0 or step == cfg.steps:
            LOGGER.info("step %d/%d loss %.6f", step, cfg.steps, loss)

    return TrainResult(params.with_arrays(arrays), losses)


def load_dataset(manifest_path):
    """
    Read a dataset manifest:
    {"intrinsics": <file>, "frames": [{"image": <ppm>, "transform_cam_to_world": [16]}]}.
    Relative paths resolve against the manifest's directory.
    """
    manifest_path = Path(manifest_path)
    data = read_json(manifest_path)
    if not isinstance(data, dict) or "intrinsics" not in data or "frames" not in data:
        raise FormatError(f"{manifest_path}: manifest needs 'intrinsics' and 'frames'")
    root = manifest_path.parent
    K = load_intrinsics(root / data["intrinsics"])
    views = []
    for i, frame in enumerate(data["frames"]):
        if not isinstance(frame, dict) or not {"image", "transform_cam_to_world"} <= set(frame):
            raise FormatError(f"{manifest_path}: frame {i} needs image and transform_cam_to_world")
        views.append(
            (read_ppm(root / frame["image"]), K, parse_transform(frame["transform_cam_to_world"]))
        )
    return views
