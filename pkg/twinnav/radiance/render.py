"""
Volume rendering of a radiance field along camera rays.

Any object with a batched `query(points_mm, dirs) -> (rgb (M, 3), sigma (M,))`
can be rendered: a trained `FieldParameters` or an analytic scene.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from twinnav import config
from twinnav.geometry import generate_rays
from twinnav.image import ImageBuffer

LOGGER = logging.getLogger(__name__)

CONVEXITY_TOL = 1e-9


@dataclass(frozen=True)
class RenderConfig:
    near: float = config.NEAR_MM
    far: float = config.FAR_MM
    samples: int = config.RENDER_SAMPLES
    stratified: bool = False
    background_color: Tuple[float, float, float] = config.BACKGROUND
    seed: int = 0

    def __post_init__(self):
        if not 0 < self.near < self.far:
            raise ValueError(f"need 0 < near < far, got near={self.near} far={self.far}")
        if int(self.samples) != self.samples or self.samples < 2:
            raise ValueError(f"samples must be an integer >= 2, got {self.samples}")
        bg = tuple(float(c) for c in self.background_color)
        if len(bg) != 3 or not all(0.0 <= c <= 1.0 for c in bg):
            raise ValueError("background_color must be 3 components in [0, 1]")
        object.__setattr__(self, "background_color", bg)

    @classmethod
    def from_dict(cls, data):
        config.check_keys(data, cls.__dataclass_fields__, "render")
        return cls(**data)

    def to_dict(self):
        return {
            "near": self.near,
            "far": self.far,
            "samples": self.samples,
            "stratified": self.stratified,
            "background_color": list(self.background_color),
            "seed": self.seed,
        }


def sample_distances(cfg, n_rays, rng=None):
    """
    Sample distances (n_rays, D) on [near, far]: bin midpoints, or one uniform
    draw per bin when stratified.
    """
    edges = np.linspace(cfg.near, cfg.far, cfg.samples + 1)
    lower, upper = edges[:-1], edges[1:]
    if cfg.stratified:
        if rng is None:
            rng = np.random.default_rng(cfg.seed)
        return lower + rng.random((n_rays, cfg.samples)) * (upper - lower)
    return np.broadcast_to(0.5 * (lower + upper), (n_rays, cfg.samples)).copy()


def sample_deltas(t, far):
    delta = np.empty_like(t)
    delta[:, :-1] = np.diff(t, axis=1)
    delta[:, -1] = far - t[:, -1]
    return delta


def composite(rgb, sigma, t, cfg):
    """
    Alpha-composite per-sample colors (B, D, 3) and densities (B, D).

    Returns (color (B, 3), transmittance_out (B,), weights (B, D),
    transmittance (B, D)).
    """
    tau = sigma * sample_deltas(t, cfg.far)
    cum = np.cumsum(tau, axis=1)
    transmittance = np.exp(-(cum - tau))
    transmittance[:, 0] = 1.0
    weights = transmittance * -np.expm1(-tau)
    t_out = np.exp(-cum[:, -1])
    assert np.all(np.abs(weights.sum(axis=1) + t_out - 1.0) <= CONVEXITY_TOL)

    bg = np.asarray(cfg.background_color)
    color = np.einsum("bd,bdc->bc", weights, rgb) + t_out[:, None] * bg
    return color, t_out, weights, transmittance


def ray_samples(origins, dirs, t):
    points = origins[:, None, :] + t[..., None] * dirs[:, None, :]
    sample_dirs = np.broadcast_to(dirs[:, None, :], points.shape)
    return points.reshape(-1, 3), sample_dirs.reshape(-1, 3)


def render_rays(field, origins, dirs, cfg, rng=None):
    """Colors (B, 3) and escaped transmittance (B,) for a batch of rays."""
    origins = np.atleast_2d(np.asarray(origins, np.float64))
    dirs = np.atleast_2d(np.asarray(dirs, np.float64))
    n = len(origins)
    t = sample_distances(cfg, n, rng)
    points, sample_dirs = ray_samples(origins, dirs, t)
    rgb, sigma = field.query(points, sample_dirs)
    color, t_out, _, _ = composite(
        rgb.reshape(n, cfg.samples, 3), sigma.reshape(n, cfg.samples), t, cfg
    )
    return color, t_out


def render_ray(field, ray, cfg):
    """Color (3,) and transmittance_out of a single `Ray`."""
    color, t_out = render_rays(field, ray.origin[None, :], ray.direction[None, :], cfg)
    return color[0], float(t_out[0])


def chunk_slices(n, size=config.CHUNK_SIZE):
    return [slice(i, min(i + size, n)) for i in range(0, n, size)]


def render_image(field, K, T_cam_to_world, cfg, threads=None):
    """
    Render every pixel centre of `K`.

    Rays are split into fixed-size chunks; stratified chunks draw from
    `default_rng([seed, chunk])`, so the image does not depend on `threads`.
    """
    threads = config.resolve_threads(threads)
    origins, dirs = generate_rays(K, T_cam_to_world)
    slices = chunk_slices(len(origins))

    def work(item):
        index, sl = item
        rng = np.random.default_rng([cfg.seed, index]) if cfg.stratified else None
        return render_rays(field, origins[sl], dirs[sl], cfg, rng)[0]

    with ThreadPoolExecutor(max_workers=threads) as executor:
        colors = list(executor.map(work, enumerate(slices)))

    pixels = np.clip(np.concatenate(colors, axis=0), 0.0, 1.0)
    LOGGER.debug("rendered %dx%d image in %d chunks", K.width, K.height, len(slices))
    return ImageBuffer(K.width, K.height, pixels)
