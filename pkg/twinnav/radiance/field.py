"""
Radiance field: positional encoding and the MLP F_theta(gamma(x), gamma(d)) -> (c, sigma).

Layer weights are stored as (out, in) matrices so that a layer maps a row batch
`h` to `h @ W.T + b`. Layers are declared trunk -> density head -> color head.
"""

import math
from dataclasses import dataclass
from typing import List, Tuple

import numpy as np
from scipy.special import expit

from twinnav import config
from twinnav.exceptions import DimensionMismatch

Layer = Tuple[np.ndarray, np.ndarray]


def _as_layer(wb):
    return np.asarray(wb[0], np.float64), np.asarray(wb[1], np.float64)


@dataclass(frozen=True)
class EncodingConfig:
    L_x: int = config.L_X
    L_d: int = config.L_D

    def __post_init__(self):
        for name in ("L_x", "L_d"):
            value = getattr(self, name)
            if int(value) != value or value < 0:
                raise ValueError(f"{name} must be a non-negative integer, got {value}")

    @property
    def position_dim(self):
        return 3 + 6 * self.L_x

    @property
    def direction_dim(self):
        return 3 + 6 * self.L_d


@dataclass(frozen=True)
class RadianceSample:
    color: Tuple[float, float, float]
    density: float


def positional_encode(v, L):
    """
    Lift coordinates to [v, sin(2^0 pi v), cos(2^0 pi v), ..., cos(2^(L-1) pi v)].

    Works on a single vector (3,) or a batch (N, 3); output length is 3 + 6L.
    """
    v = np.asarray(v, dtype=np.float64)
    parts = [v]
    for k in range(L):
        arg = (2.0 ** k) * math.pi * v
        parts.append(np.sin(arg))
        parts.append(np.cos(arg))
    return np.concatenate(parts, axis=-1)


def softplus(x):
    return np.logaddexp(0.0, x)


def _check_layer(layer, n_in, where):
    W, b = layer
    if W.ndim != 2 or b.shape != (W.shape[0],):
        raise DimensionMismatch(f"{where}: weight {W.shape} and bias {b.shape} do not match")
    if W.shape[1] != n_in:
        raise DimensionMismatch(f"{where}: expects {W.shape[1]} inputs, receives {n_in}")
    if not (np.all(np.isfinite(W)) and np.all(np.isfinite(b))):
        raise ValueError(f"{where}: parameters must be finite")
    return W.shape[0]


@dataclass(eq=False)
class FieldParameters:
    """
    MLP weights and the encoding they were trained with.

    `bounds` is the scene box (mm) mapped onto [-1, 1]^3 before encoding.
    """

    encoding: EncodingConfig
    trunk: List[Layer]
    density: Layer
    color: List[Layer]
    bounds: Tuple[Tuple[float, float, float], Tuple[float, float, float]] = (
        config.SCENE_BOUNDS_MM
    )

    def __post_init__(self):
        self.trunk = [_as_layer(wb) for wb in self.trunk]
        self.density = _as_layer(self.density)
        self.color = [_as_layer(wb) for wb in self.color]
        lo, hi = (tuple(float(x) for x in corner) for corner in self.bounds)
        if len(lo) != 3 or len(hi) != 3 or not all(a < b for a, b in zip(lo, hi)):
            raise ValueError("bounds must be (lo, hi) corners with lo < hi per axis")
        self.bounds = (lo, hi)

        if not self.trunk or not self.color:
            raise DimensionMismatch("trunk and color head need at least one layer each")
        n = self.encoding.position_dim
        for i, layer in enumerate(self.trunk):
            n = _check_layer(layer, n, f"trunk layer {i}")
        if _check_layer(self.density, n, "density head") != 1:
            raise DimensionMismatch("density head must output a single value")
        m = n + self.encoding.direction_dim
        for i, layer in enumerate(self.color):
            m = _check_layer(layer, m, f"color layer {i}")
        if m != 3:
            raise DimensionMismatch(f"color head must output 3 values, outputs {m}")

    @property
    def layers(self):
        return self.trunk + [self.density] + self.color

    def arrays(self):
        """Weights and biases in declaration order: W0, b0, W1, b1, ..."""
        return [a for layer in self.layers for a in layer]

    def with_arrays(self, arrays):
        arrays = list(arrays)
        pairs = [(arrays[i], arrays[i + 1]) for i in range(0, len(arrays), 2)]
        n_trunk = len(self.trunk)
        return FieldParameters(
            self.encoding, pairs[:n_trunk], pairs[n_trunk], pairs[n_trunk + 1 :], self.bounds
        )

    def flat(self):
        return np.concatenate([a.ravel() for a in self.arrays()])

    def with_flat(self, vector):
        out, offset = [], 0
        for a in self.arrays():
            out.append(np.asarray(vector[offset : offset + a.size]).reshape(a.shape))
            offset += a.size
        return self.with_arrays(out)

    def zeros_like(self):
        return self.with_arrays([np.zeros_like(a) for a in self.arrays()])

    def copy(self):
        return self.with_arrays([a.copy() for a in self.arrays()])

    def normalize(self, points_mm):
        lo = np.asarray(self.bounds[0])
        hi = np.asarray(self.bounds[1])
        return 2.0 * (np.asarray(points_mm, np.float64) - lo) / (hi - lo) - 1.0

    def query(self, points_mm, dirs):
        """Batched (color (M, 3), density (M,)) at world points; zero density outside bounds."""
        rgb, sigma, _ = forward(self, points_mm, dirs)
        return rgb, sigma


def init_field(
    encoding=None,
    trunk_depth=config.TRUNK_DEPTH,
    trunk_width=config.TRUNK_WIDTH,
    color_width=config.COLOR_WIDTH,
    seed=0,
    bounds=config.SCENE_BOUNDS_MM,
):
    """
    Fresh parameters: weights uniform in +-sqrt(6 / (fan_in + fan_out)), zero biases.

    Weights are drawn in declaration order from `default_rng(seed)`.
    """
    encoding = encoding or EncodingConfig()
    rng = np.random.default_rng(seed)

    def layer(n_in, n_out):
        limit = math.sqrt(6.0 / (n_in + n_out))
        return rng.uniform(-limit, limit, size=(n_out, n_in)), np.zeros(n_out)

    trunk, n = [], encoding.position_dim
    for _ in range(trunk_depth):
        trunk.append(layer(n, trunk_width))
        n = trunk_width
    density = layer(n, 1)
    color = [layer(n + encoding.direction_dim, color_width), layer(color_width, 3)]
    return FieldParameters(encoding, trunk, density, color, bounds)


def _linear(h, layer, dtype):
    W, b = layer
    return h @ W.T.astype(dtype, copy=False) + b.astype(dtype, copy=False)


def forward_normalized(params, x, d, dtype=np.float64):
    """
    Forward pass on normalised positions `x` (M, 3) and unit directions `d` (M, 3).

    Returns (rgb, sigma, cache); the cache holds the (layer input, pre-activation)
    pairs needed by the backward pass. Layers run in `dtype`; training uses
    float32, everything else float64.
    """
    x_enc = positional_encode(x, params.encoding.L_x).astype(dtype, copy=False)
    d_enc = positional_encode(d, params.encoding.L_d).astype(dtype, copy=False)

    trunk_cache = []
    h = x_enc
    for layer in params.trunk:
        a = _linear(h, layer, dtype)
        trunk_cache.append((h, a))
        h = np.maximum(a, 0.0)

    raw_sigma = _linear(h, params.density, dtype)[:, 0]
    sigma = softplus(raw_sigma)

    color_cache = []
    z = np.concatenate([h, d_enc], axis=1)
    for i, layer in enumerate(params.color):
        a = _linear(z, layer, dtype)
        color_cache.append((z, a))
        z = expit(a) if i == len(params.color) - 1 else np.maximum(a, 0.0)
    rgb = z

    cache = {
        "trunk": trunk_cache,
        "feature": h,
        "raw_sigma": raw_sigma,
        "color": color_cache,
    }
    return rgb, sigma, cache


def forward(params, points_mm, dirs, dtype=np.float64):
    points_mm = np.atleast_2d(np.asarray(points_mm, np.float64))
    dirs = np.atleast_2d(np.asarray(dirs, np.float64))
    x = params.normalize(points_mm)
    rgb, sigma, cache = forward_normalized(params, x, dirs, dtype)
    inside = np.all(np.abs(x) <= 1.0, axis=1)
    cache["inside"] = inside
    return rgb, np.where(inside, sigma, 0.0), cache


def field_eval(params, x, d):
    """Evaluate the field at one normalised position `x` with view direction `d`."""
    x = np.asarray(x, np.float64)
    d = np.asarray(d, np.float64)
    if x.shape != (3,) or d.shape != (3,):
        raise DimensionMismatch("field_eval expects 3-vectors for position and direction")
    rgb, sigma, _ = forward_normalized(params, x[None, :], d[None, :])
    return RadianceSample(tuple(float(c) for c in rgb[0]), float(sigma[0]))
