"""
Analytic head scene: an ellipsoid skull with a nose, smooth occupancy density,
position-based colour and named facial landmarks on the surface.

Head frame: origin at the skull centre, +x towards the subject's left, +y down,
the face looking along -z.
"""

from dataclasses import dataclass, field, fields
from typing import Dict, Tuple

import numpy as np

from twinnav import config
from twinnav.exceptions import BadConfig
from twinnav.registration import FiducialSet

HEAD_AXES_MM = (75.0, 95.0, 110.0)
NOSE_CENTER_MM = (0.0, 10.0, -100.0)
NOSE_AXES_MM = (12.0, 25.0, 30.0)
SHELL_MM = 4.0
PEAK_DENSITY = 10.0

# (x, y) on the front of the face; z is solved onto the surface
LANDMARKS_XY = {
    "nose_tip": (0.0, 10.0),
    "left_eye_left_corner": (45.0, -20.0),
    "left_eye_right_corner": (15.0, -20.0),
    "right_eye_left_corner": (-15.0, -20.0),
    "right_eye_right_corner": (-45.0, -20.0),
    "mouth_left": (25.0, 45.0),
    "mouth_right": (-25.0, 45.0),
    "chin": (0.0, 80.0),
}


def smoothstep(edge0, edge1, x):
    t = np.clip((x - edge0) / (edge1 - edge0), 0.0, 1.0)
    return t * t * (3.0 - 2.0 * t)


def ellipsoid_distance(points, center, axes):
    """Approximate signed distance to an ellipsoid, negative inside."""
    p = np.atleast_2d(points) - np.asarray(center)
    axes = np.asarray(axes)
    k0 = np.linalg.norm(p / axes, axis=1)
    k1 = np.linalg.norm(p / axes ** 2, axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        d = k0 * (k0 - 1.0) / k1
    return np.where(k1 > 0, d, -axes.min())


def _front_z(xy, center, axes):
    u = (xy[0] - center[0]) / axes[0]
    v = (xy[1] - center[1]) / axes[1]
    r = 1.0 - u * u - v * v
    if r < 0:
        return None
    return center[2] - axes[2] * np.sqrt(r)


@dataclass(frozen=True)
class SceneConfig:
    head_axes_mm: Tuple[float, float, float] = HEAD_AXES_MM
    nose_center_mm: Tuple[float, float, float] = NOSE_CENTER_MM
    nose_axes_mm: Tuple[float, float, float] = NOSE_AXES_MM
    shell_mm: float = SHELL_MM
    peak_density: float = PEAK_DENSITY
    landmarks_xy: Dict[str, Tuple[float, float]] = field(
        default_factory=lambda: dict(LANDMARKS_XY)
    )
    model_scale: float = 1.0

    @classmethod
    def from_dict(cls, data):
        config.check_keys(data, [f.name for f in fields(cls)], "scene")
        data = dict(data)
        for key in ("head_axes_mm", "nose_center_mm", "nose_axes_mm"):
            if key in data:
                data[key] = tuple(float(x) for x in data[key])
        if "landmarks_xy" in data:
            data["landmarks_xy"] = {k: tuple(v) for k, v in data["landmarks_xy"].items()}
        return cls(**data)

    def to_dict(self):
        return {
            "head_axes_mm": list(self.head_axes_mm),
            "nose_center_mm": list(self.nose_center_mm),
            "nose_axes_mm": list(self.nose_axes_mm),
            "shell_mm": self.shell_mm,
            "peak_density": self.peak_density,
            "landmarks_xy": {k: list(v) for k, v in self.landmarks_xy.items()},
            "model_scale": self.model_scale,
        }


@dataclass(eq=False)
class SyntheticHeadScene:
    config: SceneConfig
    landmarks: FiducialSet

    def surface_function(self, points):
        head = ellipsoid_distance(points, (0.0, 0.0, 0.0), self.config.head_axes_mm)
        nose = ellipsoid_distance(points, self.config.nose_center_mm, self.config.nose_axes_mm)
        return np.minimum(head, nose)

    def density(self, points):
        half = self.config.shell_mm / 2.0
        f = self.surface_function(points)
        return self.config.peak_density * (1.0 - smoothstep(-half, half, f))

    def color(self, points):
        p = np.atleast_2d(points)
        rgb = np.stack(
            [
                np.sin(p[:, 0] / 25.0),
                np.sin(p[:, 1] / 30.0 + 1.0),
                np.cos(p[:, 2] / 35.0),
            ],
            axis=1,
        )
        return 0.5 + 0.35 * rgb

    def query(self, points, dirs):
        return self.color(points), self.density(points)

    def model_landmarks(self):
        """Landmarks in the model frame, which differs from the head frame by `model_scale`."""
        return FiducialSet(self.landmarks.scaled(self.config.model_scale).points, "model")


def build_head_scene(cfg=None):
    cfg = cfg or SceneConfig()
    for name in ("head_axes_mm", "nose_axes_mm"):
        axes = getattr(cfg, name)
        if len(axes) != 3 or min(axes) <= 0:
            raise BadConfig(f"{name} must be three positive lengths")
    if len(cfg.nose_center_mm) != 3:
        raise BadConfig("nose_center_mm must have 3 components")
    if cfg.shell_mm <= 0:
        raise BadConfig("shell_mm must be > 0")
    if cfg.peak_density <= 0:
        raise BadConfig("peak_density must be > 0")
    if cfg.model_scale <= 0:
        raise BadConfig("model_scale must be > 0")
    if len(cfg.landmarks_xy) < 3:
        raise BadConfig("need at least 3 landmarks")

    points = []
    for name, xy in cfg.landmarks_xy.items():
        candidates = [
            z
            for z in (
                _front_z(xy, (0.0, 0.0, 0.0), cfg.head_axes_mm),
                _front_z(xy, cfg.nose_center_mm, cfg.nose_axes_mm),
            )
            if z is not None
        ]
        if not candidates:
            raise BadConfig(f"landmark {name!r} at {xy} misses the head surface")
        points.append((name, np.array([xy[0], xy[1], min(candidates)])))
    return SyntheticHeadScene(cfg, FiducialSet(points, "head"))
