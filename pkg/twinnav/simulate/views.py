"""
Synthetic capture: renders, landmark observations, tracked fiducials and marker
poses for a trajectory of head poses in front of a fixed camera.
"""

import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Tuple

import numpy as np
from scipy.spatial.transform import Rotation

from twinnav import config
from twinnav.exceptions import BadConfig, LandmarkBehindCamera, PointBehindCamera
from twinnav.geometry import (
    EulerAngles,
    RigidTransform,
    euler_to_rotation,
    invert,
    project_points,
    transform_point,
)
from twinnav.image import ImageBuffer, write_ppm
from twinnav.io import save_correspondences, save_intrinsics, transform_to_list, write_json
from twinnav.pnp import Correspondence
from twinnav.radiance.render import render_image
from twinnav.registration import FiducialSet

LOGGER = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrajectorySpec:
    """Head poses relative to the camera: Euler angles (deg) and translation (mm)."""

    frames: Tuple[Tuple[EulerAngles, Tuple[float, float, float]], ...]

    def __post_init__(self):
        if not self.frames:
            raise BadConfig("trajectory must contain at least one frame")

    @classmethod
    def yaw_sweep(cls, start=-40.0, stop=40.0, step=5.0, translation=None):
        if step <= 0 or stop < start:
            raise BadConfig("yaw sweep needs step > 0 and stop >= start")
        translation = tuple(translation or (0.0, 0.0, config.HEAD_DISTANCE_MM))
        count = int(math.floor((stop - start) / step + 1e-9)) + 1
        return cls(
            tuple((EulerAngles(start + i * step, 0.0, 0.0), translation) for i in range(count))
        )

    @classmethod
    def orbit(cls, views, pitch=15.0, distance=config.HEAD_DISTANCE_MM):
        """
        Head turned through a full revolution, alternating pitch up and down, so
        the fixed camera sees it from all round.
        """
        if views < 1:
            raise BadConfig("orbit needs at least one view")
        translation = (0.0, 0.0, float(distance))
        frames = []
        for i in range(views):
            yaw = -180.0 + 360.0 * (i + 0.5) / views
            frames.append((EulerAngles(yaw, pitch if i % 2 else -pitch, 0.0), translation))
        return cls(tuple(frames))

    @classmethod
    def from_dict(cls, data):
        config.check_keys(data, ("yaw_sweep", "orbit", "frames", "translation"), "trajectory")
        translation = data.get("translation")
        if "yaw_sweep" in data:
            config.check_keys(data["yaw_sweep"], ("start", "stop", "step"), "yaw_sweep")
            return cls.yaw_sweep(translation=translation, **data["yaw_sweep"])
        if "orbit" in data:
            config.check_keys(data["orbit"], ("views", "pitch"), "orbit")
            distance = translation[2] if translation else config.HEAD_DISTANCE_MM
            return cls.orbit(distance=distance, **data["orbit"])
        frames = []
        for i, frame in enumerate(data.get("frames", [])):
            config.check_keys(frame, ("yaw", "pitch", "roll", "translation"), f"frame {i}")
            t = frame.get("translation", translation or (0.0, 0.0, config.HEAD_DISTANCE_MM))
            angles = EulerAngles(
                frame.get("yaw", 0.0), frame.get("pitch", 0.0), frame.get("roll", 0.0)
            )
            frames.append((angles, tuple(float(x) for x in t)))
        return cls(tuple(frames))

    def to_dict(self):
        return {
            "frames": [
                {"yaw": e.yaw, "pitch": e.pitch, "roll": e.roll, "translation": list(t)}
                for e, t in self.frames
            ]
        }


@dataclass(frozen=True)
class NoiseSpec:
    pixel_sigma: float = 0.0
    landmark_sigma_mm: float = 0.0
    marker_rot_sigma: float = 0.0
    marker_trans_sigma: float = 0.0
    seed: int = 0

    def __post_init__(self):
        for name in ("pixel_sigma", "landmark_sigma_mm", "marker_rot_sigma", "marker_trans_sigma"):
            value = getattr(self, name)
            if not math.isfinite(value) or value < 0:
                raise BadConfig(f"{name} must be >= 0")

    @classmethod
    def from_dict(cls, data):
        config.check_keys(data, cls.__dataclass_fields__, "noise")
        return cls(**data)

    def to_dict(self):
        return {name: getattr(self, name) for name in self.__dataclass_fields__}


def head_pose(angles, translation):
    """Head-to-camera transform for a head turned by `angles`."""
    return RigidTransform(euler_to_rotation(angles).T, np.asarray(translation, np.float64))


@dataclass(eq=False)
class SimulatedFrame:
    index: int
    angles: EulerAngles
    pose: RigidTransform
    correspondences: List[Correspondence]
    true_pixels: np.ndarray
    in_view: bool
    tracked: FiducialSet
    marker_pose: RigidTransform
    image: Optional[ImageBuffer] = None

    @property
    def cam_to_world(self):
        return invert(self.pose)


@dataclass(eq=False)
class SimulatedDataset:
    scene: object
    K: object
    frames: List[SimulatedFrame]
    noise: NoiseSpec
    render_K: Optional[object] = None
    target: str = config.TOOL_TARGET
    tip_offset: Tuple[float, float, float] = config.TOOL_TIP_OFFSET_MM


def marker_pose_for(target_cam, tip_offset, rng, noise):
    """
    Marker pose whose tool tip touches `target_cam`, with the tool pointing along
    the camera axis, perturbed by the marker noise.
    """
    rot = Rotation.from_rotvec(rng.normal(0.0, math.radians(noise.marker_rot_sigma), 3))
    trans = rng.normal(0.0, noise.marker_trans_sigma, 3)
    base = target_cam - np.asarray(tip_offset)
    return RigidTransform(rot.as_matrix(), base + trans)


def simulate_frame(scene, K, index, angles, translation, noise, target, tip_offset):
    pose = head_pose(angles, translation)
    names = scene.landmarks.names
    world = scene.landmarks.array
    try:
        true_px = project_points(K, pose, world)
    except PointBehindCamera as exc:
        raise LandmarkBehindCamera(
            f"frame {index}: landmark {names[exc.index]!r} is behind the camera", index=exc.index
        ) from None

    rng = np.random.default_rng(noise.seed + index)
    observed = true_px + rng.normal(0.0, noise.pixel_sigma, true_px.shape)
    corr = [Correspondence(p, uv, n) for n, p, uv in zip(names, world, observed)]
    in_view = bool(
        np.all((true_px[:, 0] >= 0) & (true_px[:, 0] < K.width))
        and np.all((true_px[:, 1] >= 0) & (true_px[:, 1] < K.height))
    )

    cam_points = transform_point(pose, world)
    noisy = cam_points + rng.normal(0.0, noise.landmark_sigma_mm, cam_points.shape)
    tracked = FiducialSet(list(zip(names, noisy)), "tracking")
    marker = marker_pose_for(transform_point(pose, scene.landmarks[target]), tip_offset, rng, noise)
    return SimulatedFrame(index, angles, pose, corr, true_px, in_view, tracked, marker)


def generate_views(
    scene,
    K,
    trajectory,
    noise=None,
    render_cfg=None,
    render_K=None,
    target=config.TOOL_TARGET,
    tip_offset=config.TOOL_TIP_OFFSET_MM,
    threads=None,
    out_dir=None,
):
    """
    Simulate every trajectory frame. Noise for frame i draws from
    `default_rng(noise.seed + i)`; images are rendered from the analytic scene
    when `render_cfg` is given, at `render_K` (defaults to `K`). With `out_dir`
    the dataset is also written there (see `write_dataset`).
    """
    noise = noise or NoiseSpec()
    render_K = render_K or K
    frames = []
    for i, (angles, translation) in enumerate(trajectory.frames):
        frame = simulate_frame(scene, K, i, angles, translation, noise, target, tip_offset)
        if render_cfg is not None:
            frame.image = render_image(scene, render_K, frame.cam_to_world, render_cfg, threads)
        LOGGER.debug("frame %d: yaw %.1f pitch %.1f roll %.1f", i, *angles.as_tuple())
        frames.append(frame)
    dataset = SimulatedDataset(scene, K, frames, noise, render_K, target, tuple(tip_offset))
    if out_dir is not None:
        write_dataset(dataset, out_dir)
    return dataset


def write_dataset(dataset, out_dir):
    """
    Write the radiance manifest with PPM views and one correspondence file per
    frame under `out_dir`.
    """
    out_dir = Path(out_dir)
    save_intrinsics(out_dir / "intrinsics.json", dataset.render_K)
    save_intrinsics(out_dir / "camera.json", dataset.K)
    manifest = {"intrinsics": "intrinsics.json", "frames": []}
    for frame in dataset.frames:
        name = f"{frame.index:04d}"
        save_correspondences(out_dir / "correspondences" / f"{name}.json", frame.correspondences)
        if frame.image is not None:
            write_ppm(frame.image, out_dir / "images" / f"{name}.ppm")
            manifest["frames"].append(
                {
                    "image": f"images/{name}.ppm",
                    "transform_cam_to_world": transform_to_list(frame.cam_to_world),
                }
            )
    write_json(out_dir / "manifest.json", manifest)
    return out_dir / "manifest.json"


def radiance_views(dataset):
    """(image, intrinsics, camera-to-world) triples for training or evaluation."""
    return [
        (f.image, dataset.render_K, f.cam_to_world)
        for f in dataset.frames
        if f.image is not None
    ]
