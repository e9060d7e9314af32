"""
Pinhole camera model, rigid transforms, ray generation and Euler angles.

Conventions
-----------
* Camera frame: +z forward into the scene, +x right, +y down (matches pixel axes).
* Lengths are millimetres, pixel coordinates are continuous.
* Euler angles cross the API in degrees: R = Rz(roll) . Ry(yaw) . Rx(pitch).
* No lens distortion; the projective scale factor is eliminated by the
  perspective division and never stored.
"""

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from twinnav.exceptions import BadConfig, FormatError, NotARotation, PointBehindCamera

RIGID_TOL = 1e-9
ROTATION_CHECK_TOL = 1e-6
MIN_DEPTH_MM = 1e-6
GIMBAL_TOL = 1e-10


class Pixel(NamedTuple):
    u: float
    v: float


def as_point(p, name="point"):
    arr = np.asarray(p, dtype=np.float64)
    if arr.shape[-1:] != (3,):
        raise ValueError(f"{name} must have 3 components, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} must be finite")
    return arr


def _frozen(arr):
    arr = np.array(arr, dtype=np.float64)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class RigidTransform:
    """SE(3) pose: orthonormal rotation (det +1) and translation in mm."""

    rotation: np.ndarray
    translation: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        rotation = np.asarray(self.rotation, dtype=np.float64)
        translation = as_point(self.translation, "translation")
        if rotation.shape != (3, 3):
            raise ValueError(f"rotation must be 3x3, got shape {rotation.shape}")
        if not np.all(np.isfinite(rotation)):
            raise ValueError("rotation must be finite")
        if np.max(np.abs(rotation.T @ rotation - np.eye(3))) > RIGID_TOL:
            raise NotARotation("rotation is not orthonormal")
        if abs(np.linalg.det(rotation) - 1.0) > RIGID_TOL:
            raise NotARotation("rotation determinant is not +1")
        object.__setattr__(self, "rotation", _frozen(rotation))
        object.__setattr__(self, "translation", _frozen(translation))

    @classmethod
    def identity(cls):
        return cls(np.eye(3), np.zeros(3))

    @classmethod
    def from_matrix(cls, matrix):
        m = np.asarray(matrix, dtype=np.float64)
        if m.size != 16:
            raise FormatError(f"transform needs 16 numbers, got {m.size}")
        m = m.reshape(4, 4)
        if not np.array_equal(m[3], [0.0, 0.0, 0.0, 1.0]):
            raise FormatError("transform bottom row must be exactly [0, 0, 0, 1]")
        return cls(m[:3, :3], m[:3, 3])

    @property
    def matrix(self):
        m = np.eye(4)
        m[:3, :3] = self.rotation
        m[:3, 3] = self.translation
        return m

    def __repr__(self):
        return (
            f"RigidTransform(rotation={self.rotation.tolist()}, "
            f"translation={self.translation.tolist()})"
        )


@dataclass(frozen=True)
class CameraIntrinsics:
    fx: float
    fy: float
    cx: float
    cy: float
    width: int
    height: int

    def __post_init__(self):
        for name in ("fx", "fy", "cx", "cy"):
            if not math.isfinite(getattr(self, name)):
                raise BadConfig(f"{name} must be finite")
        if int(self.width) != self.width or int(self.height) != self.height:
            raise BadConfig("width and height must be integers")
        if self.width <= 0 or self.height <= 0:
            raise BadConfig("width and height must be positive")
        if self.fx <= 0:
            raise BadConfig("fx must be > 0")
        if self.fy <= 0:
            raise BadConfig("fy must be > 0")
        if not 0 <= self.cx < self.width:
            raise BadConfig("cx must lie in [0, width)")
        if not 0 <= self.cy < self.height:
            raise BadConfig("cy must lie in [0, height)")

    @classmethod
    def from_dict(cls, data):
        try:
            return cls(
                float(data["fx"]),
                float(data["fy"]),
                float(data["cx"]),
                float(data["cy"]),
                int(data["width"]),
                int(data["height"]),
            )
        except KeyError as exc:
            raise BadConfig(f"intrinsics missing field {exc.args[0]!r}") from None

    def to_dict(self):
        return {
            "fx": self.fx,
            "fy": self.fy,
            "cx": self.cx,
            "cy": self.cy,
            "width": self.width,
            "height": self.height,
        }

    @property
    def matrix(self):
        return np.array([[self.fx, 0.0, self.cx], [0.0, self.fy, self.cy], [0.0, 0.0, 1.0]])

    def scaled(self, width, height):
        """Same field of view at another resolution."""
        sx = width / self.width
        sy = height / self.height
        return CameraIntrinsics(
            self.fx * sx, self.fy * sy, self.cx * sx, self.cy * sy, int(width), int(height)
        )


@dataclass(frozen=True)
class EulerAngles:
    """Head orientation in degrees (yaw about vertical, pitch lateral, roll frontal)."""

    yaw: float
    pitch: float
    roll: float

    def __post_init__(self):
        for name in ("yaw", "pitch", "roll"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")

    def as_tuple(self):
        return (self.yaw, self.pitch, self.roll)


@dataclass(frozen=True, eq=False)
class Ray:
    origin: np.ndarray
    direction: np.ndarray

    def __post_init__(self):
        origin = as_point(self.origin, "origin")
        direction = as_point(self.direction, "direction")
        if abs(np.linalg.norm(direction) - 1.0) > RIGID_TOL:
            raise ValueError("ray direction must be unit-norm")
        object.__setattr__(self, "origin", _frozen(origin))
        object.__setattr__(self, "direction", _frozen(direction))

    def at(self, t):
        return self.origin + t * self.direction


def transform_point(T, p):
    """R.p + t for one point (3,) or a batch (N, 3)."""
    return as_point(p) @ T.rotation.T + T.translation


def compose(T1, T2):
    """Transform applying `T2` first, then `T1`."""
    return RigidTransform(T1.rotation @ T2.rotation, T1.rotation @ T2.translation + T1.translation)


def invert(T):
    rt = T.rotation.T
    return RigidTransform(rt, -rt @ T.translation)


def project_points(K, T_world_to_cam, points):
    """
    Project a batch of world points (N, 3) to pixels (N, 2).

    Raises `PointBehindCamera` for the first point whose camera depth is not
    above 1e-6 mm.
    """
    cam = transform_point(T_world_to_cam, np.atleast_2d(points))
    z = cam[:, 2]
    behind = np.flatnonzero(z <= MIN_DEPTH_MM)
    if behind.size:
        i = int(behind[0])
        raise PointBehindCamera(f"point {i} has camera depth {z[i]:.6g} mm", index=i)
    u = K.fx * cam[:, 0] / z + K.cx
    v = K.fy * cam[:, 1] / z + K.cy
    return np.stack([u, v], axis=1)


def project(K, T_world_to_cam, p_world):
    uv = project_points(K, T_world_to_cam, as_point(p_world)[None, :])[0]
    return Pixel(float(uv[0]), float(uv[1]))


def _directions(K, u, v):
    d = np.stack([(u - K.cx) / K.fx, (v - K.cy) / K.fy, np.ones_like(u)], axis=-1)
    return d


def generate_ray(K, T_cam_to_world, px):
    u, v = float(px[0]), float(px[1])
    d_cam = _directions(K, np.array([u]), np.array([v]))[0]
    d = T_cam_to_world.rotation @ d_cam
    return Ray(T_cam_to_world.translation, d / np.linalg.norm(d))


def generate_rays(K, T_cam_to_world):
    """Rays through every pixel centre (u + 0.5, v + 0.5), row-major."""
    v, u = np.meshgrid(
        np.arange(K.height, dtype=np.float64) + 0.5,
        np.arange(K.width, dtype=np.float64) + 0.5,
        indexing="ij",
    )
    d = _directions(K, u.ravel(), v.ravel()) @ T_cam_to_world.rotation.T
    d /= np.linalg.norm(d, axis=1, keepdims=True)
    origins = np.broadcast_to(T_cam_to_world.translation, d.shape).copy()
    return origins, d


def rot_x(a):
    c, s = math.cos(a), math.sin(a)
    return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])


def rot_y(a):
    c, s = math.cos(a), math.sin(a)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


def rot_z(a):
    c, s = math.cos(a), math.sin(a)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def euler_to_rotation(e):
    yaw, pitch, roll = (math.radians(a) for a in e.as_tuple())
    return rot_z(roll) @ rot_y(yaw) @ rot_x(pitch)


def wrap_degrees(a):
    """Wrap an angle to (-180, 180]."""
    return a - 360.0 * math.ceil((a - 180.0) / 360.0)


def rotation_to_euler(R):
    """
    Decompose R = Rz(roll) . Ry(yaw) . Rx(pitch).

    Away from gimbal lock the result is canonical: yaw in (-180, 180],
    pitch in [-90, 90], roll in (-180, 180]. At |yaw| = 90 deg roll is set to
    0 and the free angle is absorbed into pitch.
    """
    R = np.asarray(R, dtype=np.float64)
    if R.shape != (3, 3) or not np.all(np.isfinite(R)):
        raise NotARotation("expected a finite 3x3 matrix")
    if np.max(np.abs(R.T @ R - np.eye(3))) > ROTATION_CHECK_TOL:
        raise NotARotation("matrix is not orthonormal")
    if abs(np.linalg.det(R) - 1.0) > ROTATION_CHECK_TOL:
        raise NotARotation("matrix determinant is not +1")

    cos_yaw = math.hypot(R[0, 0], R[1, 0])
    if cos_yaw < GIMBAL_TOL:
        if R[2, 0] < 0:
            yaw = 90.0
            pitch = math.degrees(math.atan2(R[0, 1], R[1, 1]))
        else:
            yaw = -90.0
            pitch = math.degrees(math.atan2(-R[0, 1], R[1, 1]))
        return EulerAngles(yaw, wrap_degrees(pitch), 0.0)

    yaw = math.degrees(math.atan2(-R[2, 0], cos_yaw))
    pitch = math.degrees(math.atan2(R[2, 1], R[2, 2]))
    roll = math.degrees(math.atan2(R[1, 0], R[0, 0]))
    if abs(pitch) > 90.0:
        # (pitch, yaw, roll) ~ (pitch - 180, 180 - yaw, roll + 180)
        pitch -= math.copysign(180.0, pitch)
        yaw = 180.0 - yaw if yaw >= 0 else -180.0 - yaw
        roll += 180.0
    return EulerAngles(wrap_degrees(yaw), pitch, wrap_degrees(roll))
