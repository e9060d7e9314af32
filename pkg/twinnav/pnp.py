"""
Head pose from 2D-3D landmark correspondences.

The pose is parameterised by an axis-angle vector and a translation and refined
with a Marquardt-scaled Levenberg-Marquardt loop on the reprojection residuals.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import List, Tuple

import numpy as np
from scipy.spatial.transform import Rotation

from twinnav import config
from twinnav.exceptions import (
    DegenerateConfiguration,
    Diverged,
    InsufficientPoints,
    PointBehindCamera,
)
from twinnav.geometry import (
    MIN_DEPTH_MM,
    RigidTransform,
    as_point,
    project,
    rotation_to_euler,
)

LOGGER = logging.getLogger(__name__)

SMALL_ANGLE = 1e-12


@dataclass(frozen=True)
class Correspondence:
    world_point: Tuple[float, float, float]
    observation: Tuple[float, float]
    name: str = ""

    def __post_init__(self):
        world = tuple(float(x) for x in as_point(self.world_point, "world_point"))
        obs = tuple(float(x) for x in self.observation)
        if len(obs) != 2 or not all(math.isfinite(x) for x in obs):
            raise ValueError("observation must be two finite numbers")
        object.__setattr__(self, "world_point", world)
        object.__setattr__(self, "observation", obs)


@dataclass(frozen=True, eq=False)
class PoseParameters:
    axis_angle: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        omega = as_point(self.axis_angle, "axis_angle")
        if np.linalg.norm(omega) >= math.pi + 1e-6:
            omega = Rotation.from_rotvec(omega).as_rotvec()
        object.__setattr__(self, "axis_angle", omega)
        object.__setattr__(self, "translation", as_point(self.translation, "translation"))

    @classmethod
    def default(cls):
        return cls(np.zeros(3), np.array([0.0, 0.0, config.HEAD_DISTANCE_MM]))

    @classmethod
    def from_vector(cls, x):
        return cls(x[:3], x[3:])

    @property
    def vector(self):
        return np.concatenate([self.axis_angle, self.translation])


@dataclass(frozen=True, eq=False)
class PnPSolution:
    pose: RigidTransform
    rms_reprojection_px: float
    iterations: int
    converged: bool
    cost_history: List[float] = field(default_factory=list)


def rotation_matrix(omega):
    return Rotation.from_rotvec(omega).as_matrix()


def pose_to_transform(pose):
    return RigidTransform(rotation_matrix(pose.axis_angle), pose.translation)


def transform_to_pose(T):
    return PoseParameters(Rotation.from_matrix(T.rotation).as_rotvec(), T.translation)


def _arrays(corr):
    world = np.array([c.world_point for c in corr], dtype=np.float64).reshape(-1, 3)
    obs = np.array([c.observation for c in corr], dtype=np.float64).reshape(-1, 2)
    return world, obs


def _camera_points(pose, world):
    R = rotation_matrix(pose.axis_angle)
    cam = world @ R.T + pose.translation
    behind = np.flatnonzero(cam[:, 2] <= MIN_DEPTH_MM)
    if behind.size:
        i = int(behind[0])
        raise PointBehindCamera(f"correspondence {i} is behind the camera", index=i)
    return R, cam


def _residual_vector(K, pose, world, obs):
    _, cam = _camera_points(pose, world)
    u = K.fx * cam[:, 0] / cam[:, 2] + K.cx
    v = K.fy * cam[:, 1] / cam[:, 2] + K.cy
    return np.stack([u - obs[:, 0], v - obs[:, 1]], axis=1).ravel()


def residuals(K, pose, corr):
    """(u_proj - u_obs, v_proj - v_obs) per correspondence, flattened in input order."""
    world, obs = _arrays(corr)
    return _residual_vector(K, pose, world, obs)


def _skew(v):
    return np.array([[0.0, -v[2], v[1]], [v[2], 0.0, -v[0]], [-v[1], v[0], 0.0]])


def _jacobian_matrix(K, pose, world):
    R, cam = _camera_points(pose, world)
    omega = pose.axis_angle
    theta2 = float(omega @ omega)

    n = len(world)
    J = np.empty((2 * n, 6))
    X, Y, Z = cam[:, 0], cam[:, 1], cam[:, 2]
    # d(u, v) / d(camera point)
    du = np.stack([K.fx / Z, np.zeros(n), -K.fx * X / Z ** 2], axis=1)
    dv = np.stack([np.zeros(n), K.fy / Z, -K.fy * Y / Z ** 2], axis=1)

    if theta2 < SMALL_ANGLE:
        # identity rotation: d(R p)/d(omega) = -[p]x
        left = None
    else:
        wx = _skew(omega)
        left = (np.outer(omega, omega) + (R.T - np.eye(3)) @ wx) / theta2

    for i, p in enumerate(world):
        if left is None:
            dcam_dw = -_skew(p)
        else:
            dcam_dw = -R @ _skew(p) @ left
        J[2 * i, :3] = du[i] @ dcam_dw
        J[2 * i + 1, :3] = dv[i] @ dcam_dw
        J[2 * i, 3:] = du[i]
        J[2 * i + 1, 3:] = dv[i]
    return J


def jacobian(K, pose, corr):
    """
    Analytic d(residuals)/d(axis_angle, translation), shape (2N, 6).

    The rotation block uses the closed form derivative of R(omega) p through
    Rodrigues' formula: -R [p]x (w w^T + (R^T - I)[w]x) / |w|^2.
    """
    world, _ = _arrays(corr)
    return _jacobian_matrix(K, pose, world)


def _check_geometry(world):
    if len(world) < config.MIN_CORRESPONDENCES:
        raise InsufficientPoints(
            f"need at least {config.MIN_CORRESPONDENCES} correspondences, got {len(world)}"
        )
    centred = world - world.mean(axis=0)
    s = np.linalg.svd(centred, compute_uv=False)
    if s[0] == 0 or s[1] <= 1e-9 * s[0]:
        raise DegenerateConfiguration("world points are collinear")


def solve_pnp(K, corr, init=None, max_iterations=config.LM_MAX_ITERATIONS):
    """
    Levenberg-Marquardt minimisation of the squared reprojection error.

    Arguments
    ---------
    K : CameraIntrinsics
        Camera model of the observations.
    corr : list of Correspondence
        At least four pairs; world points must not be collinear.
    init : PoseParameters, optional
        Starting pose. Defaults to identity rotation at 600 mm depth.

    Returns
    -------
    PnPSolution
        Final pose, RMS reprojection error in px, iteration count, convergence
        flag and the accepted-step cost sequence.
    """
    world, obs = _arrays(corr)
    _check_geometry(world)

    pose = init if init is not None else PoseParameters.default()
    x = pose.vector
    r = _residual_vector(K, pose, world, obs)
    cost = float(r @ r)
    history = [cost]
    lam = config.LM_LAMBDA0
    converged = cost == 0.0
    iterations = 0

    while not converged and iterations < max_iterations:
        iterations += 1
        J = _jacobian_matrix(K, PoseParameters.from_vector(x), world)
        JtJ = J.T @ J
        g = J.T @ r
        diag = np.diag(np.diag(JtJ))

        while True:
            try:
                step = np.linalg.solve(JtJ + lam * diag, -g)
            except np.linalg.LinAlgError:
                step = np.linalg.lstsq(JtJ + lam * diag, -g, rcond=None)[0]
            step_norm = float(np.linalg.norm(step))
            candidate = PoseParameters.from_vector(x + step)
            try:
                r_new = _residual_vector(K, candidate, world, obs)
                cost_new = float(r_new @ r_new)
            except PointBehindCamera:
                cost_new = math.inf

            if cost_new < cost:
                decrease = (cost - cost_new) / cost
                x, r, cost = candidate.vector, r_new, cost_new
                history.append(cost)
                lam /= config.LM_LAMBDA_FACTOR
                LOGGER.debug("LM iteration %d: cost %.6e lambda %.1e", iterations, cost, lam)
                if step_norm < config.LM_STEP_TOL or decrease < config.LM_COST_TOL or cost == 0:
                    converged = True
                break

            if step_norm < config.LM_STEP_TOL:
                # no representable improvement left
                converged = True
                break
            lam *= config.LM_LAMBDA_FACTOR
            if lam > config.LM_LAMBDA_MAX:
                raise Diverged(
                    f"damping exceeded {config.LM_LAMBDA_MAX:.0e} at iteration {iterations}"
                )

    pose = PoseParameters.from_vector(x)
    rms = math.sqrt(cost / len(world))
    return PnPSolution(pose_to_transform(pose), rms, iterations, converged, history)


def head_pose_angles(solution):
    """Head orientation in the camera frame from a world-to-camera solution."""
    return rotation_to_euler(solution.pose.rotation.T)


def head_position_px(K, solution):
    """Pixel position of the head-frame origin."""
    return project(K, solution.pose, np.zeros(3))


__all__ = [
    "Correspondence",
    "PoseParameters",
    "PnPSolution",
    "head_pose_angles",
    "head_position_px",
    "jacobian",
    "pose_to_transform",
    "residuals",
    "solve_pnp",
    "transform_to_pose",
]
