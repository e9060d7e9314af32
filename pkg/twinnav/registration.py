"""
Paired-point rigid registration between the tracking frame and the model frame.

Moving and fixed landmark sets are paired by name and aligned with the centred
SVD (orthogonal Procrustes) solution, reflection corrected.
"""

import math
from dataclasses import dataclass
from typing import List, Tuple

import numpy as np

from twinnav import config
from twinnav.exceptions import CollinearPoints, NameMismatch
from twinnav.geometry import RigidTransform, as_point, transform_point

COLLINEAR_TOL = 1e-9


@dataclass(eq=False)
class FiducialSet:
    points: List[Tuple[str, np.ndarray]]
    frame: str = ""

    def __post_init__(self):
        self.points = [(str(name), as_point(p, name).copy()) for name, p in self.points]
        if len(self.points) < 3:
            raise ValueError(f"need at least 3 fiducials, got {len(self.points)}")
        if len(set(self.names)) != len(self.points):
            raise ValueError("fiducial names must be unique")

    @classmethod
    def from_mapping(cls, mapping, frame=""):
        return cls(list(mapping.items()), frame)

    @property
    def names(self):
        return [name for name, _ in self.points]

    @property
    def array(self):
        return np.array([p for _, p in self.points])

    def __getitem__(self, name):
        for key, p in self.points:
            if key == name:
                return p
        raise KeyError(name)

    def select(self, names):
        return FiducialSet([(n, self[n]) for n in names], self.frame)

    def transformed(self, T, frame=None):
        return FiducialSet(
            [(n, transform_point(T, p)) for n, p in self.points],
            self.frame if frame is None else frame,
        )

    def scaled(self, factor):
        return FiducialSet([(n, p * factor) for n, p in self.points], self.frame)


@dataclass(frozen=True)
class RegistrationResult:
    transform: RigidTransform
    fre_mm: float

    def to_dict(self):
        return {"matrix": [float(x) for x in self.transform.matrix.ravel()], "fre_mm": self.fre_mm}


@dataclass(frozen=True, eq=False)
class ToolModel:
    tip_offset: np.ndarray = config.TOOL_TIP_OFFSET_MM

    def __post_init__(self):
        object.__setattr__(self, "tip_offset", as_point(self.tip_offset, "tip_offset"))


def _paired(moving, fixed):
    if sorted(moving.names) != sorted(fixed.names):
        missing = sorted(set(moving.names) ^ set(fixed.names))
        raise NameMismatch(f"landmark names differ: {missing}")
    A = moving.array
    B = np.array([fixed[n] for n in moving.names])
    return A, B


def rigid_register(moving, fixed):
    """
    Least-squares rigid transform taking `moving` onto `fixed`.

    Returns the transform (moving -> fixed) and the RMS residual
    sqrt(sum |T m_i - f_i|^2 / N) in mm.
    """
    A, B = _paired(moving, fixed)
    centroid_A = A.mean(axis=0)
    centroid_B = B.mean(axis=0)
    A_c = A - centroid_A
    B_c = B - centroid_B

    s = np.linalg.svd(A_c, compute_uv=False)
    if s[0] == 0 or s[1] <= COLLINEAR_TOL * s[0]:
        raise CollinearPoints("moving landmarks are collinear")

    H = A_c.T @ B_c
    U, _, Vt = np.linalg.svd(H)
    V = Vt.T
    d = 1.0 if np.linalg.det(V @ U.T) >= 0 else -1.0
    R = V @ np.diag([1.0, 1.0, d]) @ U.T
    t = centroid_B - R @ centroid_A

    residual = A @ R.T + t - B
    fre = math.sqrt(float(np.sum(residual ** 2)) / len(A))
    return RegistrationResult(RigidTransform(R, t), fre)


def tool_tip(marker_pose, tool):
    return transform_point(marker_pose, tool.tip_offset)


def pointing_error(tip, target):
    return float(np.linalg.norm(as_point(tip) - as_point(target)))


def normalize_scale(model, tracked, a=config.SCALE_LANDMARKS[0], b=config.SCALE_LANDMARKS[1]):
    """
    Rescale model landmarks about the model origin so that |a - b| matches the
    tracked set. Returns (scaled model, factor).
    """
    for points in (model, tracked):
        missing = [n for n in (a, b) if n not in points.names]
        if missing:
            raise NameMismatch(f"scale landmarks missing: {', '.join(missing)}")
    model_dist = float(np.linalg.norm(model[a] - model[b]))
    if model_dist == 0:
        raise ValueError(f"landmarks {a!r} and {b!r} coincide in the model")
    factor = float(np.linalg.norm(tracked[a] - tracked[b])) / model_dist
    return model.scaled(factor), factor


def fre_monte_carlo(points, sigma_mm, trials, seed=0):
    """RMS FRE of registering noisy copies of `points` back onto themselves."""
    rng = np.random.default_rng(seed)
    squares = []
    for _ in range(trials):
        noisy = FiducialSet(
            [(n, p + rng.normal(0.0, sigma_mm, 3)) for n, p in points.points], "tracking"
        )
        squares.append(rigid_register(noisy, points).fre_mm ** 2)
    return math.sqrt(float(np.mean(squares)))
