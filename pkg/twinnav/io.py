"""
JSON file formats and atomic file writes.

Formats
-------
* intrinsics:      {"fx", "fy", "cx", "cy", "width", "height"}
* transform:       16 numbers, row-major 4x4, bottom row exactly [0, 0, 0, 1]
* correspondences: [{"name", "world_mm": [x, y, z], "pixel": [u, v]}, ...]
* fiducials:       [{"name", "mm": [x, y, z]}, ...]
"""

import json
import os
import tempfile
from pathlib import Path

import numpy as np

from twinnav.exceptions import FormatError
from twinnav.geometry import CameraIntrinsics, RigidTransform
from twinnav.pnp import Correspondence
from twinnav.registration import FiducialSet


def atomic_write_bytes(path, data):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "wb") as fp:
            fp.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def atomic_write_text(path, text):
    atomic_write_bytes(path, text.encode("utf-8"))


def write_json(path, data):
    atomic_write_text(path, json.dumps(data, indent=2, sort_keys=True) + "\n")


def read_json(path):
    with open(path) as fp:
        try:
            return json.load(fp)
        except json.JSONDecodeError as exc:
            raise FormatError(f"{path}: invalid JSON ({exc})") from None


def load_intrinsics(path):
    data = read_json(path)
    if not isinstance(data, dict):
        raise FormatError(f"{path}: intrinsics must be a JSON object")
    return CameraIntrinsics.from_dict(data)


def save_intrinsics(path, K):
    write_json(path, K.to_dict())


def transform_to_list(T):
    return [float(x) for x in T.matrix.ravel()]


def parse_transform(values):
    if not isinstance(values, list) or not all(isinstance(x, (int, float)) for x in values):
        raise FormatError("transform must be a list of 16 numbers")
    return RigidTransform.from_matrix(values)


def load_transform(path):
    data = read_json(path)
    if isinstance(data, dict) and "matrix" in data:
        data = data["matrix"]
    return parse_transform(data)


def save_transform(path, T):
    write_json(path, transform_to_list(T))


def _records(path, keys):
    data = read_json(path)
    if not isinstance(data, list):
        raise FormatError(f"{path}: expected a JSON array")
    for i, record in enumerate(data):
        if not isinstance(record, dict) or not set(keys) <= set(record):
            raise FormatError(f"{path}: entry {i} needs keys {sorted(keys)}")
    return data


def load_correspondences(path):
    return [
        Correspondence(r["world_mm"], r["pixel"], str(r["name"]))
        for r in _records(path, ("name", "world_mm", "pixel"))
    ]


def save_correspondences(path, corr):
    write_json(
        path,
        [
            {"name": c.name, "world_mm": list(c.world_point), "pixel": list(c.observation)}
            for c in corr
        ],
    )


def load_fiducials(path, frame=""):
    records = _records(path, ("name", "mm"))
    return FiducialSet([(str(r["name"]), np.asarray(r["mm"], np.float64)) for r in records], frame)


def save_fiducials(path, fiducials):
    write_json(path, [{"name": n, "mm": [float(x) for x in p]} for n, p in fiducials.points])
