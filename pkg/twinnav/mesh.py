"""
Explicit surface of a density field: grid sampling, Marching Cubes and PLY I/O.
"""

import logging
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from twinnav import config
from twinnav._mc_tables import CORNERS, EDGES, TRIANGLES
from twinnav.exceptions import DegenerateIsoWarning, FormatError
from twinnav.geometry import as_point
from twinnav.io import atomic_write_text

LOGGER = logging.getLogger(__name__)

_CORNERS = np.array(CORNERS)
_TRI = np.full((256, 15), -1, dtype=np.int64)
for _case, _row in enumerate(TRIANGLES):
    _TRI[_case, : len(_row)] = _row
_NTRI = np.array([len(row) // 3 for row in TRIANGLES])

# per local edge: axis it runs along and the corner offset of its lower end
_EDGE_AXIS = np.array([int(np.argmax(np.abs(_CORNERS[b] - _CORNERS[a]))) for a, b in EDGES])
_EDGE_BASE = np.array([np.minimum(_CORNERS[a], _CORNERS[b]) for a, b in EDGES])


@dataclass(eq=False)
class DensityGrid:
    """
    Densities sampled at origin + spacing * (i, j, k); `values` is flat, x fastest.
    """

    origin: np.ndarray
    spacing: float
    dims: Tuple[int, int, int]
    values: np.ndarray

    def __post_init__(self):
        self.origin = as_point(self.origin, "origin")
        self.spacing = float(self.spacing)
        if not self.spacing > 0:
            raise ValueError("spacing must be > 0")
        self.dims = tuple(int(n) for n in self.dims)
        if len(self.dims) != 3 or min(self.dims) < 2:
            raise ValueError(f"dims must be three values >= 2, got {self.dims}")
        values = np.asarray(self.values, dtype=np.float64).ravel()
        if values.size != int(np.prod(self.dims)):
            raise ValueError(f"expected {int(np.prod(self.dims))} values, got {values.size}")
        if not np.all(np.isfinite(values)) or values.min() < 0:
            raise ValueError("grid values must be finite and >= 0")
        self.values = values

    @property
    def volume(self):
        """Values as an (nx, ny, nz) array."""
        nx, ny, nz = self.dims
        return self.values.reshape(nz, ny, nx).transpose(2, 1, 0)

    def point(self, i, j, k):
        return self.origin + self.spacing * np.array([i, j, k], dtype=np.float64)


@dataclass(eq=False)
class TriangleMesh:
    vertices: np.ndarray
    triangles: np.ndarray
    iso_in_range: bool = True

    def __post_init__(self):
        self.vertices = np.asarray(self.vertices, dtype=np.float64).reshape(-1, 3)
        self.triangles = np.asarray(self.triangles, dtype=np.int64).reshape(-1, 3)
        if self.triangles.size:
            if self.triangles.min() < 0 or self.triangles.max() >= len(self.vertices):
                raise ValueError("triangle index out of range")
            t = self.triangles
            if np.any((t[:, 0] == t[:, 1]) | (t[:, 1] == t[:, 2]) | (t[:, 0] == t[:, 2])):
                raise ValueError("degenerate triangle with a repeated index")

    @classmethod
    def empty(cls, iso_in_range=True):
        return cls(np.zeros((0, 3)), np.zeros((0, 3), dtype=np.int64), iso_in_range)


@dataclass(frozen=True)
class EdgeStatistics:
    vertices: int
    edges: int
    faces: int
    boundary_edges: int
    nonmanifold_edges: int

    @property
    def euler_characteristic(self):
        return self.vertices - self.edges + self.faces

    @property
    def watertight(self):
        return self.boundary_edges == 0 and self.nonmanifold_edges == 0


def grid_points(origin, spacing, dims):
    nx, ny, nz = dims
    k, j, i = np.meshgrid(np.arange(nz), np.arange(ny), np.arange(nx), indexing="ij")
    index = np.stack([i.ravel(), j.ravel(), k.ravel()], axis=1).astype(np.float64)
    return as_point(origin) + spacing * index


def sample_grid(field, origin, spacing, dims, threads=None):
    """
    Sample the density of `field` on a regular lattice. The view direction is
    fixed to +z since density does not depend on it.
    """
    dims = tuple(int(n) for n in dims)
    if len(dims) != 3 or min(dims) < 2:
        raise ValueError(f"dims must be three values >= 2, got {dims}")
    points = grid_points(origin, spacing, dims)
    dirs = np.broadcast_to([0.0, 0.0, 1.0], points.shape)
    slices = [slice(i, i + config.CHUNK_SIZE) for i in range(0, len(points), config.CHUNK_SIZE)]

    def work(sl):
        return field.query(points[sl], dirs[sl])[1]

    with ThreadPoolExecutor(max_workers=config.resolve_threads(threads)) as executor:
        values = np.concatenate(list(executor.map(work, slices)))
    return DensityGrid(origin, spacing, dims, values)


def _edge_ids(dims, cube, local_edge):
    """Global id of a cell edge: x-edges, then y-edges, then z-edges."""
    nx, ny, nz = dims
    shapes = [(nx - 1, ny, nz), (nx, ny - 1, nz), (nx, ny, nz - 1)]
    offsets = np.cumsum([0] + [int(np.prod(s)) for s in shapes])
    axis = _EDGE_AXIS[local_edge]
    base = cube + _EDGE_BASE[local_edge]
    ids = np.empty(len(base), dtype=np.int64)
    for a, shape in enumerate(shapes):
        sel = axis == a
        ids[sel] = offsets[a] + np.ravel_multi_index(tuple(base[sel].T), shape)
    return ids, axis, base


def marching_cubes(grid, iso=config.MC_ISO):
    """
    Triangulate {density = iso}.

    A corner is inside when its value is below `iso`. Vertices are linearly
    interpolated on cell edges and shared between cells through their global
    edge id; a vertex that falls exactly on a lattice point is keyed by that
    point, and triangles that collapse as a result are dropped.
    """
    vol = grid.volume
    if not vol.min() < iso < vol.max():
        warnings.warn(
            f"iso {iso} outside the grid value range ({vol.min()}, {vol.max()})",
            DegenerateIsoWarning,
        )
        return TriangleMesh.empty(iso_in_range=False)

    nx, ny, nz = grid.dims
    below = (vol < iso).astype(np.int64)
    cases = np.zeros((nx - 1, ny - 1, nz - 1), dtype=np.int64)
    for bit, (dx, dy, dz) in enumerate(CORNERS):
        cases |= below[dx : nx - 1 + dx, dy : ny - 1 + dy, dz : nz - 1 + dz] << bit

    cubes = np.argwhere(_NTRI[cases] > 0)
    case = cases[tuple(cubes.T)]
    tri_cubes, tri_edges = [], []
    for slot in range(5):
        sel = _NTRI[case] > slot
        tri_cubes.append(np.repeat(cubes[sel], 3, axis=0))
        tri_edges.append(_TRI[case[sel], 3 * slot : 3 * slot + 3].ravel())
    tri_cubes = np.concatenate(tri_cubes)
    tri_edges = np.concatenate(tri_edges)

    edge_id, axis, p0 = _edge_ids(grid.dims, tri_cubes, tri_edges)
    p1 = p0.copy()
    p1[np.arange(len(p1)), axis] += 1
    v0 = vol[tuple(p0.T)]
    v1 = vol[tuple(p1.T)]
    t = (iso - v0) / (v1 - v0)

    # vertices on lattice points share one key, below all edge ids
    key = edge_id.copy()
    at0, at1 = t == 0.0, t == 1.0
    key[at0] = -1 - np.ravel_multi_index(tuple(p0[at0].T), grid.dims)
    key[at1] = -1 - np.ravel_multi_index(tuple(p1[at1].T), grid.dims)

    _, first, inverse = np.unique(key, return_index=True, return_inverse=True)
    lattice = p0[first] + t[first, None] * np.eye(3)[axis[first]]
    vertices = grid.origin + grid.spacing * lattice

    triangles = inverse.reshape(-1, 3)
    keep = (
        (triangles[:, 0] != triangles[:, 1])
        & (triangles[:, 1] != triangles[:, 2])
        & (triangles[:, 0] != triangles[:, 2])
    )
    # drop vertices only referenced by collapsed triangles
    used, remap = np.unique(triangles[keep], return_inverse=True)
    LOGGER.debug(
        "marching cubes: %d vertices, %d triangles (%d collapsed)",
        len(used),
        int(keep.sum()),
        int((~keep).sum()),
    )
    return TriangleMesh(vertices[used], remap.reshape(-1, 3))


def edge_statistics(mesh):
    tri = mesh.triangles
    if not len(tri):
        return EdgeStatistics(len(mesh.vertices), 0, 0, 0, 0)
    edges = np.sort(np.concatenate([tri[:, [0, 1]], tri[:, [1, 2]], tri[:, [2, 0]]]), axis=1)
    _, counts = np.unique(edges, axis=0, return_counts=True)
    return EdgeStatistics(
        vertices=len(mesh.vertices),
        edges=len(counts),
        faces=len(tri),
        boundary_edges=int(np.sum(counts == 1)),
        nonmanifold_edges=int(np.sum(counts > 2)),
    )


def export_ply(mesh, path):
    lines = [
        "ply",
        "format ascii 1.0",
        "comment units mm",
        f"element vertex {len(mesh.vertices)}",
        "property float x",
        "property float y",
        "property float z",
        f"element face {len(mesh.triangles)}",
        "property list uchar int vertex_indices",
        "end_header",
    ]
    lines += [f"{x!r} {y!r} {z!r}" for x, y, z in mesh.vertices.tolist()]
    lines += [f"3 {a} {b} {c}" for a, b, c in mesh.triangles.tolist()]
    atomic_write_text(path, "\n".join(lines) + "\n")


def read_ply(path):
    """Read an ASCII PLY with x y z vertices and triangular faces."""
    with open(path) as fp:
        lines = fp.read().splitlines()
    if not lines or lines[0].strip() != "ply":
        raise FormatError(f"{path}: missing 'ply' magic")
    counts, fmt, body_start = {}, None, None
    for n, line in enumerate(lines[1:], start=1):
        words = line.split()
        if not words or words[0] in ("comment", "obj_info", "property"):
            continue
        if words[0] == "format":
            fmt = words[1:]
        elif words[0] == "element":
            counts[words[1]] = int(words[2])
        elif words[0] == "end_header":
            body_start = n + 1
            break
    if fmt != ["ascii", "1.0"] or body_start is None:
        raise FormatError(f"{path}: only ASCII PLY 1.0 is supported")

    n_vert, n_face = counts.get("vertex", 0), counts.get("face", 0)
    body = lines[body_start:]
    if len(body) < n_vert + n_face:
        raise FormatError(f"{path}: expected {n_vert + n_face} body lines, found {len(body)}")
    try:
        vertices = [[float(w) for w in body[i].split()[:3]] for i in range(n_vert)]
        faces = []
        for line in body[n_vert : n_vert + n_face]:
            words = [int(w) for w in line.split()]
            if words[0] != 3 or len(words) != 4:
                raise FormatError(f"{path}: only triangular faces are supported")
            faces.append(words[1:])
    except (ValueError, IndexError):
        raise FormatError(f"{path}: malformed PLY body") from None
    return TriangleMesh(np.array(vertices).reshape(-1, 3), np.array(faces).reshape(-1, 3))


def mesh_from_checkpoint(params, res=config.MC_RESOLUTION, iso=config.MC_ISO, threads=None):
    """Marching Cubes over the field's bounding box, `res` samples along its longest side."""
    lo = np.asarray(params.bounds[0])
    hi = np.asarray(params.bounds[1])
    spacing = float(np.max(hi - lo)) / (res - 1)
    dims = tuple(max(2, int(round(e / spacing)) + 1) for e in hi - lo)
    grid = sample_grid(params, lo, spacing, dims, threads)
    return marching_cubes(grid, iso), grid
