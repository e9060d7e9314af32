"""
Flat little-endian checkpoint of `FieldParameters`.

    b"TNRF"  u32 version  u32 L_x  u32 L_d  6 x f64 bounds (lo xyz, hi xyz)
    u32 trunk layer count  u32 color layer count
    per layer, trunk -> density -> color:
        u32 rows  u32 cols  rows*cols f64 weights (row-major)  rows f64 bias
"""

import struct

import numpy as np

from twinnav.exceptions import FormatError
from twinnav.io import atomic_write_bytes
from twinnav.radiance.field import EncodingConfig, FieldParameters

MAGIC = b"TNRF"
VERSION = 1


def dump_checkpoint(params):
    out = [MAGIC, struct.pack("<III", VERSION, params.encoding.L_x, params.encoding.L_d)]
    out.append(struct.pack("<6d", *params.bounds[0], *params.bounds[1]))
    out.append(struct.pack("<II", len(params.trunk), len(params.color)))
    for W, b in params.layers:
        out.append(struct.pack("<II", *W.shape))
        out.append(W.astype("<f8").tobytes())
        out.append(b.astype("<f8").tobytes())
    return b"".join(out)


def save_checkpoint(params, path):
    atomic_write_bytes(path, dump_checkpoint(params))


class _Reader:
    def __init__(self, data, source):
        self.data = data
        self.offset = 0
        self.source = source

    def take(self, n):
        if self.offset + n > len(self.data):
            raise FormatError(f"{self.source}: checkpoint truncated at byte {self.offset}")
        chunk = self.data[self.offset : self.offset + n]
        self.offset += n
        return chunk

    def unpack(self, fmt):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))

    def floats(self, count):
        return np.frombuffer(self.take(8 * count), dtype="<f8").astype(np.float64)


def parse_checkpoint(data, source="<bytes>"):
    reader = _Reader(data, source)
    if reader.take(4) != MAGIC:
        raise FormatError(f"{source}: not a twinnav checkpoint")
    version, L_x, L_d = reader.unpack("<III")
    if version != VERSION:
        raise FormatError(f"{source}: unsupported checkpoint version {version}")
    bounds = reader.unpack("<6d")
    n_trunk, n_color = reader.unpack("<II")

    layers = []
    for _ in range(n_trunk + 1 + n_color):
        rows, cols = reader.unpack("<II")
        W = reader.floats(rows * cols).reshape(rows, cols)
        b = reader.floats(rows)
        layers.append((W, b))
    if reader.offset != len(data):
        raise FormatError(f"{source}: {len(data) - reader.offset} trailing bytes")

    return FieldParameters(
        EncodingConfig(L_x, L_d),
        layers[:n_trunk],
        layers[n_trunk],
        layers[n_trunk + 1 :],
        (bounds[:3], bounds[3:]),
    )


def load_checkpoint(path):
    with open(path, "rb") as fp:
        data = fp.read()
    return parse_checkpoint(data, str(path))
