"""
RGB image buffers and binary PPM (P6, maxval 255) I/O.
"""

import re
from dataclasses import dataclass

import numpy as np

from twinnav.exceptions import FormatError
from twinnav.io import atomic_write_bytes

_HEADER = re.compile(rb"\AP6\s+(?:#[^\n]*\n\s*)*(\d+)\s+(\d+)\s+(\d+)\s")


@dataclass(eq=False)
class ImageBuffer:
    width: int
    height: int
    pixels: np.ndarray

    def __post_init__(self):
        pixels = np.asarray(self.pixels, dtype=np.float64)
        if pixels.size != self.width * self.height * 3:
            raise ValueError(
                f"expected {self.width}x{self.height}x3 values, got {pixels.size}"
            )
        pixels = pixels.reshape(self.height, self.width, 3)
        if not np.all(np.isfinite(pixels)) or pixels.min() < 0.0 or pixels.max() > 1.0:
            raise ValueError("pixel components must lie in [0, 1]")
        self.pixels = pixels

    @classmethod
    def filled(cls, width, height, color):
        pixels = np.broadcast_to(np.asarray(color, np.float64), (height, width, 3))
        return cls(width, height, pixels.copy())

    def flat(self):
        """Row-major (H*W, 3) view of the pixels."""
        return self.pixels.reshape(-1, 3)


def write_ppm(image, path):
    data = np.round(image.pixels * 255.0).astype(np.uint8)
    header = f"P6\n{image.width} {image.height}\n255\n".encode("ascii")
    atomic_write_bytes(path, header + data.tobytes())


def read_ppm(path):
    with open(path, "rb") as fp:
        raw = fp.read()
    match = _HEADER.match(raw)
    if match is None:
        raise FormatError(f"{path}: not a binary P6 PPM")
    width, height, maxval = (int(g) for g in match.groups())
    if width <= 0 or height <= 0 or maxval != 255:
        raise FormatError(f"{path}: unsupported PPM header {width}x{height} maxval {maxval}")
    body = raw[match.end() :]
    if len(body) != width * height * 3:
        raise FormatError(f"{path}: expected {width * height * 3} bytes, found {len(body)}")
    pixels = np.frombuffer(body, dtype=np.uint8).astype(np.float64) / 255.0
    return ImageBuffer(width, height, pixels)
