"""
Image quality metrics on [0, 1] RGB buffers.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from twinnav.exceptions import DimensionMismatch, TooSmall

PSNR_CAP_DB = 99.0

# SSIM window and stabilising constants, dynamic range 1.0
WINDOW = 11
WINDOW_SIGMA = 1.5
K1 = 0.01
K2 = 0.03
LUMA = np.array([0.299, 0.587, 0.114])


@dataclass(frozen=True)
class MetricReport:
    psnr_db: float
    ssim: float

    def to_dict(self):
        return {"psnr_db": self.psnr_db, "ssim": self.ssim}


def _pixels(a, b):
    if (a.width, a.height) != (b.width, b.height):
        raise DimensionMismatch(
            f"image sizes differ: {a.width}x{a.height} vs {b.width}x{b.height}"
        )
    return a.pixels, b.pixels


def psnr(a, b):
    x, y = _pixels(a, b)
    mse = float(np.mean((x - y) ** 2))
    if mse == 0.0:
        return PSNR_CAP_DB
    return min(PSNR_CAP_DB, 10.0 * math.log10(1.0 / mse))


def gaussian_window(size=WINDOW, sigma=WINDOW_SIGMA):
    r = np.arange(size) - (size - 1) / 2.0
    g = np.exp(-(r ** 2) / (2.0 * sigma ** 2))
    w = np.outer(g, g)
    return w / w.sum()


def ssim(a, b):
    """Mean SSIM of the luma channels over every full 11x11 window."""
    x, y = _pixels(a, b)
    if min(a.width, a.height) < WINDOW:
        raise TooSmall(f"SSIM needs images of at least {WINDOW}x{WINDOW} px")
    I1 = x @ LUMA
    I2 = y @ LUMA
    C1 = K1 ** 2
    C2 = K2 ** 2
    w = gaussian_window()
    half = WINDOW // 2

    def filt(img):
        return ndimage.correlate(img, w, mode="reflect")[half:-half, half:-half]

    mu1 = filt(I1)
    mu2 = filt(I2)
    sigma1_2 = filt(I1 * I1) - mu1 * mu1
    sigma2_2 = filt(I2 * I2) - mu2 * mu2
    sigma12 = filt(I1 * I2) - mu1 * mu2

    ssim_map = ((2 * mu1 * mu2 + C1) * (2 * sigma12 + C2)) / (
        (mu1 * mu1 + mu2 * mu2 + C1) * (sigma1_2 + sigma2_2 + C2)
    )
    return float(np.mean(ssim_map))


def evaluate(a, b):
    return MetricReport(psnr(a, b), ssim(a, b))
