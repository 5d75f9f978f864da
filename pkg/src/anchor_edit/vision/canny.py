"""
Canny edge detection on [0, 1] grayscale images.

Gaussian blur (truncated at radius ceil(3 sigma)) -> Sobel gradients -> non-maximum suppression in
four direction sectors -> double-threshold hysteresis over 8-connected components.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from ..errors import ConfigError, ContractError
from .image import as_gray_image

__all__ = ["CannyParams", "canny", "gaussian_kernel", "gaussian_blur", "sobel_gradients",
           "non_max_suppression", "hysteresis"]

EIGHT_CONNECTED = np.ones((3, 3), dtype=int)

# (dy, dx) of the neighbour along the positive gradient direction, per sector
SECTOR_OFFSETS = ((0, 1), (1, 1), (1, 0), (1, -1))


@dataclass(frozen=True)
class CannyParams:
    sigma: float = 1.4
    low: float = 0.1
    high: float = 0.3

    def __post_init__(self):
        if not self.sigma > 0.0:
            raise ConfigError(f"Canny sigma must be > 0, got {self.sigma}")
        if not 0.0 < self.low < self.high < 1.0:
            raise ContractError(f"Canny thresholds must satisfy 0 < low < high < 1, got ({self.low}, {self.high})")


def gaussian_kernel(sigma: float) -> np.ndarray:
    radius = math.ceil(3.0 * sigma)
    x = np.arange(-radius, radius + 1, dtype=np.float64)
    kernel = np.exp(-0.5 * (x / sigma) ** 2)
    return kernel / kernel.sum()


def gaussian_blur(img: np.ndarray, sigma: float) -> np.ndarray:
    kernel = gaussian_kernel(sigma)
    if min(img.shape) < len(kernel):
        raise ContractError(f"Image {img.shape} is smaller than the {len(kernel)}-tap blur kernel")
    blurred = ndimage.convolve1d(img, kernel, axis=0, mode="nearest")
    return ndimage.convolve1d(blurred, kernel, axis=1, mode="nearest")


def sobel_gradients(img: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """(gx, gy) as central differences smoothed by the normalized [1, 2, 1] kernel."""
    gx = ndimage.sobel(img, axis=1, mode="nearest") / 4.0
    gy = ndimage.sobel(img, axis=0, mode="nearest") / 4.0
    return gx, gy


def _sectors(gx: np.ndarray, gy: np.ndarray) -> np.ndarray:
    angle = np.rad2deg(np.arctan2(gy, gx)) % 180.0
    return np.floor((angle + 22.5) / 45.0).astype(int) % 4


def non_max_suppression(gx: np.ndarray, gy: np.ndarray) -> np.ndarray:
    """
    Gradient magnitude where it is a local maximum across the edge, else 0.

    A pixel survives when it is >= its neighbour against the gradient and > its neighbour along it,
    so plateaus of two equal pixels keep exactly one.
    """
    magnitude = np.hypot(gx, gy)
    sectors = _sectors(gx, gy)
    padded = np.pad(magnitude, 1)
    h, w = magnitude.shape
    keep = np.zeros_like(magnitude, dtype=bool)
    for sector, (dy, dx) in enumerate(SECTOR_OFFSETS):
        ahead = padded[1 + dy:1 + dy + h, 1 + dx:1 + dx + w]
        behind = padded[1 - dy:1 - dy + h, 1 - dx:1 - dx + w]
        keep |= (sectors == sector) & (magnitude >= behind) & (magnitude > ahead)
    return np.where(keep & (magnitude > 0.0), magnitude, 0.0)


def hysteresis(thin: np.ndarray, low: float, high: float) -> np.ndarray:
    candidates = thin >= low
    labels, count = ndimage.label(candidates, structure=EIGHT_CONNECTED)
    if count == 0:
        return np.zeros(thin.shape, dtype=np.uint8)
    strong_labels = np.unique(labels[thin >= high])
    strong_labels = strong_labels[strong_labels > 0]
    return np.isin(labels, strong_labels).astype(np.uint8)


def canny(img: np.ndarray, params: CannyParams = CannyParams()) -> np.ndarray:
    """Binary (H, W) uint8 edge map of a grayscale image or (3, H, W) frame."""
    gray = as_gray_image(img)
    gx, gy = sobel_gradients(gaussian_blur(gray, params.sigma))
    return hysteresis(non_max_suppression(gx, gy), params.low, params.high)
