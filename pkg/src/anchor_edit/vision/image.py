"""
Grayscale images and frame conversions.
"""

import numpy as np

from ..errors import ContractError

__all__ = ["LUMA", "to_gray", "as_gray_image", "check_same_size"]

LUMA = np.array([0.299, 0.587, 0.114])


def to_gray(frame: np.ndarray) -> np.ndarray:
    """(3, H, W) frame -> (H, W) luma; a 2-D input is returned as is."""
    if frame.ndim == 2:
        return frame
    if frame.ndim != 3 or frame.shape[0] != 3:
        raise ContractError(f"Expected a (3, H, W) frame or (H, W) image, got {frame.shape}")
    return np.tensordot(LUMA, frame, axes=1)


def as_gray_image(img: np.ndarray) -> np.ndarray:
    img = np.asarray(to_gray(np.asarray(img, dtype=np.float64)))
    if not np.all(np.isfinite(img)):
        raise ContractError("Image contains non-finite values")
    return np.clip(img, 0.0, 1.0)


def check_same_size(a: np.ndarray, b: np.ndarray):
    if a.shape[-2:] != b.shape[-2:]:
        raise ContractError(f"Image size mismatch: {a.shape[-2:]} vs {b.shape[-2:]}")
