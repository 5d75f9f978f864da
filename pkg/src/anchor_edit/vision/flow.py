"""
Dense Horn-Schunck optical flow and backward bilinear warping.

Flow fields are (2, H, W) arrays holding (dx, dy) in pixels per frame.
"""

from dataclasses import dataclass

import numpy as np

from ..errors import ConfigError, ContractError
from .image import as_gray_image, check_same_size

__all__ = ["FlowParams", "optical_flow", "warp", "zero_flow"]


@dataclass(frozen=True)
class FlowParams:
    lam: float = 0.1
    iters: int = 100

    def __post_init__(self):
        if not self.lam > 0.0:
            raise ConfigError(f"Flow smoothness weight must be > 0, got {self.lam}")
        if self.iters < 1:
            raise ConfigError(f"Flow iteration count must be >= 1, got {self.iters}")


def zero_flow(height: int, width: int) -> np.ndarray:
    return np.zeros((2, height, width))


def _neighbour_mean(f: np.ndarray) -> np.ndarray:
    p = np.pad(f, 1, mode="edge")
    return 0.25 * (p[:-2, 1:-1] + p[2:, 1:-1] + p[1:-1, :-2] + p[1:-1, 2:])


def optical_flow(a: np.ndarray, b: np.ndarray, params: FlowParams = FlowParams()) -> np.ndarray:
    """
    Flow from image a to image b: b(p) ~ a(p - flow(p)).

    Spatial derivatives are averaged over both images and the temporal derivative is b - a. Each
    Jacobi sweep reads only the previous iterate.
    """
    check_same_size(a, b)
    a = as_gray_image(a)
    b = as_gray_image(b)
    a_y, a_x = np.gradient(a)
    b_y, b_x = np.gradient(b)
    ix = 0.5 * (a_x + b_x)
    iy = 0.5 * (a_y + b_y)
    it = b - a
    denom = params.lam ** 2 + ix ** 2 + iy ** 2

    u = np.zeros_like(a)
    v = np.zeros_like(a)
    for _ in range(params.iters):
        u_bar = _neighbour_mean(u)
        v_bar = _neighbour_mean(v)
        r = (ix * u_bar + iy * v_bar + it) / denom
        u = u_bar - ix * r
        v = v_bar - iy * r
    bound = float(max(a.shape))
    return np.clip(np.stack([u, v]), -bound, bound)


def warp(img: np.ndarray, flow: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """
    Backward warp: out(p) = img(p + flow(p)) with bilinear sampling.

    Works on (H, W) images and on (C, H, W) stacks such as frames or flow fields. Returns the warped
    image and a boolean mask that is False where the sample falls outside the image.
    """
    if flow.ndim != 3 or flow.shape[0] != 2:
        raise ContractError(f"Flow must have shape (2, H, W), got {flow.shape}")
    check_same_size(img, flow)
    h, w = flow.shape[1:]
    yy, xx = np.mgrid[0:h, 0:w].astype(np.float64)
    x = xx + flow[0]
    y = yy + flow[1]
    valid = (x >= 0.0) & (x <= w - 1) & (y >= 0.0) & (y <= h - 1)

    x0 = np.clip(np.floor(x), 0, max(w - 2, 0)).astype(int)
    y0 = np.clip(np.floor(y), 0, max(h - 2, 0)).astype(int)
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    fx = np.clip(x - x0, 0.0, 1.0)
    fy = np.clip(y - y0, 0.0, 1.0)

    def sample(channel: np.ndarray) -> np.ndarray:
        top = (1.0 - fx) * channel[y0, x0] + fx * channel[y0, x1]
        bottom = (1.0 - fx) * channel[y1, x0] + fx * channel[y1, x1]
        return (1.0 - fy) * top + fy * bottom

    if img.ndim == 2:
        return sample(img), valid
    return np.stack([sample(c) for c in img]), valid
