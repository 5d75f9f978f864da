"""
Small numpy building blocks shared by the pair network and the control encoders.
"""

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from ..errors import ContractError

__all__ = ["conv2d", "patch_pool", "patch_unpool", "seeded_conv", "seeded_linear"]


def conv2d(x: np.ndarray, weight: np.ndarray, bias: np.ndarray | None = None) -> np.ndarray:
    """'Same' 2-D cross-correlation of a (C, H, W) map with (O, C, k, k) weights, edge-replicated borders."""
    out_ch, in_ch, kh, kw = weight.shape
    if x.ndim != 3 or x.shape[0] != in_ch:
        raise ContractError(f"conv2d expects ({in_ch}, H, W) input, got {x.shape}")
    if kh == 1 and kw == 1:
        y = np.einsum("oc,chw->ohw", weight[:, :, 0, 0], x)
    else:
        ph, pw = kh // 2, kw // 2
        padded = np.pad(x, ((0, 0), (ph, ph), (pw, pw)), mode="edge")
        windows = sliding_window_view(padded, (kh, kw), axis=(1, 2))
        y = np.einsum("chwij,ocij->ohw", windows, weight)
    if bias is not None:
        y = y + bias[:, None, None]
    return y


def patch_pool(x: np.ndarray, patch: int) -> np.ndarray:
    """(C, H, W) -> (H/patch * W/patch, C) tokens of patch means."""
    c, h, w = x.shape
    if h % patch or w % patch:
        raise ContractError(f"Feature map {h}x{w} is not divisible by patch size {patch}")
    blocks = x.reshape(c, h // patch, patch, w // patch, patch)
    return blocks.mean(axis=(2, 4)).reshape(c, -1).T


def patch_unpool(tokens: np.ndarray, height: int, width: int, patch: int) -> np.ndarray:
    """(N, C) tokens -> (C, H, W) by nearest-neighbour expansion."""
    grid = tokens.T.reshape(tokens.shape[1], height // patch, width // patch)
    return np.repeat(np.repeat(grid, patch, axis=1), patch, axis=2)


def seeded_conv(rng: np.random.Generator, out_ch: int, in_ch: int, k: int) -> np.ndarray:
    return rng.standard_normal((out_ch, in_ch, k, k)) / np.sqrt(in_ch * k * k)


def seeded_linear(rng: np.random.Generator, out_dim: int, in_dim: int) -> np.ndarray:
    return rng.standard_normal((out_dim, in_dim)) / np.sqrt(in_dim)
