"""
Seeded synthetic videos for tests and demos, shaped (n, 3, height, width). Every fixture is
quantized to 8 bits so that a save/load cycle through PPM is lossless.
"""

from enum import Enum
from typing import Callable

import numpy as np

from ..errors import ConfigError

__all__ = ["FixtureKind", "texture", "texture_with_phases", "translating_texture", "translating_shapes",
           "mixing_scenes", "static_scene", "make_fixture", "quantize"]

TINT = np.array([1.0, 0.9, 0.8])


class FixtureKind(Enum):
    TRANSLATING = "translating"
    SHAPES = "shapes"
    MIXING = "mixing"
    STATIC = "static"

    def __str__(self):
        return self.value


def quantize(frames: np.ndarray) -> np.ndarray:
    return np.round(np.clip(frames, 0.0, 1.0) * 255.0) / 255.0


def texture_with_phases(xx: np.ndarray, yy: np.ndarray, p: np.ndarray) -> np.ndarray:
    """Smooth periodic texture in [0.05, 0.95]; 16-pixel periods keep 1-pixel motion in the linear regime."""
    return (0.5
            + 0.2 * np.sin(2.0 * np.pi * xx / 16.0 + p[0])
            + 0.15 * np.sin(2.0 * np.pi * yy / 16.0 + p[1])
            + 0.1 * np.sin(2.0 * np.pi * (xx + yy) / 32.0 + p[2]))


def texture(xx: np.ndarray, yy: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    return texture_with_phases(xx, yy, rng.uniform(0.0, 2.0 * np.pi, size=3))


def _grid(height: int, width: int) -> tuple[np.ndarray, np.ndarray]:
    yy, xx = np.mgrid[0:height, 0:width].astype(np.float64)
    return yy, xx


def _tinted(gray: np.ndarray) -> np.ndarray:
    return TINT[:, None, None] * gray[None]


def translating_texture(num_frames: int, height: int = 64, width: int = 64, seed: int = 0,
                        shift: float = 1.0) -> np.ndarray:
    """A full-frame texture moving `shift` pixels right per frame."""
    yy, xx = _grid(height, width)
    phases = np.random.default_rng(seed).uniform(0.0, 2.0 * np.pi, size=3)
    frames = [_tinted(texture_with_phases(xx - j * shift, yy, phases)) for j in range(num_frames)]
    return quantize(np.stack(frames))


def translating_shapes(num_frames: int, height: int = 64, width: int = 64, seed: int = 0) -> np.ndarray:
    """A bright square moving right and a darker disc moving left over a flat background, one pixel per frame."""
    rng = np.random.default_rng(seed)
    background = rng.uniform(0.1, 0.3)
    side = max(min(height, width) // 4, 1)
    radius = max(min(height, width) // 8, 1)
    x0 = int(rng.integers(0, max(width // 2, 1)))
    y0 = int(rng.integers(0, max(height // 2, 1)))
    yy, xx = _grid(height, width)
    frames = []
    for j in range(num_frames):
        gray = np.full((height, width), background)
        sx = (x0 + j) % width
        gray[(xx >= sx) & (xx < sx + side) & (yy >= y0) & (yy < y0 + side)] = 0.9
        cx = (width - 1 - x0 - j) % width
        gray[(xx - cx) ** 2 + (yy - height * 3 // 4) ** 2 <= radius ** 2] = 0.6
        frames.append(_tinted(gray))
    return quantize(np.stack(frames))


def mixing_scenes(num_frames: int, height: int = 64, width: int = 64, seed: int = 0) -> np.ndarray:
    """Cross-fade from one seeded texture to another over the length of the clip."""
    rng = np.random.default_rng(seed)
    yy, xx = _grid(height, width)
    first = texture(xx, yy, rng)
    second = 1.0 - texture(yy, xx, rng)
    frames = []
    for j in range(num_frames):
        w = j / max(num_frames - 1, 1)
        frames.append(_tinted((1.0 - w) * first + w * second))
    return quantize(np.stack(frames))


def static_scene(num_frames: int, height: int = 64, width: int = 64, seed: int = 0) -> np.ndarray:
    yy, xx = _grid(height, width)
    frame = _tinted(texture(xx, yy, np.random.default_rng(seed)))
    return quantize(np.repeat(frame[None], num_frames, axis=0))


_FIXTURES: dict[FixtureKind, Callable[..., np.ndarray]] = {
    FixtureKind.TRANSLATING: translating_texture,
    FixtureKind.SHAPES: translating_shapes,
    FixtureKind.MIXING: mixing_scenes,
    FixtureKind.STATIC: static_scene,
}


def make_fixture(kind: FixtureKind | str, num_frames: int, height: int = 64, width: int = 64,
                 seed: int = 0) -> np.ndarray:
    if num_frames < 1 or height < 1 or width < 1:
        raise ConfigError(f"Fixture needs at least one frame of positive size, got {num_frames} x {height}x{width}")
    return _FIXTURES[FixtureKind(kind)](num_frames, height=height, width=width, seed=seed)
