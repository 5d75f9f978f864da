"""
Condition vectors and the multi-conditional guidance combiner.
"""

from dataclasses import dataclass, replace
from typing import Callable, Optional, Sequence
import zlib

import numpy as np

from ..errors import ConfigError

__all__ = ["Condition", "GuidanceConfig", "guided_eps", "prompt_vector", "NULL"]


@dataclass(frozen=True)
class Condition:
    """
    A text condition vector c_T and a structural condition c_J.

    Either may be None, which stands for the null condition. The structural condition is either a
    per-frame guidance map stack (n, channels, H, W) or, for the analytic denoiser, a per-component
    weight vector.
    """
    text: Optional[np.ndarray] = None
    structural: Optional[np.ndarray] = None

    def without_text(self) -> "Condition":
        return replace(self, text=None)

    def without_structural(self) -> "Condition":
        return replace(self, structural=None)

    def select(self, rows: Sequence[int]) -> "Condition":
        """Restrict per-frame structural maps to the given frame rows."""
        if self.structural is None or self.structural.ndim != 4:
            return self
        return replace(self, structural=self.structural[list(rows)])

    def text_or_zeros(self, dim: int) -> np.ndarray:
        if self.text is None:
            return np.zeros(dim)
        if self.text.shape != (dim,):
            raise ConfigError(f"Text condition must have dimension {dim}, got {self.text.shape}")
        return self.text


NULL = Condition()


def prompt_vector(prompt: str, dim: int = 8) -> Optional[np.ndarray]:
    """Deterministic condition vector for a prompt string; the empty prompt is the null condition."""
    if prompt == "":
        return None
    rng = np.random.default_rng(zlib.crc32(prompt.encode("utf-8")))
    return rng.standard_normal(dim)


@dataclass(frozen=True)
class GuidanceConfig:
    s_T: float = 6.0
    s_J: float = 0.8

    def __post_init__(self):
        for name, value in (("s_T", self.s_T), ("s_J", self.s_J)):
            if not np.isfinite(value) or value < 0.0:
                raise ConfigError(f"Guidance scale {name} must be finite and >= 0, got {value}")


def guided_eps(x_t: np.ndarray, t: int, cond_full: Condition, cfg: GuidanceConfig,
               eps_fn: Callable[[np.ndarray, int, Condition], np.ndarray]) -> np.ndarray:
    """
    e(0,J) + s_T (e(T,J) - e(0,J)) + s_J (e(T,J) - e(T,0)), with exactly three denoiser calls.

    Grouped per evaluation so that (s_T, s_J) = (1, 0) and (0, 0) return a single evaluation unchanged.
    """
    e_joint = eps_fn(x_t, t, cond_full.without_text())
    e_full = eps_fn(x_t, t, cond_full)
    e_text = eps_fn(x_t, t, cond_full.without_structural())
    return (1.0 - cfg.s_T) * e_joint + (cfg.s_T + cfg.s_J) * e_full - cfg.s_J * e_text
