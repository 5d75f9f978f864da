"""
Frame embedders for the similarity metrics. Every embedding has unit L2 norm.
"""

from abc import ABC, abstractmethod
from pathlib import Path
from typing import Sequence

import numpy as np

from ..errors import ContractError
from ..formats.binary import read_embeddings
from ..vision.canny import sobel_gradients
from ..vision.image import as_gray_image

__all__ = ["Embedder", "ToyEmbedder", "ExternalEmbedder", "normalize_rows"]


def normalize_rows(vectors: np.ndarray) -> np.ndarray:
    """L2-normalize each row; all-zero rows become the first basis vector."""
    vectors = np.atleast_2d(np.asarray(vectors, dtype=np.float64))
    norms = np.linalg.norm(vectors, axis=1)
    out = np.zeros_like(vectors)
    nonzero = norms > 0.0
    out[nonzero] = vectors[nonzero] / norms[nonzero, None]
    out[~nonzero, 0] = 1.0
    return out


class Embedder(ABC):
    supports_text: bool = False

    @property
    @abstractmethod
    def dim(self) -> int:
        raise NotImplementedError

    @abstractmethod
    def embed_all(self, frames: Sequence[np.ndarray]) -> np.ndarray:
        """(n, dim) unit vectors, one per frame."""
        raise NotImplementedError


class ToyEmbedder(Embedder):
    """
    Grid-pooled grayscale (grid x grid block means) followed by a magnitude-weighted histogram of
    gradient orientations over [0, 2 pi).
    """

    def __init__(self, grid: int = 8, bins: int = 8):
        self.grid = grid
        self.bins = bins

    @property
    def dim(self) -> int:
        return self.grid * self.grid + self.bins

    def features(self, frame: np.ndarray) -> np.ndarray:
        gray = as_gray_image(frame)
        h, w = gray.shape
        if h < self.grid or w < self.grid:
            raise ContractError(f"Frame {h}x{w} is smaller than the {self.grid}x{self.grid} pooling grid")
        rows = np.array_split(np.arange(h), self.grid)
        cols = np.array_split(np.arange(w), self.grid)
        pooled = np.array([[gray[np.ix_(r, c)].mean() for c in cols] for r in rows]).ravel()

        gx, gy = sobel_gradients(gray)
        angle = np.arctan2(gy, gx) % (2.0 * np.pi)
        bin_index = np.minimum((angle / (2.0 * np.pi) * self.bins).astype(int), self.bins - 1)
        histogram = np.bincount(bin_index.ravel(), weights=np.hypot(gx, gy).ravel(), minlength=self.bins)
        return np.concatenate([pooled, histogram])

    def embed_all(self, frames: Sequence[np.ndarray]) -> np.ndarray:
        return normalize_rows(np.stack([self.features(f) for f in frames]))


class ExternalEmbedder(Embedder):
    """Precomputed per-frame vectors, e.g. from an image-text model run outside this package."""
    supports_text = True

    def __init__(self, vectors: np.ndarray):
        self.vectors = normalize_rows(vectors)

    @classmethod
    def from_file(cls, path: Path) -> "ExternalEmbedder":
        return cls(read_embeddings(path))

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    def embed_all(self, frames: Sequence[np.ndarray]) -> np.ndarray:
        if len(frames) != len(self.vectors):
            raise ContractError(f"Embedding file holds {len(self.vectors)} vectors for {len(frames)} frames")
        return self.vectors
