"""
Evaluation metrics for edited videos. Similarities are cosine means reported x100; error metrics are
mean absolute differences reported x100.
"""

import json
import logging
from dataclasses import asdict, dataclass
from typing import Optional, Sequence

import numpy as np

from ..errors import ContractError, UnsupportedMetricError
from ..helper.utilities import ordered_map
from ..vision.canny import CannyParams, canny
from ..vision.flow import FlowParams, optical_flow, warp
from ..vision.image import to_gray
from .embedders import Embedder, normalize_rows

__all__ = ["LONG_GAP", "sim_star", "sim_dagger", "sim_adjacent", "warp_error", "canny_error", "entropy",
           "entropy_mean", "text_sim", "MetricsReport", "compute_report"]

log = logging.getLogger(__name__)

LONG_GAP = 24


def _cosines(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.sum(a * b, axis=1)


def sim_star(frames: Sequence[np.ndarray], embedder: Embedder, gap: int = LONG_GAP) -> float:
    """Mean similarity of frames `gap` apart."""
    if len(frames) < gap + 1:
        raise ContractError(f"Long-range similarity needs at least {gap + 1} frames, got {len(frames)}")
    e = embedder.embed_all(frames)
    return 100.0 * float(np.mean(_cosines(e[:-gap], e[gap:])))


def sim_dagger(frames: Sequence[np.ndarray], embedder: Embedder, gap: int = LONG_GAP) -> float:
    """Mean similarity of every `gap`-th frame to the first frame."""
    if len(frames) < gap + 1:
        raise ContractError(f"First-frame similarity needs at least {gap + 1} frames, got {len(frames)}")
    e = embedder.embed_all(frames)
    sampled = e[gap::gap]
    return 100.0 * float(np.mean(sampled @ e[0]))


def sim_adjacent(frames: Sequence[np.ndarray], embedder: Embedder) -> float:
    if len(frames) < 2:
        raise ContractError(f"Adjacent-frame similarity needs at least 2 frames, got {len(frames)}")
    e = embedder.embed_all(frames)
    return 100.0 * float(np.mean(_cosines(e[:-1], e[1:])))


def _check_pairs(original: Sequence[np.ndarray], edited: Sequence[np.ndarray], minimum: int):
    if len(original) != len(edited):
        raise ContractError(f"Original and edited videos differ in length: {len(original)} vs {len(edited)}")
    if len(original) < minimum:
        raise ContractError(f"Need at least {minimum} frames, got {len(original)}")
    for a, b in zip(original, edited):
        if np.shape(a) != np.shape(b):
            raise ContractError(f"Frame shape mismatch: {np.shape(a)} vs {np.shape(b)}")


def _frame_warp_error(original: Sequence[np.ndarray], edited: Sequence[np.ndarray], i: int,
                      params: FlowParams) -> Optional[float]:
    forward = optical_flow(original[i], original[i + 1], params)
    backward = optical_flow(original[i + 1], original[i], params)
    warped, valid = warp(np.asarray(edited[i + 1]), forward)
    backward_at, _ = warp(backward, forward)
    consistent = np.hypot(*(forward + backward_at)) < 1.0
    mask = valid & consistent
    if not mask.any():
        log.warning(f"Warp error: no consistent pixels between frames {i} and {i + 1}, skipping")
        return None
    residual = np.abs(warped - np.asarray(edited[i]))
    if residual.ndim == 3:
        residual = residual.mean(axis=0)
    return float(residual[mask].mean())


def warp_error(original: Sequence[np.ndarray], edited: Sequence[np.ndarray], params: FlowParams = FlowParams(),
               threads: int = 1) -> float:
    """
    Residual between each edited frame and its successor warped back along the original video's flow,
    over pixels that are in bounds and forward-backward consistent (< 1 px).
    """
    _check_pairs(original, edited, 2)
    errors = ordered_map(lambda i: _frame_warp_error(original, edited, i, params), range(len(original) - 1), threads)
    errors = [e for e in errors if e is not None]
    if not errors:
        raise ContractError("Warp error undefined: every frame pair has an empty consistency mask")
    return 100.0 * float(np.mean(errors))


def canny_error(original: Sequence[np.ndarray], edited: Sequence[np.ndarray], params: CannyParams = CannyParams(),
                threads: int = 1) -> float:
    _check_pairs(original, edited, 1)

    def frame_error(i: int) -> float:
        a = canny(original[i], params).astype(np.float64)
        b = canny(edited[i], params).astype(np.float64)
        return float(np.mean(np.abs(a - b)))

    return 100.0 * float(np.mean(ordered_map(frame_error, range(len(original)), threads)))


def entropy(frame: np.ndarray) -> float:
    """Shannon entropy in bits of the 256-bin grayscale histogram."""
    gray = np.asarray(to_gray(np.asarray(frame, dtype=np.float64)))
    if gray.size == 0:
        raise ContractError("Entropy of an empty frame")
    levels = np.clip(np.round(gray * 255.0), 0, 255).astype(int)
    p = np.bincount(levels.ravel(), minlength=256) / levels.size
    p = p[p > 0]
    return float(-np.sum(p * np.log2(p))) + 0.0


def entropy_mean(frames: Sequence[np.ndarray]) -> float:
    return float(np.mean([entropy(f) for f in frames]))


def text_sim(frames: Sequence[np.ndarray], prompt_embedding: np.ndarray, embedder: Embedder) -> float:
    if not embedder.supports_text:
        raise UnsupportedMetricError(f"{type(embedder).__name__} has no text embedding space")
    prompt = normalize_rows(prompt_embedding)[0]
    if prompt.shape != (embedder.dim,):
        raise ContractError(f"Prompt embedding has dimension {prompt.shape[0]}, embedder has {embedder.dim}")
    return 100.0 * float(np.mean(embedder.embed_all(frames) @ prompt))


@dataclass
class MetricsReport:
    sim_star: Optional[float]
    sim_dagger: Optional[float]
    sim_adjacent: float
    warp_error: float
    canny_error: float
    entropy_mean: float
    text_sim: Optional[float] = None
    sim_adjacent_structural: Optional[float] = None

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def to_lines(self) -> str:
        return "".join(f"{k}={'' if v is None else v}\n" for k, v in self.to_dict().items())


def compute_report(original: Sequence[np.ndarray], edited: Sequence[np.ndarray], embedder: Embedder, *,
                   structural_embedder: Optional[Embedder] = None, prompt_embedding: Optional[np.ndarray] = None,
                   canny_params: CannyParams = CannyParams(), flow_params: FlowParams = FlowParams(),
                   threads: int = 1) -> MetricsReport:
    """All metrics of the edited video; long-range similarities are None for clips shorter than 25 frames."""
    long_enough = len(edited) >= LONG_GAP + 1
    if not long_enough:
        log.warning(f"Only {len(edited)} frames; skipping long-range similarities")
    return MetricsReport(
        sim_star=sim_star(edited, embedder) if long_enough else None,
        sim_dagger=sim_dagger(edited, embedder) if long_enough else None,
        sim_adjacent=sim_adjacent(edited, embedder),
        warp_error=warp_error(original, edited, flow_params, threads),
        canny_error=canny_error(original, edited, canny_params, threads),
        entropy_mean=entropy_mean(edited),
        text_sim=text_sim(edited, prompt_embedding, embedder) if prompt_embedding is not None else None,
        sim_adjacent_structural=(sim_adjacent(edited, structural_embedder)
                                 if structural_embedder is not None else None),
    )
