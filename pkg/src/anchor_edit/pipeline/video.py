"""
End-to-end driver: anchors -> inversion -> editing -> per-segment controls and interpolation,
streamed one segment batch at a time.
"""

import logging
from contextlib import contextmanager
from dataclasses import dataclass
from typing import Iterator, Optional, Protocol, Sequence

import numpy as np

from ..diffusion.analytic import AnalyticDenoiser, GaussianMixture
from ..diffusion.conditions import Condition, prompt_vector
from ..diffusion.pairnet import PairNet, PairNetSegment, PairNetWeights
from ..errors import AnchorEditError, StageError
from ..helper.config import DenoiserKind, PipelineConfig
from ..helper.utilities import ordered_map
from .anchors import AnchorSet, ConsistencyTrace, InjectionConfig, edit_anchors, invert_anchors, sample_anchors
from .controls import ControlEncoder, encode_segment_controls
from .interpolate import SegmentJob, interpolate_segment

__all__ = ["FrameSource", "PipelineRuntime", "run_pipeline", "edit_anchor_frames", "interpolate_video", "stage"]

log = logging.getLogger(__name__)


class FrameSource(Protocol):
    def __len__(self) -> int: ...
    def __getitem__(self, index: int) -> np.ndarray: ...


@contextmanager
def stage(name: str, segment: Optional[int] = None):
    """
    Re-raise library errors inside the block as a StageError naming the stage and segment.
    """
    try:
        yield
    except StageError:
        raise
    except AnchorEditError as err:
        raise StageError(name, segment, err) from err


@dataclass(frozen=True)
class PipelineRuntime:
    """Everything derived from a PipelineConfig that the stages need."""
    config: PipelineConfig
    net: Optional[PairNet]
    encoder: Optional[ControlEncoder]

    @classmethod
    def from_config(cls, config: PipelineConfig, weights: Optional[PairNetWeights] = None) -> "PipelineRuntime":
        if config.denoiser == DenoiserKind.ANALYTIC:
            return cls(config, None, None)
        if weights is None:
            weights = PairNetWeights.seeded(config.weights_seed, hidden=config.hidden, text_dim=config.text_dim)
        encoder = ControlEncoder(config.weights_seed, hidden=weights.hidden) if config.control_strength > 0.0 else None
        return cls(config, PairNet(weights, config.patch), encoder)

    @property
    def schedule(self):
        return self.config.schedule()

    @property
    def injection(self) -> InjectionConfig:
        return InjectionConfig(self.config.attn_ratio, self.config.conv_ratio)

    def anchor_denoiser(self, anchor_frames: np.ndarray):
        if self.net is not None:
            return self.net
        return AnalyticDenoiser(self.schedule, self._mixtures(anchor_frames))

    def segment_denoiser(self, originals: np.ndarray):
        if self.net is not None:
            return PairNetSegment(self.net)
        return AnalyticDenoiser(self.schedule, self._mixtures(originals))

    def _mixtures(self, frames: np.ndarray) -> list[GaussianMixture]:
        return [GaussianMixture.single(f, self.config.prior_variance) for f in frames]

    def text(self, prompt: str) -> Optional[np.ndarray]:
        return prompt_vector(prompt, self.config.text_dim)

    def conditions(self, anchor_frames: np.ndarray) -> tuple[Condition, Condition]:
        """(inversion condition, editing condition) over the anchors."""
        structural = self.net.structural_guide(anchor_frames) if self.net is not None else None
        return (Condition(self.text(self.config.inv_prompt), structural),
                Condition(self.text(self.config.edit_prompt), structural))

    def edit_condition(self) -> Condition:
        return Condition(self.text(self.config.edit_prompt))


def _read(frames: FrameSource, indices: Sequence[int]) -> np.ndarray:
    return np.stack([frames[i] for i in indices])


def interpolate_video(frames: FrameSource, anchors: AnchorSet, edited: np.ndarray,
                      runtime: PipelineRuntime) -> Iterator[np.ndarray]:
    """Yield the full edited video: edited anchors at anchor positions and interpolated frames between."""
    config = runtime.config
    segments = anchors.segments()
    cond = runtime.edit_condition()

    def run_segment(s: int) -> list[np.ndarray]:
        a, b = segments[s]
        originals = _read(frames, range(a, b + 1))
        controls = None
        if runtime.encoder is not None:
            with stage("controls", s):
                controls = encode_segment_controls(originals, config.canny_params(), config.flow_params(),
                                                   config.control_strength)
        with stage("interpolate", s):
            job = SegmentJob.seeded(edited[s], edited[s + 1], originals, config.noise_seed, s)
            return interpolate_segment(job, controls, runtime.schedule, runtime.segment_denoiser(originals),
                                       config.guidance(), cond, runtime.encoder, config.interp_mode)

    yield edited[0]
    batch = max(config.threads, 1)
    for first in range(0, len(segments), batch):
        chunk = range(first, min(first + batch, len(segments)))
        for s, interior in zip(chunk, ordered_map(run_segment, chunk, config.threads)):
            yield from interior
            yield edited[s + 1]
            log.info(f"Segment {s + 1}/{len(segments)} done")


def edit_anchor_frames(frames: FrameSource, config: PipelineConfig, weights: Optional[PairNetWeights] = None,
                       trace: Optional[ConsistencyTrace] = None) -> tuple[AnchorSet, np.ndarray, np.ndarray]:
    """Sample, invert and edit the anchors; returns (anchors, original anchor frames, edited anchor latents)."""
    runtime = PipelineRuntime.from_config(config, weights)
    with stage("anchors"):
        anchors = sample_anchors(len(frames), config.K)
        anchor_frames = _read(frames, anchors.frame_indices)
        inv_cond, edit_cond = runtime.conditions(anchor_frames)
        denoiser = runtime.anchor_denoiser(anchor_frames)
    log.info(f"{len(frames)} frames, {len(anchors)} anchors, {len(anchors) - 1} segments")
    with stage("invert"):
        noised, cache = invert_anchors(anchor_frames, inv_cond, runtime.schedule, denoiser,
                                       pairing=config.pairing, fixed_point_iters=config.inversion_iters,
                                       threads=config.threads, trace=trace)
    with stage("edit"):
        edited = edit_anchors(noised, cache, edit_cond, config.guidance(), runtime.injection, runtime.schedule,
                              denoiser, pairing=config.pairing, threads=config.threads, trace=trace)
    return anchors, anchor_frames, edited


def run_pipeline(frames: FrameSource, config: PipelineConfig, weights: Optional[PairNetWeights] = None,
                 trace: Optional[ConsistencyTrace] = None) -> Iterator[np.ndarray]:
    """Edit a whole video; yields exactly len(frames) output frames in order."""
    anchors, _, edited = edit_anchor_frames(frames, config, weights, trace)
    yield from interpolate_video(frames, anchors, edited, PipelineRuntime.from_config(config, weights))
