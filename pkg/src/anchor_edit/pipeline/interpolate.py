"""
Bidirectional interpolation between two edited anchors.

A forward trajectory (frame 0 clamped to the start anchor) and a reverse trajectory over the
reversed frame order (frame 0 clamped to the end anchor) start from the same noise. After every
step the two are blended per frame with weights (L - j) / L and j / L and both continue from the
blend.
"""

import logging
import time
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from ..diffusion.conditions import Condition, GuidanceConfig, guided_eps
from ..diffusion.schedule import NoiseSchedule, add_noise, check_same_shape, ddim_step, predict_x0
from ..errors import ContractError
from ..helper.config import InterpMode
from ..helper.utilities import ordered_map
from .controls import ControlEncoder, SegmentControls

__all__ = ["SegmentJob", "fusion_weights", "fuse_branches", "interpolate_segment"]

log = logging.getLogger(__name__)
timing_log = logging.getLogger("anchor_edit.timing")


@dataclass(frozen=True)
class SegmentJob:
    """
    One segment between consecutive anchors. `originals` covers both endpoints (L + 1 frames) and
    `noise` holds the shared initial noise, one latent per frame.
    """
    start: np.ndarray
    end: np.ndarray
    originals: np.ndarray
    noise: np.ndarray
    index: int = 0

    def __post_init__(self):
        check_same_shape(self.start, self.end, "segment anchors")
        if len(self.originals) < 2:
            raise ContractError(f"Segment {self.index} must span at least two frames, got {len(self.originals)}")
        if self.noise.shape != (len(self.originals),) + self.start.shape:
            raise ContractError(f"Segment noise shape {self.noise.shape} does not match "
                                f"{len(self.originals)} latents of shape {self.start.shape}")

    @property
    def length(self) -> int:
        return len(self.originals) - 1

    @classmethod
    def seeded(cls, start: np.ndarray, end: np.ndarray, originals: np.ndarray, seed: int,
               index: int = 0) -> "SegmentJob":
        if len(originals) < 2:
            raise ContractError(f"Segment {index} must span at least two frames, got {len(originals)}")
        rng = np.random.default_rng([seed, index])
        return cls(start, end, originals, rng.standard_normal((len(originals),) + start.shape), index)

    def reversed(self) -> "SegmentJob":
        return replace(self, start=self.end, end=self.start, originals=self.originals[::-1], noise=self.noise[::-1])


def fusion_weights(length: int) -> tuple[np.ndarray, np.ndarray]:
    """(alpha, beta) per frame; alpha falls from 1 to 0 and beta = j / L rises from 0 to 1."""
    j = np.arange(length + 1)
    return (length - j) / length, j / length


def fuse_branches(forward: np.ndarray, reverse: np.ndarray) -> np.ndarray:
    """Blend a forward stack with a reverse stack given in reversed frame order."""
    alpha, beta = fusion_weights(len(forward) - 1)
    return alpha[:, None, None, None] * forward + beta[:, None, None, None] * reverse[::-1]


class _Branch:
    def __init__(self, anchor: np.ndarray, noise: np.ndarray, positions: list[int], cond: Condition,
                 residuals: Optional[np.ndarray], denoiser, schedule: NoiseSchedule, cfg: GuidanceConfig):
        self.anchor = anchor
        self.noise = noise
        self.positions = positions
        self.cond = replace(cond, structural=residuals)
        self.denoiser = denoiser
        self.schedule = schedule
        self.cfg = cfg

    def clamp(self, z: np.ndarray, t: int) -> np.ndarray:
        z = z.copy()
        z[0] = add_noise(self.anchor, self.noise, t, self.schedule)
        return z

    def eps(self, z: np.ndarray, t: int) -> np.ndarray:
        def eps_fn(x: np.ndarray, t: int, cond: Condition) -> np.ndarray:
            return self.denoiser(x, t, Condition(text=cond.text), positions=self.positions, control=cond.structural)
        return guided_eps(z, t, self.cond, self.cfg, eps_fn)

    def step(self, z: np.ndarray, t: int) -> np.ndarray:
        z = self.clamp(z, t)
        return self.clamp(ddim_step(z, self.eps(z, t), t, self.schedule), t - 1)

    def readout(self, z: np.ndarray) -> np.ndarray:
        z = self.clamp(z, 0)
        x0 = predict_x0(z, self.eps(z, 0), 0, self.schedule)
        x0[0] = self.anchor
        return x0


def interpolate_segment(job: SegmentJob, controls: Optional[SegmentControls], schedule: NoiseSchedule,
                        denoiser, cfg: GuidanceConfig, cond: Condition = Condition(),
                        encoder: Optional[ControlEncoder] = None, mode: InterpMode = InterpMode.BIDIRECTIONAL,
                        threads: int = 1) -> list[np.ndarray]:
    """Interior frames 1 .. L-1 of the segment."""
    started = time.perf_counter()
    L = job.length
    if L == 1:
        return []
    mode = InterpMode(mode)

    fwd_res = rev_res = None
    if controls is not None and encoder is not None:
        if len(controls.forward) != L + 1 or len(controls.reverse) != L + 1:
            raise ContractError(f"Segment {job.index} has {L + 1} frames but controls for "
                                f"{len(controls.forward)}/{len(controls.reverse)}")
        fwd_res = encoder.residuals(controls.forward, threads)
        rev_res = encoder.residuals(controls.reverse, threads)

    forward = _Branch(job.start, job.noise[0], list(range(L + 1)), cond, fwd_res, denoiser, schedule, cfg)
    reverse = _Branch(job.end, job.noise[L], list(range(L, -1, -1)), cond, rev_res, denoiser, schedule, cfg)
    branches = {
        InterpMode.BIDIRECTIONAL: (forward, reverse),
        InterpMode.FORWARD: (forward,),
        InterpMode.REVERSE: (reverse,),
    }[mode]

    def combine(outputs: list[np.ndarray]) -> np.ndarray:
        if mode == InterpMode.BIDIRECTIONAL:
            return fuse_branches(outputs[0], outputs[1])
        if mode == InterpMode.FORWARD:
            return outputs[0]
        return outputs[0][::-1]

    def own_order(branch: _Branch, z: np.ndarray) -> np.ndarray:
        return z if branch is forward else z[::-1]

    z = job.noise
    for t in range(schedule.num_steps - 1, 0, -1):
        z = combine(ordered_map(lambda b: b.step(own_order(b, z), t), branches, threads))
    z = combine(ordered_map(lambda b: b.readout(own_order(b, z)), branches, threads))

    timing_log.info(f"segment={job.index} frames={L + 1} mode={mode} seconds={time.perf_counter() - started:.3f}")
    return [z[j] for j in range(1, L)]
