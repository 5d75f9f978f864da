"""
Anchor stage: anchor selection, pairwise DDIM inversion with feature capture, and pairwise editing
with plug-and-play injection, multi-conditional guidance and cross-pair fusion.
"""

import logging
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from ..diffusion.conditions import Condition, GuidanceConfig, guided_eps
from ..diffusion.schedule import NoiseSchedule, ddim_step, invert_one
from ..diffusion.taps import FeatureCache, TapKind
from ..errors import ConfigError, ContractError
from ..helper.config import Pairing
from ..helper.utilities import ordered_map

__all__ = ["AnchorSet", "InjectionConfig", "ConsistencyTrace", "sample_anchors", "pairs_for", "fuse_shared",
           "invert_anchors", "edit_anchors", "injection_window"]

log = logging.getLogger(__name__)
fusion_log = logging.getLogger("anchor_edit.fusion")


@dataclass(frozen=True)
class AnchorSet:
    frame_indices: tuple[int, ...]
    interval: int

    def __post_init__(self):
        idx = self.frame_indices
        if len(idx) < 2 or idx[0] != 0:
            raise ContractError(f"Anchor set must start at frame 0 and hold at least 2 anchors, got {idx}")
        gaps = np.diff(idx)
        if np.any(gaps <= 0) or np.any(gaps > self.interval):
            raise ContractError(f"Anchor gaps must be in [1, {self.interval}], got {list(gaps)}")

    def __len__(self) -> int:
        return len(self.frame_indices)

    @property
    def num_frames(self) -> int:
        return self.frame_indices[-1] + 1

    def segments(self) -> list[tuple[int, int]]:
        """Consecutive (start, end) anchor frame indices."""
        return list(zip(self.frame_indices[:-1], self.frame_indices[1:]))


def sample_anchors(num_frames: int, interval: int = 24) -> AnchorSet:
    """Every `interval`-th frame, plus the last frame when it is not already an anchor."""
    if num_frames < 2:
        raise ContractError(f"Need at least 2 frames to sample anchors, got {num_frames}")
    if interval < 1:
        raise ContractError(f"Anchor interval must be >= 1, got {interval}")
    indices = list(range(0, num_frames, interval))
    if indices[-1] != num_frames - 1:
        indices.append(num_frames - 1)
    return AnchorSet(tuple(indices), interval)


def injection_window(ratio: float, num_steps: int) -> int:
    """Number of sampling steps, counted from the noisiest, that receive injected features (round half up)."""
    return int(np.floor(ratio * num_steps + 0.5))


@dataclass(frozen=True)
class InjectionConfig:
    attn_ratio: float = 0.44
    conv_ratio: float = 0.65

    def __post_init__(self):
        for name, value in (("attn_ratio", self.attn_ratio), ("conv_ratio", self.conv_ratio)):
            if not 0.0 <= value <= 1.0:
                raise ConfigError(f"Injection ratio {name} must lie in [0, 1], got {value}")

    def kinds_at(self, step: int, num_steps: int) -> set[TapKind]:
        kinds = set()
        if step < injection_window(self.attn_ratio, num_steps):
            kinds.add(TapKind.ATTENTION_KV)
        if step < injection_window(self.conv_ratio, num_steps):
            kinds.add(TapKind.CONV_ACTIVATION)
        return kinds


@dataclass
class ConsistencyTrace:
    """Variance across anchors of per-anchor latent means, before (left copy) and after fusion."""
    timesteps: list[int] = field(default_factory=list)
    before: list[float] = field(default_factory=list)
    after: list[float] = field(default_factory=list)

    def record(self, t: int, before: Sequence[np.ndarray], after: Sequence[np.ndarray]):
        self.timesteps.append(t)
        self.before.append(float(np.var([x.mean() for x in before])))
        self.after.append(float(np.var([x.mean() for x in after])))

    def non_increasing_fraction(self) -> float:
        if not self.timesteps:
            return 1.0
        return float(np.mean(np.array(self.after) <= np.array(self.before)))


def pairs_for(num_anchors: int, pairing: Pairing = Pairing.FUSED) -> list[tuple[int, int]]:
    if num_anchors < 2:
        raise ContractError(f"Pairwise processing needs at least 2 anchors, got {num_anchors}")
    match Pairing(pairing):
        case Pairing.FUSED:
            return [(i, i + 1) for i in range(num_anchors - 1)]
        case Pairing.DISJOINT:
            pairs = [(i, i + 1) for i in range(0, num_anchors - 1, 2)]
            if num_anchors % 2:
                pairs.append((num_anchors - 1, num_anchors - 1))
            return pairs
        case Pairing.FRAMEWISE:
            return [(i, i) for i in range(num_anchors)]


def _slots(pair_outputs: Sequence[tuple[np.ndarray, np.ndarray]], pairs: Sequence[tuple[int, int]],
           num_anchors: int) -> list[list[np.ndarray]]:
    if len(pair_outputs) != len(pairs):
        raise ContractError(f"{len(pair_outputs)} pair outputs for {len(pairs)} pairs")
    slots: list[list[np.ndarray]] = [[] for _ in range(num_anchors)]
    for (i, j), (a, b) in zip(pairs, pair_outputs):
        if not (0 <= i < num_anchors and 0 <= j < num_anchors):
            raise ContractError(f"Pair ({i}, {j}) refers to an anchor outside [0, {num_anchors})")
        slots[i].append(a)
        slots[j].append(b)
    for k, copies in enumerate(slots):
        if not 1 <= len(copies) <= 2:
            raise ContractError(f"Anchor {k} appears in {len(copies)} pair slots, expected 1 or 2")
    return slots


def fuse_shared(pair_outputs: Sequence[tuple[np.ndarray, np.ndarray]], pairs: Sequence[tuple[int, int]],
                num_anchors: int, trace: Optional[ConsistencyTrace] = None, t: int = -1) -> list[np.ndarray]:
    """
    Per-anchor latents from per-pair outputs. An anchor held by two pair slots gets the mean of both
    copies (right element of the left pair first); an anchor held by one slot passes through.
    """
    slots = _slots(pair_outputs, pairs, num_anchors)
    fused = [copies[0] if len(copies) == 1 else (copies[0] + copies[1]) / 2.0 for copies in slots]
    if trace is not None:
        trace.record(t, [copies[0] for copies in slots], fused)
    if fusion_log.isEnabledFor(logging.INFO):
        shared = [k for k, copies in enumerate(slots) if len(copies) == 2]
        gap = max((float(np.max(np.abs(slots[k][0] - slots[k][1]))) for k in shared), default=0.0)
        fusion_log.info(f"t={t} fused={len(shared)} max_disagreement={gap:.6e}")
    return fused


def invert_anchors(anchors: np.ndarray, inv_cond: Condition, schedule: NoiseSchedule, denoiser, *,
                   pairing: Pairing = Pairing.FUSED, fixed_point_iters: int = 3, threads: int = 1,
                   trace: Optional[ConsistencyTrace] = None) -> tuple[np.ndarray, FeatureCache]:
    """
    Pairwise DDIM inversion of the anchor latents up to the noisiest step.

    Each pair's step from t evaluates the denoiser at t+1; its taps are captured under key t+1 from the
    last fixed-point evaluation, which is the key the sampling step from t+1 later injects.
    """
    n = len(anchors)
    pairs = pairs_for(n, pairing)
    cache = FeatureCache(len(pairs))
    x = list(anchors)

    for t in range(schedule.num_steps - 1):
        def invert_pair(p: int, t: int = t) -> tuple[np.ndarray, np.ndarray]:
            i, j = pairs[p]
            cond = inv_cond.select([i, j])
            taps = cache.capture(p)

            def eps_at_next(guess: np.ndarray) -> np.ndarray:
                return denoiser(guess, t + 1, cond, positions=[i, j], taps=taps)

            out = invert_one(np.stack([x[i], x[j]]), t, schedule, eps_at_next, fixed_point_iters)
            cache.mark(p, t + 1)
            return out[0], out[1]

        x = fuse_shared(ordered_map(invert_pair, range(len(pairs)), threads), pairs, n, trace, t + 1)
    log.info(f"Inverted {n} anchors over {schedule.num_steps - 1} steps with {len(pairs)} pairs")
    return np.stack(x), cache


def edit_anchors(noised: np.ndarray, cache: FeatureCache, edit_cond: Condition, cfg: GuidanceConfig,
                 inj: InjectionConfig, schedule: NoiseSchedule, denoiser, *, pairing: Pairing = Pairing.FUSED,
                 threads: int = 1, trace: Optional[ConsistencyTrace] = None) -> np.ndarray:
    """Denoise the inverted anchors pairwise under the editing condition; returns clean edited latents."""
    n = len(noised)
    pairs = pairs_for(n, pairing)
    if cache.num_pairs != len(pairs):
        raise ContractError(f"Feature cache holds {cache.num_pairs} pairs, the {Pairing(pairing)} pairing needs {len(pairs)}")
    cache.check_complete(range(1, schedule.num_steps))
    x = list(noised)

    for step, t in enumerate(range(schedule.num_steps - 1, 0, -1)):
        kinds = inj.kinds_at(step, schedule.num_steps)

        def edit_pair(p: int, t: int = t) -> tuple[np.ndarray, np.ndarray]:
            i, j = pairs[p]
            taps = cache.injector(p, kinds)

            def eps_fn(x_pair: np.ndarray, t: int, cond: Condition) -> np.ndarray:
                return denoiser(x_pair, t, cond, positions=[i, j], taps=taps)

            x_pair = np.stack([x[i], x[j]])
            eps = guided_eps(x_pair, t, edit_cond.select([i, j]), cfg, eps_fn)
            out = ddim_step(x_pair, eps, t, schedule)
            return out[0], out[1]

        x = fuse_shared(ordered_map(edit_pair, range(len(pairs)), threads), pairs, n, trace, t - 1)
    log.info(f"Edited {n} anchors")
    return np.stack(x)
