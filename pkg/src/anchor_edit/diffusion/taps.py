"""
Feature taps for plug-and-play injection.

A capture run records attention keys/values and conv activations per (layer, kind, timestep); an
injection run replaces the locally computed tensors with the recorded ones.
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Optional

import numpy as np

from ..errors import ContractError

__all__ = ["TapKind", "TapMode", "TapKey", "FeatureTaps", "FeatureCache"]


class TapKind(Enum):
    ATTENTION_KV = "attention_kv"
    CONV_ACTIVATION = "conv_activation"


class TapMode(Enum):
    CAPTURE = "capture"
    INJECT = "inject"


@dataclass(frozen=True)
class TapKey:
    layer: int
    kind: TapKind
    timestep: int

    def __str__(self):
        return f"layer={self.layer}, kind={self.kind.value}, timestep={self.timestep}"


@dataclass
class FeatureTaps:
    mode: TapMode
    store: dict[TapKey, np.ndarray] = field(default_factory=dict)
    kinds: frozenset = frozenset(TapKind)

    def tap(self, layer: int, kind: TapKind, timestep: int, value: np.ndarray) -> np.ndarray:
        if kind not in self.kinds:
            return value
        key = TapKey(layer, kind, timestep)
        if self.mode == TapMode.CAPTURE:
            self.store[key] = value.copy()
            return value
        if key not in self.store:
            raise ContractError(f"No captured feature for layer {layer} at timestep {timestep} ({kind.value})")
        return self.store[key]

    def restricted(self, kinds: Iterable[TapKind]) -> Optional["FeatureTaps"]:
        """Injection view limited to some kinds; None when nothing is left to inject."""
        kinds = frozenset(kinds)
        if not kinds:
            return None
        return FeatureTaps(self.mode, self.store, kinds)


class FeatureCache:
    """Captured taps of an inversion run, one `FeatureTaps` store per pair."""

    def __init__(self, num_pairs: int):
        self.num_pairs = num_pairs
        self._pairs = [FeatureTaps(TapMode.CAPTURE) for _ in range(num_pairs)]
        self._timesteps: list[set[int]] = [set() for _ in range(num_pairs)]

    def capture(self, pair: int) -> FeatureTaps:
        return self._pairs[pair]

    def mark(self, pair: int, timestep: int):
        self._timesteps[pair].add(timestep)

    def timesteps(self, pair: int) -> set[int]:
        return set(self._timesteps[pair])

    def check_complete(self, timesteps: Iterable[int]):
        needed = set(timesteps)
        for pair, have in enumerate(self._timesteps):
            missing = sorted(needed - have)
            if missing:
                raise ContractError(f"Feature cache for pair {pair} is missing timestep {missing[0]}")

    def injector(self, pair: int, kinds: Iterable[TapKind]) -> Optional[FeatureTaps]:
        if not 0 <= pair < self.num_pairs:
            raise ContractError(f"Feature cache has no pair {pair}")
        return FeatureTaps(TapMode.INJECT, self._pairs[pair].store).restricted(kinds)

    def to_arrays(self) -> dict[str, np.ndarray]:
        arrays = {"num_pairs": np.array(self.num_pairs)}
        for pair, taps in enumerate(self._pairs):
            arrays[f"steps/{pair}"] = np.array(sorted(self._timesteps[pair]), dtype=np.int64)
            for key, value in taps.store.items():
                arrays[f"tap/{pair}/{key.layer}/{key.kind.value}/{key.timestep}"] = value
        return arrays

    @classmethod
    def from_arrays(cls, arrays) -> "FeatureCache":
        cache = cls(int(arrays["num_pairs"]))
        for name in arrays:
            parts = name.split("/")
            if parts[0] == "steps":
                cache._timesteps[int(parts[1])] = set(int(t) for t in arrays[name])
            elif parts[0] == "tap":
                pair, layer, kind, timestep = int(parts[1]), int(parts[2]), TapKind(parts[3]), int(parts[4])
                cache._pairs[pair].store[TapKey(layer, kind, timestep)] = np.asarray(arrays[name])
        return cache
