"""
A seeded toy pair network for noise prediction.

Per frame: conv features -> conditioning -> patch tokens -> self-attention + bidirectional attention ->
conv block -> eps. The input conv features carry only the latent; the text and time vectors enter
afterwards as per-channel biases, structural maps through a 1x1 projection, and control residuals are
added to the post-attention features. Weights are frozen after seeding.

Tap layers: 0 = input conv features (before conditioning), 1 = attention keys/values.
"""

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from ..errors import ContractError
from ..vision.image import to_gray
from .attention import AttentionWeights, attend, project_qkv
from .conditions import Condition
from .layers import conv2d, patch_pool, patch_unpool, seeded_conv, seeded_linear
from .taps import FeatureTaps, TapKind

__all__ = ["PairNetWeights", "PairNet", "PairNetSegment", "pairnet_eps", "PARAMETER_NAMES",
           "CONV_IN", "ATTENTION"]

CONV_IN = 0
ATTENTION = 1

TIME_FREQUENCIES = np.array([0.1, 0.01])

PARAMETER_NAMES = ("conv_in", "b_in", "text_proj", "struct_proj", "time_proj",
                   "w_q", "w_k", "w_v", "w_o", "conv_mid", "b_mid", "conv_out", "b_out")


def _time_features(t: int) -> np.ndarray:
    phase = t * TIME_FREQUENCIES
    return np.concatenate([np.sin(phase), np.cos(phase)])


@dataclass(frozen=True)
class PairNetWeights:
    seed: int
    latent_channels: int
    hidden: int
    text_dim: int
    struct_channels: int
    conv_in: np.ndarray
    b_in: np.ndarray
    text_proj: np.ndarray
    struct_proj: np.ndarray
    time_proj: np.ndarray
    attention: AttentionWeights
    conv_mid: np.ndarray
    b_mid: np.ndarray
    conv_out: np.ndarray
    b_out: np.ndarray

    @property
    def dims(self) -> tuple[int, int, int, int]:
        return (self.latent_channels, self.hidden, self.text_dim, self.struct_channels)

    @classmethod
    def seeded(cls, seed: int = 0, latent_channels: int = 3, hidden: int = 8, text_dim: int = 8,
               struct_channels: int = 1) -> "PairNetWeights":
        rng = np.random.default_rng(seed)
        c, d = latent_channels, hidden
        return cls(
            seed=seed, latent_channels=c, hidden=d, text_dim=text_dim, struct_channels=struct_channels,
            conv_in=seeded_conv(rng, d, c, 3),
            b_in=0.1 * rng.standard_normal(d),
            text_proj=seeded_linear(rng, d, text_dim),
            struct_proj=seeded_linear(rng, d, struct_channels),
            time_proj=0.1 * seeded_linear(rng, d, 2 * len(TIME_FREQUENCIES)),
            attention=AttentionWeights.seeded(rng, d),
            conv_mid=seeded_conv(rng, d, d, 3),
            b_mid=0.1 * rng.standard_normal(d),
            conv_out=seeded_conv(rng, c, d, 1),
            b_out=np.zeros(c),
        )

    def parameters(self) -> dict[str, np.ndarray]:
        values = {name: getattr(self, name) for name in PARAMETER_NAMES if hasattr(self, name)}
        values.update(w_q=self.attention.w_q, w_k=self.attention.w_k, w_v=self.attention.w_v, w_o=self.attention.w_o)
        return {name: values[name] for name in PARAMETER_NAMES}

    @staticmethod
    def parameter_shapes(dims: Sequence[int]) -> dict[str, tuple]:
        c, d, text_dim, struct_channels = dims
        return {
            "conv_in": (d, c, 3, 3), "b_in": (d,), "text_proj": (d, text_dim),
            "struct_proj": (d, struct_channels), "time_proj": (d, 2 * len(TIME_FREQUENCIES)),
            "w_q": (d, d), "w_k": (d, d), "w_v": (d, d), "w_o": (d, d),
            "conv_mid": (d, d, 3, 3), "b_mid": (d,), "conv_out": (c, d, 1, 1), "b_out": (c,),
        }

    @classmethod
    def from_parameters(cls, seed: int, dims: Sequence[int], params: dict[str, np.ndarray]) -> "PairNetWeights":
        c, d, text_dim, struct_channels = dims
        attention = AttentionWeights(params["w_q"], params["w_k"], params["w_v"], params["w_o"])
        rest = {name: params[name] for name in PARAMETER_NAMES if not name.startswith("w_")}
        return cls(seed=seed, latent_channels=c, hidden=d, text_dim=text_dim, struct_channels=struct_channels,
                   attention=attention, **rest)


class PairNet:
    """Frozen pair noise predictor; immutable after construction, safe to share between threads."""

    def __init__(self, weights: PairNetWeights, patch: int = 8):
        self.weights = weights
        self.patch = patch

    @property
    def hidden(self) -> int:
        return self.weights.hidden

    def structural_guide(self, frames: np.ndarray) -> np.ndarray:
        """Per-frame luma maps (n, 1, H, W) used as the structural condition."""
        return np.stack([to_gray(f)[None] for f in frames])

    def _struct_rows(self, cond: Condition, n: int) -> list[Optional[np.ndarray]]:
        s = cond.structural
        if s is None:
            return [None] * n
        if s.ndim == 3:
            return [s] * n
        if s.ndim != 4 or len(s) != n:
            raise ContractError(f"Structural maps must be (C, H, W) or ({n}, C, H, W), got {s.shape}")
        return list(s)

    def features(self, x: np.ndarray) -> np.ndarray:
        """Input conv features of one latent; the injectable spatial layer."""
        w = self.weights
        if x.ndim != 3 or x.shape[0] != w.latent_channels:
            raise ContractError(f"Expected latent with {w.latent_channels} channels, got {x.shape}")
        return conv2d(x, w.conv_in, w.b_in)

    def condition(self, feat: np.ndarray, t: int, text: np.ndarray, struct: Optional[np.ndarray]) -> np.ndarray:
        w = self.weights
        pre = feat + (w.text_proj @ text + w.time_proj @ _time_features(t))[:, None, None]
        if struct is not None:
            if struct.shape != (w.struct_channels,) + feat.shape[1:]:
                raise ContractError(f"Structural map shape {struct.shape} does not match features {feat.shape}")
            pre = pre + conv2d(struct, w.struct_proj[:, :, None, None])
        return np.tanh(pre)

    def encode(self, x: np.ndarray, t: int, text: np.ndarray, struct: Optional[np.ndarray]) -> np.ndarray:
        return self.condition(self.features(x), t, text, struct)

    def decode(self, h: np.ndarray) -> np.ndarray:
        w = self.weights
        return conv2d(h, w.conv_out, w.b_out)

    def mix(self, h: np.ndarray, attended: np.ndarray, control: Optional[np.ndarray]) -> np.ndarray:
        w = self.weights
        g = h + patch_unpool(attended, h.shape[1], h.shape[2], self.patch)
        if control is not None:
            if control.shape != h.shape:
                raise ContractError(f"Control residual shape {control.shape} does not match features {h.shape}")
            g = g + control
        return np.tanh(conv2d(g, w.conv_mid, w.b_mid))

    def attend_one(self, qkv_i: tuple, qkv_j: tuple) -> np.ndarray:
        """Frame i's self-attention plus its attention over frame j, through the output projection."""
        q_i, k_i, v_i = qkv_i
        _, k_j, v_j = qkv_j
        return (attend(q_i, k_i, v_i) + attend(q_i, k_j, v_j)) @ self.weights.attention.w_o

    def _qkv(self, h: np.ndarray) -> tuple:
        return project_qkv(patch_pool(h, self.patch), self.weights.attention)

    def __call__(self, latents: np.ndarray, t: int, cond: Condition, *, positions=None,
                 taps: Optional[FeatureTaps] = None, control: Optional[np.ndarray] = None) -> np.ndarray:
        if latents.ndim != 4 or len(latents) != 2:
            raise ContractError(f"Pair network expects a (2, C, H, W) pair, got {latents.shape}")
        if latents[0].shape != latents[1].shape:
            raise ContractError("Both latents of a pair must have the same shape")
        text = cond.text_or_zeros(self.weights.text_dim)
        structs = self._struct_rows(cond, 2)
        controls = [None, None] if control is None else list(control)

        feat = np.stack([self.features(x) for x in latents])
        if taps is not None:
            feat = taps.tap(CONV_IN, TapKind.CONV_ACTIVATION, t, feat)
        h = np.stack([self.condition(f, t, text, s) for f, s in zip(feat, structs)])
        qkv = [self._qkv(hf) for hf in h]
        if taps is not None:
            kv = taps.tap(ATTENTION, TapKind.ATTENTION_KV, t, np.stack([np.stack([k, v]) for _, k, v in qkv]))
            qkv = [(q, kv[f, 0], kv[f, 1]) for f, (q, _, _) in enumerate(qkv)]
        attended = [self.attend_one(qkv[0], qkv[1]), self.attend_one(qkv[1], qkv[0])]
        return np.stack([self.decode(self.mix(h[f], attended[f], controls[f])) for f in range(2)])


def pairnet_eps(pair: tuple[np.ndarray, np.ndarray], t: int, cond: Condition, net: PairNet,
                taps: Optional[FeatureTaps] = None,
                control: Optional[np.ndarray] = None) -> tuple[np.ndarray, np.ndarray]:
    eps = net(np.stack(pair), t, cond, taps=taps, control=control)
    return eps[0], eps[1]


class PairNetSegment:
    """
    The pair network applied to a segment: every frame is paired with row 0, the branch's
    conditioning anchor, and keeps its own half of the pair output.
    """

    def __init__(self, net: PairNet):
        self.net = net

    @property
    def hidden(self) -> int:
        return self.net.hidden

    def structural_guide(self, frames: np.ndarray) -> np.ndarray:
        return self.net.structural_guide(frames)

    def __call__(self, latents: np.ndarray, t: int, cond: Condition, *, positions=None,
                 taps=None, control: Optional[np.ndarray] = None) -> np.ndarray:
        net = self.net
        n = len(latents)
        text = cond.text_or_zeros(net.weights.text_dim)
        structs = net._struct_rows(cond, n)
        controls = [None] * n if control is None else list(control)
        h = [net.encode(x, t, text, s) for x, s in zip(latents, structs)]
        qkv = [net._qkv(hf) for hf in h]
        return np.stack([
            net.decode(net.mix(h[r], net.attend_one(qkv[r], qkv[0]), controls[r]))
            for r in range(n)
        ])
