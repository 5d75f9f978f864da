"""
Edge and flow control signals for interpolation, and the seeded encoder that turns them into
feature residuals for the denoiser.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..diffusion.layers import conv2d, seeded_conv, seeded_linear
from ..errors import ContractError
from ..helper.utilities import ordered_map
from ..vision.canny import CannyParams, canny
from ..vision.flow import FlowParams, optical_flow, zero_flow

__all__ = ["ControlStack", "SegmentControls", "ControlEncoder", "encode_controls", "encode_segment_controls",
           "control_residual"]

ENCODER_LAYERS = 5
FUSION_LAYERS = 3


@dataclass(frozen=True)
class ControlStack:
    edges: np.ndarray  # (n, 1, H, W) in {0, 1}
    flows: np.ndarray  # (n, 2, H, W) pixels per frame
    strength: float = 1.0

    def __post_init__(self):
        if self.edges.ndim != 4 or self.edges.shape[1] != 1:
            raise ContractError(f"Edge maps must be (n, 1, H, W), got {self.edges.shape}")
        if self.flows.ndim != 4 or self.flows.shape[1] != 2:
            raise ContractError(f"Flow fields must be (n, 2, H, W), got {self.flows.shape}")
        if len(self.edges) != len(self.flows) or self.edges.shape[2:] != self.flows.shape[2:]:
            raise ContractError("Edge and flow stacks disagree on frame count or size")
        if not self.strength >= 0.0:
            raise ContractError(f"Control strength must be >= 0, got {self.strength}")

    def __len__(self) -> int:
        return len(self.edges)


@dataclass(frozen=True)
class SegmentControls:
    forward: ControlStack
    reverse: ControlStack

    def reversed(self) -> "SegmentControls":
        return SegmentControls(self.reverse, self.forward)


def encode_controls(frames: np.ndarray, canny_params: CannyParams = CannyParams(),
                    flow_params: FlowParams = FlowParams(), strength: float = 1.0, threads: int = 1) -> ControlStack:
    """Edge map of every frame and flow from each frame's predecessor; the first frame gets zero flow."""
    if len(frames) < 2:
        raise ContractError(f"Control encoding needs a segment of at least 2 frames, got {len(frames)}")
    edges = ordered_map(lambda f: canny(f, canny_params)[None].astype(np.float64), frames, threads)
    h, w = frames.shape[-2:]
    flows = [zero_flow(h, w)] + ordered_map(
        lambda j: optical_flow(frames[j - 1], frames[j], flow_params), range(1, len(frames)), threads)
    return ControlStack(np.stack(edges), np.stack(flows), strength)


def encode_segment_controls(frames: np.ndarray, canny_params: CannyParams = CannyParams(),
                            flow_params: FlowParams = FlowParams(), strength: float = 1.0,
                            threads: int = 1) -> SegmentControls:
    """Forward controls, and reverse controls recomputed on the reversed frame order."""
    return SegmentControls(
        encode_controls(frames, canny_params, flow_params, strength, threads),
        encode_controls(frames[::-1], canny_params, flow_params, strength, threads),
    )


@dataclass(frozen=True)
class _ConvEncoder:
    weights: tuple[np.ndarray, ...]
    biases: tuple[np.ndarray, ...]

    @classmethod
    def seeded(cls, rng: np.random.Generator, in_ch: int, width: int) -> "_ConvEncoder":
        weights = [seeded_conv(rng, width, in_ch, 3)] + [seeded_conv(rng, width, width, 3)
                                                         for _ in range(ENCODER_LAYERS - 1)]
        biases = [0.1 * rng.standard_normal(width) for _ in range(ENCODER_LAYERS)]
        return cls(tuple(weights), tuple(biases))

    def __call__(self, x: np.ndarray) -> np.ndarray:
        h = np.tanh(conv2d(x, self.weights[0], self.biases[0]))
        for weight, bias in zip(self.weights[1:], self.biases[1:]):
            h = h + np.tanh(conv2d(h, weight, bias))
        return h


class ControlEncoder:
    """
    Five-layer residual conv encoders for edges and flow, concatenated and fused per pixel by a
    three-layer MLP into `hidden` channels. Weights are seeded and frozen.
    """

    def __init__(self, seed: int = 0, hidden: int = 8, width: int = 8):
        rng = np.random.default_rng([seed, 1])
        self.hidden = hidden
        self.edge_encoder = _ConvEncoder.seeded(rng, 1, width)
        self.flow_encoder = _ConvEncoder.seeded(rng, 2, width)
        dims = [2 * width, width, width, hidden]
        self.mlp = [(seeded_linear(rng, dims[k + 1], dims[k]), np.zeros(dims[k + 1])) for k in range(FUSION_LAYERS)]

    def features(self, edge: np.ndarray, flow: np.ndarray) -> np.ndarray:
        h = np.concatenate([self.edge_encoder(edge), self.flow_encoder(flow)])
        for k, (weight, bias) in enumerate(self.mlp):
            h = np.einsum("oc,chw->ohw", weight, h) + bias[:, None, None]
            if k < FUSION_LAYERS - 1:
                h = np.tanh(h)
        return h

    def residuals(self, stack: ControlStack, threads: int = 1) -> Optional[np.ndarray]:
        """(n, hidden, H, W) residuals, or None when the stack has zero strength."""
        if stack.strength == 0.0:
            return None
        return np.stack(ordered_map(lambda j: control_residual(stack, j, self), range(len(stack)), threads))


def control_residual(stack: ControlStack, j: int, encoder: ControlEncoder) -> np.ndarray:
    return stack.strength * encoder.features(stack.edges[j], stack.flows[j])
