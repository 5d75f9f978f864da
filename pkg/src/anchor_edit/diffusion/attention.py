"""
Bidirectional attention between the two frames of a pair.

Both frames use the same Q/K/V projections; each frame queries its partner's keys and values and
the result is added to its own self-attention output.
"""

from dataclasses import dataclass

import numpy as np
from scipy.special import softmax

from ..errors import ContractError
from .layers import seeded_linear

__all__ = ["AttentionWeights", "project_qkv", "attend", "bidir_attention", "bidir_attention_qkv"]


@dataclass(frozen=True)
class AttentionWeights:
    w_q: np.ndarray
    w_k: np.ndarray
    w_v: np.ndarray
    w_o: np.ndarray

    @property
    def token_dim(self) -> int:
        return self.w_q.shape[0]

    @classmethod
    def seeded(cls, rng: np.random.Generator, token_dim: int) -> "AttentionWeights":
        return cls(*(seeded_linear(rng, token_dim, token_dim) for _ in range(4)))


def project_qkv(z: np.ndarray, weights: AttentionWeights) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    if z.ndim != 2 or z.shape[1] != weights.token_dim:
        raise ContractError(f"Tokens must have shape (N, {weights.token_dim}), got {z.shape}")
    return z @ weights.w_q, z @ weights.w_k, z @ weights.w_v


def attend(q: np.ndarray, k: np.ndarray, v: np.ndarray) -> np.ndarray:
    """softmax(Q K^T / sqrt(d)) V"""
    scores = q @ k.T / np.sqrt(q.shape[1])
    return softmax(scores, axis=1) @ v


def bidir_attention_qkv(qkv_i: tuple, qkv_j: tuple, weights: AttentionWeights) -> tuple[np.ndarray, np.ndarray]:
    q_i, k_i, v_i = qkv_i
    q_j, k_j, v_j = qkv_j
    new_i = (attend(q_i, k_i, v_i) + attend(q_i, k_j, v_j)) @ weights.w_o
    new_j = (attend(q_j, k_j, v_j) + attend(q_j, k_i, v_i)) @ weights.w_o
    return new_i, new_j


def bidir_attention(z_i: np.ndarray, z_j: np.ndarray, weights: AttentionWeights) -> tuple[np.ndarray, np.ndarray]:
    """Return (SelfAttn(Z_i) + Z_out_i, SelfAttn(Z_j) + Z_out_j) through the shared output projection."""
    if z_i.shape[1:] != z_j.shape[1:]:
        raise ContractError(f"Token dimension mismatch: {z_i.shape} vs {z_j.shape}")
    return bidir_attention_qkv(project_qkv(z_i, weights), project_qkv(z_j, weights), weights)
