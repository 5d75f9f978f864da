import math

import numpy as np
import pytest

from anchor_edit.diffusion.attention import *
from anchor_edit.errors import ContractError

D = 8


def seeded_weights(seed=0):
    return AttentionWeights.seeded(np.random.default_rng(seed), D)


def loop_attention(q, k, v):
    out = np.zeros((q.shape[0], v.shape[1]))
    for i in range(q.shape[0]):
        scores = [sum(q[i, c] * k[j, c] for c in range(q.shape[1])) / math.sqrt(q.shape[1])
                  for j in range(k.shape[0])]
        top = max(scores)
        weights = [math.exp(s - top) for s in scores]
        total = sum(weights)
        for j in range(k.shape[0]):
            out[i] += weights[j] / total * v[j]
    return out


def test_single_token_attends_to_partner_values():
    w = seeded_weights()
    rng = np.random.default_rng(1)
    z_i, z_j = rng.standard_normal((1, D)), rng.standard_normal((1, D))
    new_i, new_j = bidir_attention(z_i, z_j, w)
    np.testing.assert_allclose(new_i, (z_i @ w.w_v + z_j @ w.w_v) @ w.w_o, atol=1e-12)
    np.testing.assert_allclose(new_j, (z_j @ w.w_v + z_i @ w.w_v) @ w.w_o, atol=1e-12)


def test_identical_inputs_double_self_attention():
    w = seeded_weights()
    z = np.random.default_rng(2).standard_normal((4, D))
    new_i, new_j = bidir_attention(z, z, w)
    q, k, v = project_qkv(z, w)
    assert np.array_equal(new_i, new_j)
    np.testing.assert_allclose(new_i, 2.0 * attend(q, k, v) @ w.w_o, atol=1e-12)


def test_matches_double_loop():
    w = seeded_weights(3)
    rng = np.random.default_rng(4)
    z_i, z_j = rng.standard_normal((4, D)), rng.standard_normal((4, D))
    new_i, new_j = bidir_attention(z_i, z_j, w)
    q_i, k_i, v_i = z_i @ w.w_q, z_i @ w.w_k, z_i @ w.w_v
    q_j, k_j, v_j = z_j @ w.w_q, z_j @ w.w_k, z_j @ w.w_v
    expected_i = (loop_attention(q_i, k_i, v_i) + loop_attention(q_i, k_j, v_j)) @ w.w_o
    expected_j = (loop_attention(q_j, k_j, v_j) + loop_attention(q_j, k_i, v_i)) @ w.w_o
    np.testing.assert_allclose(new_i, expected_i, atol=1e-6)
    np.testing.assert_allclose(new_j, expected_j, atol=1e-6)


def test_dimension_mismatch():
    w = seeded_weights()
    with pytest.raises(ContractError):
        bidir_attention(np.zeros((4, D)), np.zeros((4, D + 1)), w)
    with pytest.raises(ContractError):
        project_qkv(np.zeros((4, D - 1)), w)


def test_swap_equivariance_on_random_pairs():
    w = seeded_weights(5)
    rng = np.random.default_rng(6)
    for _ in range(1000):
        n = int(rng.integers(1, 7))
        z_i, z_j = rng.standard_normal((n, D)), rng.standard_normal((n, D))
        new_i, new_j = bidir_attention(z_i, z_j, w)
        swapped_j, swapped_i = bidir_attention(z_j, z_i, w)
        assert np.array_equal(new_i, swapped_i)
        assert np.array_equal(new_j, swapped_j)
