import numpy as np
import pytest

from anchor_edit.errors import ContractError
from anchor_edit.formats.fixtures import translating_texture
from anchor_edit.pipeline.controls import *

MARGIN = 8


def test_constant_segment_has_no_controls():
    frames = np.full((4, 3, 24, 24), 0.4)
    stack = encode_controls(frames)
    assert len(stack) == 4
    assert not stack.edges.any()
    assert not stack.flows.any()


def test_translation_flow_forward_and_reverse():
    frames = translating_texture(4, height=48, width=48, seed=3)
    controls = encode_segment_controls(frames)
    assert np.all(controls.forward.flows[0] == 0.0)
    for j in range(1, 4):
        interior = controls.forward.flows[j][:, MARGIN:-MARGIN, MARGIN:-MARGIN]
        assert abs(interior[0].mean() - 1.0) < 0.25
        assert abs(interior[1].mean()) < 0.25
        reverse = controls.reverse.flows[j][:, MARGIN:-MARGIN, MARGIN:-MARGIN]
        assert abs(reverse[0].mean() + 1.0) < 0.25
    assert np.array_equal(controls.reversed().forward.flows, controls.reverse.flows)


def test_encoder_is_seeded():
    frames = translating_texture(3, height=16, width=16)
    stack = encode_controls(frames)
    first = ControlEncoder(seed=2).residuals(stack)
    second = ControlEncoder(seed=2).residuals(stack, threads=3)
    assert first.shape == (3, 8, 16, 16)
    assert np.array_equal(first, second)
    assert not np.allclose(first, ControlEncoder(seed=3).residuals(stack))


def test_strength_scales_residuals():
    frames = translating_texture(3, height=16, width=16)
    full = encode_controls(frames, strength=1.0)
    half = encode_controls(frames, strength=0.5)
    encoder = ControlEncoder()
    np.testing.assert_allclose(control_residual(half, 1, encoder), 0.5 * control_residual(full, 1, encoder))
    assert encoder.residuals(encode_controls(frames, strength=0.0)) is None


def test_stack_validation():
    with pytest.raises(ContractError):
        ControlStack(np.zeros((2, 1, 8, 8)), np.zeros((2, 1, 8, 8)))
    with pytest.raises(ContractError):
        ControlStack(np.zeros((2, 1, 8, 8)), np.zeros((3, 2, 8, 8)))
    with pytest.raises(ContractError):
        ControlStack(np.zeros((2, 1, 8, 8)), np.zeros((2, 2, 8, 8)), strength=-1.0)
    with pytest.raises(ContractError):
        encode_controls(np.zeros((1, 3, 16, 16)))
