import numpy as np
import pytest

from anchor_edit.errors import ConfigError, ContractError
from anchor_edit.formats.fixtures import translating_texture
from anchor_edit.vision.flow import *

MARGIN = 8


def interior(field: np.ndarray) -> np.ndarray:
    return field[:, MARGIN:-MARGIN, MARGIN:-MARGIN]


def test_identical_frames_have_zero_flow():
    frame = translating_texture(1, 32, 32, seed=4)[0]
    assert not optical_flow(frame, frame).any()


@pytest.mark.parametrize("reverse, expected", [(False, 1.0), (True, -1.0)])
def test_translation(reverse, expected):
    a, b = translating_texture(2, 48, 48, seed=1)
    if reverse:
        a, b = b, a
    u, v = interior(optical_flow(a, b, FlowParams(iters=200)))
    assert np.mean(u) == pytest.approx(expected, abs=0.25)
    assert np.mean(np.abs(v)) < 0.25


def test_flow_is_bounded_by_image_size():
    a = np.zeros((8, 8))
    b = np.ones((8, 8))
    flow = optical_flow(a, b, FlowParams(lam=1e-3, iters=500))
    assert np.all(np.abs(flow) <= 8.0)


def test_flow_size_mismatch():
    with pytest.raises(ContractError):
        optical_flow(np.zeros((8, 8)), np.zeros((8, 9)))


def test_flow_params_validation():
    with pytest.raises(ConfigError):
        FlowParams(lam=0.0)
    with pytest.raises(ConfigError):
        FlowParams(iters=0)


def test_zero_flow_warp_is_identity():
    frame = translating_texture(1, 12, 10, seed=2)[0]
    warped, valid = warp(frame, zero_flow(12, 10))
    assert np.array_equal(warped, frame)
    assert valid.all()


def test_integer_shift_warp():
    img = np.arange(30, dtype=np.float64).reshape(5, 6)
    flow = np.zeros((2, 5, 6))
    flow[0] = 1.0
    warped, valid = warp(img, flow)
    assert np.array_equal(warped[:, :-1], img[:, 1:])
    assert valid[:, :-1].all()
    assert not valid[:, -1].any()


def test_half_pixel_warp_averages_neighbours():
    img = np.arange(30, dtype=np.float64).reshape(5, 6)
    flow = np.zeros((2, 5, 6))
    flow[1] = 0.5
    warped, _ = warp(img, flow)
    assert np.allclose(warped[:-1], 0.5 * (img[:-1] + img[1:]))


def test_warp_undoes_translation():
    a, b = translating_texture(2, 48, 48, seed=1)
    flow = optical_flow(a, b, FlowParams(iters=200))
    warped, _ = warp(b, flow)
    assert np.mean(np.abs(interior(warped - a))) < np.mean(np.abs(interior(b - a)))


def test_warp_contract():
    with pytest.raises(ContractError):
        warp(np.zeros((4, 4)), np.zeros((3, 4, 4)))
    with pytest.raises(ContractError):
        warp(np.zeros((4, 5)), np.zeros((2, 4, 4)))


def checkerboard(size: int = 32, cell: int = 4, shift: int = 0) -> np.ndarray:
    y, x = np.indices((size, size))
    return (((x - shift) // cell + y // cell) % 2).astype(np.float64)


def test_smoothness_weight_shrinks_flow():
    a, b = checkerboard(), checkerboard(shift=1)
    magnitudes = [float(np.mean(np.hypot(*interior(optical_flow(a, b, FlowParams(lam=lam, iters=100))))))
                  for lam in (0.1, 1.0, 10.0, 100.0)]
    assert all(later < earlier for earlier, later in zip(magnitudes, magnitudes[1:]))
    assert magnitudes[-1] < 0.05 * magnitudes[0]
