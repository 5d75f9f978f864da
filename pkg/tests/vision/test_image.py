import numpy as np
import pytest

from anchor_edit.errors import ContractError
from anchor_edit.vision.image import *


def test_luma_weights_sum_to_one():
    assert LUMA.sum() == pytest.approx(1.0)


def test_to_gray():
    frame = np.zeros((3, 2, 2))
    frame[1] = 1.0
    assert np.allclose(to_gray(frame), LUMA[1])
    gray = np.full((2, 2), 0.3)
    assert to_gray(gray) is gray


def test_as_gray_image_clips_and_rejects_non_finite():
    assert np.array_equal(as_gray_image(np.array([[-1.0, 2.0]])), [[0.0, 1.0]])
    with pytest.raises(ContractError):
        as_gray_image(np.array([[np.nan, 0.0]]))
    with pytest.raises(ContractError):
        to_gray(np.zeros((4, 2, 2)))


def test_check_same_size():
    check_same_size(np.zeros((3, 4, 5)), np.zeros((2, 4, 5)))
    with pytest.raises(ContractError):
        check_same_size(np.zeros((4, 5)), np.zeros((5, 4)))
