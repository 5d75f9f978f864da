import numpy as np
import pytest

from anchor_edit.diffusion.conditions import *
from anchor_edit.errors import ConfigError

U = np.array([1.0, -2.0, 0.5])
V = np.array([0.25, 3.0, -1.0])
X = np.array([0.1, 0.2, 0.3])
FULL = Condition(text=np.ones(4), structural=np.ones((1, 1, 2, 2)))


def linear_eps(x, t, cond):
    a = 0.0 if cond.text is None else 1.0
    b = 0.0 if cond.structural is None else 1.0
    return x + a * U + b * V


def test_unit_text_scale_is_full_evaluation():
    out = guided_eps(X, 3, FULL, GuidanceConfig(1.0, 0.0), linear_eps)
    assert np.array_equal(out, linear_eps(X, 3, FULL))


def test_zero_scales_are_structural_only_evaluation():
    out = guided_eps(X, 3, FULL, GuidanceConfig(0.0, 0.0), linear_eps)
    assert np.array_equal(out, linear_eps(X, 3, FULL.without_text()))


@pytest.mark.parametrize("s_T,s_J", [(6.0, 0.8), (1.0, 0.8), (3.5, 0.0), (0.0, 2.0)])
def test_linear_substitution(s_T, s_J):
    out = guided_eps(X, 3, FULL, GuidanceConfig(s_T, s_J), linear_eps)
    np.testing.assert_allclose(out, X + s_T * U + (1.0 + s_J) * V, atol=1e-12)


def test_exactly_three_denoiser_calls():
    seen = []

    def counting(x, t, cond):
        seen.append((cond.text is not None, cond.structural is not None))
        return linear_eps(x, t, cond)

    guided_eps(X, 3, FULL, GuidanceConfig(), counting)
    assert sorted(seen) == [(False, True), (True, False), (True, True)]


def test_negative_scale_rejected():
    with pytest.raises(ConfigError):
        GuidanceConfig(-1.0, 0.8)
    with pytest.raises(ConfigError):
        GuidanceConfig(6.0, float("nan"))


def test_prompt_vector():
    assert prompt_vector("", 8) is None
    a = prompt_vector("a watercolor painting", 8)
    assert a.shape == (8,)
    assert np.array_equal(a, prompt_vector("a watercolor painting", 8))
    assert not np.array_equal(a, prompt_vector("a pencil sketch", 8))


def test_condition_select_and_text():
    structural = np.arange(12, dtype=float).reshape(3, 1, 2, 2)
    cond = Condition(text=np.ones(2), structural=structural)
    assert np.array_equal(cond.select([2, 0]).structural, structural[[2, 0]])
    assert np.array_equal(Condition().text_or_zeros(3), np.zeros(3))
    with pytest.raises(ConfigError):
        cond.text_or_zeros(3)


def nonlinear_eps(x, t, cond):
    a = 0.0 if cond.text is None else 1.0
    b = 0.0 if cond.structural is None else 1.0
    return np.sin(x + a * U) * (1.0 + b) + b * np.cos(x * V)


@pytest.mark.parametrize("s_T", [0.0, 1.0, 6.0])
def test_text_scale_slope(s_T):
    h = 0.5
    low = guided_eps(X, 3, FULL, GuidanceConfig(s_T, 0.8), nonlinear_eps)
    high = guided_eps(X, 3, FULL, GuidanceConfig(s_T + h, 0.8), nonlinear_eps)
    slope = nonlinear_eps(X, 3, FULL) - nonlinear_eps(X, 3, FULL.without_text())
    np.testing.assert_allclose((high - low) / h, slope, atol=1e-9)
