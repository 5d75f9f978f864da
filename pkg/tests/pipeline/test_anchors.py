import numpy as np
import pytest

from anchor_edit.diffusion.analytic import AnalyticDenoiser, GaussianMixture
from anchor_edit.diffusion.conditions import Condition, GuidanceConfig, prompt_vector
from anchor_edit.diffusion.pairnet import PairNet, PairNetWeights
from anchor_edit.diffusion.schedule import ddim_invert, make_linear_schedule
from anchor_edit.diffusion.taps import FeatureCache, TapKind
from anchor_edit.errors import ConfigError, ContractError
from anchor_edit.helper.config import Pairing
from anchor_edit.pipeline.anchors import *

SHAPE = (3, 8, 8)


def analytic_setup(num_anchors, seed=0, variance=0.05, steps=50):
    rng = np.random.default_rng(seed)
    schedule = make_linear_schedule(steps)
    means = rng.uniform(0.2, 0.8, size=(num_anchors,) + SHAPE)
    denoiser = AnalyticDenoiser(schedule, [GaussianMixture.single(m, variance) for m in means])
    anchors = means + 0.05 * rng.standard_normal(means.shape)
    return schedule, denoiser, anchors


@pytest.mark.parametrize("num_frames,interval,expected", [
    (73, 24, (0, 24, 48, 72)),
    (75, 24, (0, 24, 48, 72, 74)),
    (25, 24, (0, 24)),
    (2, 24, (0, 1)),
])
def test_sample_anchors(num_frames, interval, expected):
    anchors = sample_anchors(num_frames, interval)
    assert anchors.frame_indices == expected
    assert anchors.num_frames == num_frames
    assert anchors.segments() == list(zip(expected[:-1], expected[1:]))


def test_sample_anchors_contract():
    with pytest.raises(ContractError):
        sample_anchors(1, 24)
    with pytest.raises(ContractError):
        sample_anchors(10, 0)
    with pytest.raises(ContractError):
        AnchorSet((0, 30), 24)


def test_injection_windows():
    assert injection_window(0.44, 50) == 22
    assert injection_window(0.65, 50) == 33
    assert injection_window(0.0, 50) == 0
    assert injection_window(1.0, 50) == 50
    inj = InjectionConfig()
    active = [step for step in range(50) if TapKind.ATTENTION_KV in inj.kinds_at(step, 50)]
    assert active == list(range(22))
    assert inj.kinds_at(30, 50) == {TapKind.CONV_ACTIVATION}
    assert inj.kinds_at(40, 50) == set()
    with pytest.raises(ConfigError):
        InjectionConfig(1.5, 0.5)


def test_pairings():
    assert pairs_for(4, Pairing.FUSED) == [(0, 1), (1, 2), (2, 3)]
    assert pairs_for(5, Pairing.DISJOINT) == [(0, 1), (2, 3), (4, 4)]
    assert pairs_for(4, Pairing.DISJOINT) == [(0, 1), (2, 3)]
    assert pairs_for(3, Pairing.FRAMEWISE) == [(0, 0), (1, 1), (2, 2)]
    with pytest.raises(ContractError):
        pairs_for(1)


def test_fuse_shared_averages_interior_anchors():
    x = [np.full(SHAPE, float(k)) for k in range(6)]
    pairs = [(0, 1), (1, 2)]
    fused = fuse_shared([(x[0], x[1]), (x[2], x[3])], pairs, 3)
    assert np.array_equal(fused[0], x[0])
    assert np.array_equal(fused[1], (x[1] + x[2]) / 2.0)
    assert np.array_equal(fused[2], x[3])


def test_fuse_shared_agreement_is_identity():
    a = np.random.default_rng(0).standard_normal(SHAPE)
    fused = fuse_shared([(a, a), (a, a)], [(0, 1), (1, 2)], 3)
    assert all(np.array_equal(f, a) for f in fused)


def test_fuse_shared_bookkeeping():
    a = np.zeros(SHAPE)
    with pytest.raises(ContractError):
        fuse_shared([(a, a)], [(0, 1), (1, 2)], 3)
    with pytest.raises(ContractError):
        fuse_shared([(a, a), (a, a)], [(0, 1), (2, 3)], 5)
    with pytest.raises(ContractError):
        fuse_shared([(a, a)] * 3, [(0, 1), (0, 1), (0, 1)], 2)


def test_two_anchors_use_one_pair():
    schedule, denoiser, anchors = analytic_setup(2)
    trace = ConsistencyTrace()
    noised, cache = invert_anchors(anchors, Condition(), schedule, denoiser, trace=trace)
    assert noised.shape == anchors.shape
    assert cache.num_pairs == 1
    cache.check_complete(range(1, schedule.num_steps))
    assert trace.before == trace.after


def test_identical_anchors_stay_identical():
    schedule = make_linear_schedule(20)
    frame = np.random.default_rng(2).uniform(0.0, 1.0, SHAPE)
    net = PairNet(PairNetWeights.seeded(0), patch=4)
    anchors = np.stack([frame] * 3)
    noised, cache = invert_anchors(anchors, Condition(), schedule, net, fixed_point_iters=1)
    assert np.array_equal(noised[0], noised[1]) and np.array_equal(noised[1], noised[2])
    edited = edit_anchors(noised, cache, Condition(text=prompt_vector("snow", 8)), GuidanceConfig(),
                          InjectionConfig(), schedule, net)
    assert np.array_equal(edited[0], edited[1]) and np.array_equal(edited[1], edited[2])


def test_inversion_matches_serial_reference():
    schedule, denoiser, anchors = analytic_setup(4, seed=3)
    parallel, _ = invert_anchors(anchors, Condition(), schedule, denoiser, threads=4)
    for k in range(4):
        mixture = denoiser.mixture_at(k)

        def eps_fn(x, t):
            return AnalyticDenoiser(schedule, mixture)(x[None], t, Condition())[0]

        assert np.array_equal(parallel[k], ddim_invert(anchors[k], schedule, eps_fn, fixed_point_iters=3))


def test_identity_edit_roundtrip():
    schedule, denoiser, anchors = analytic_setup(3, seed=4)
    noised, cache = invert_anchors(anchors, Condition(), schedule, denoiser)
    edited = edit_anchors(noised, cache, Condition(), GuidanceConfig(1.0, 0.0), InjectionConfig(0.0, 0.0),
                          schedule, denoiser)
    np.testing.assert_allclose(edited, anchors, atol=1e-3)


@pytest.mark.parametrize("seed", range(10))
def test_full_injection_pulls_edit_toward_source(seed):
    schedule = make_linear_schedule(12)
    net = PairNet(PairNetWeights.seeded(seed), patch=4)
    anchors = np.random.default_rng(100 + seed).uniform(0.0, 1.0, size=(2,) + SHAPE)
    inv_cond = Condition(text=prompt_vector("a street", 8))
    edit_cond = Condition(text=prompt_vector("a street at night", 8))
    noised, cache = invert_anchors(anchors, inv_cond, schedule, net)

    def distance(inj):
        edited = edit_anchors(noised, cache, edit_cond, GuidanceConfig(), inj, schedule, net)
        return float(np.linalg.norm(edited - anchors))

    assert distance(InjectionConfig(1.0, 1.0)) < distance(InjectionConfig(0.0, 0.0))


def test_edit_requires_complete_cache():
    schedule, denoiser, anchors = analytic_setup(3)
    with pytest.raises(ContractError, match="missing timestep"):
        edit_anchors(anchors, FeatureCache(2), Condition(), GuidanceConfig(), InjectionConfig(), schedule, denoiser)
    with pytest.raises(ContractError):
        edit_anchors(anchors, FeatureCache(1), Condition(), GuidanceConfig(), InjectionConfig(), schedule, denoiser)


@pytest.mark.parametrize("pairing", list(Pairing))
def test_pairings_run_both_stages(pairing):
    schedule, denoiser, anchors = analytic_setup(5, seed=6, steps=10)
    trace = ConsistencyTrace()
    noised, cache = invert_anchors(anchors, Condition(), schedule, denoiser, pairing=pairing, trace=trace)
    edited = edit_anchors(noised, cache, Condition(), GuidanceConfig(), InjectionConfig(), schedule, denoiser,
                          pairing=pairing, trace=trace)
    assert edited.shape == anchors.shape
    assert len(trace.timesteps) == 2 * (schedule.num_steps - 1)
    assert trace.non_increasing_fraction() == 1.0
    with pytest.raises(ContractError):
        other = Pairing.FRAMEWISE if pairing != Pairing.FRAMEWISE else Pairing.FUSED
        edit_anchors(noised, cache, Condition(), GuidanceConfig(), InjectionConfig(), schedule, denoiser,
                     pairing=other)


class PairMeanDenoiser:
    """Predicts the mean of the pair as the clean latent of both frames."""

    def __init__(self, schedule):
        self.schedule = schedule

    def __call__(self, latents, t, cond, *, positions=None, taps=None):
        mean = latents.mean(axis=0, keepdims=True)
        return (latents - mean) / np.sqrt(1.0 - self.schedule.alpha_bars[t])


def complete_cache(num_pairs, schedule):
    cache = FeatureCache(num_pairs)
    for pair in range(num_pairs):
        for t in range(1, schedule.num_steps):
            cache.mark(pair, t)
    return cache


def inter_anchor_distance(latents):
    return float(np.mean([np.linalg.norm(b - a) for a, b in zip(latents[:-1], latents[1:])]))


@pytest.mark.parametrize("seed", range(10))
def test_fusion_brings_anchors_closer_than_disjoint_pairs(seed):
    schedule = make_linear_schedule(50)
    denoiser = PairMeanDenoiser(schedule)
    noised = np.random.default_rng(seed).standard_normal((5,) + SHAPE)

    def edit(pairing):
        cache = complete_cache(len(pairs_for(5, pairing)), schedule)
        return edit_anchors(noised, cache, Condition(), GuidanceConfig(), InjectionConfig(0.0, 0.0), schedule,
                            denoiser, pairing=pairing)

    fused, disjoint = edit(Pairing.FUSED), edit(Pairing.DISJOINT)
    assert inter_anchor_distance(fused) < inter_anchor_distance(disjoint)
    np.testing.assert_allclose(disjoint[0], disjoint[1], atol=0.05 * np.abs(disjoint).max())
