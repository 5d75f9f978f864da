import json
import math
from collections import Counter

import numpy as np
import pytest

from anchor_edit.errors import ContractError, UnsupportedMetricError
from anchor_edit.formats.fixtures import static_scene, translating_texture
from anchor_edit.metrics.embedders import ExternalEmbedder, ToyEmbedder
from anchor_edit.metrics.suite import *
from anchor_edit.vision.canny import canny
from anchor_edit.vision.flow import optical_flow, warp
from anchor_edit.vision.image import to_gray

SIZE = 16


def test_identical_frames_are_fully_similar():
    frames = list(static_scene(26, SIZE, SIZE, seed=3))
    embedder = ToyEmbedder()
    assert sim_adjacent(frames, embedder) == pytest.approx(100.0)
    assert sim_star(frames, embedder) == pytest.approx(100.0)
    assert sim_dagger(frames, embedder) == pytest.approx(100.0)


def test_long_range_similarity_needs_25_frames():
    frames = list(static_scene(LONG_GAP, SIZE, SIZE))
    with pytest.raises(ContractError):
        sim_star(frames, ToyEmbedder())
    with pytest.raises(ContractError):
        sim_dagger(frames, ToyEmbedder())
    with pytest.raises(ContractError):
        sim_adjacent(frames[:1], ToyEmbedder())


def test_sim_dagger_compares_sampled_frames_to_the_first():
    vectors = np.zeros((49, 2))
    vectors[:, 0] = 1.0
    vectors[24] = [0.0, 1.0]
    embedder = ExternalEmbedder(vectors)
    frames = [None] * 49
    assert sim_dagger(frames, embedder) == pytest.approx(50.0)
    assert sim_star(frames, embedder) == pytest.approx(100.0 * 23 / 25)


def test_warp_error_of_unchanged_static_video_is_zero():
    frames = list(static_scene(4, SIZE, SIZE, seed=1))
    assert warp_error(frames, frames) == 0.0


def test_warp_error_measures_brightness_drift():
    delta = 0.02
    frames = list(static_scene(4, SIZE, SIZE, seed=1))
    edited = [f + i * delta for i, f in enumerate(frames)]
    assert warp_error(frames, edited) == pytest.approx(100.0 * delta)


def test_warp_error_threads_match_serial():
    original = list(translating_texture(5, 24, 24, seed=2))
    edited = [np.clip(f * 0.9 + 0.05, 0.0, 1.0) for f in original]
    assert warp_error(original, edited, threads=3) == warp_error(original, edited)


def test_pair_contracts():
    frames = list(static_scene(3, SIZE, SIZE))
    with pytest.raises(ContractError):
        warp_error(frames, frames[:2])
    with pytest.raises(ContractError):
        warp_error(frames[:1], frames[:1])
    with pytest.raises(ContractError):
        canny_error(frames, [np.zeros((3, 8, 8))] * 3)


def test_canny_error():
    step = np.zeros((3, SIZE, SIZE))
    step[:, :, SIZE // 2:] = 1.0
    flat = np.zeros_like(step)
    assert canny_error([step], [step]) == 0.0
    assert canny_error([step], [flat]) == pytest.approx(100.0 * SIZE / SIZE ** 2)


@pytest.mark.parametrize("levels, bits", [([0], 0.0), ([0, 255], 1.0), (list(range(256)), 8.0)])
def test_entropy(levels, bits):
    gray = np.repeat(np.array(levels, dtype=np.float64) / 255.0, 256 // len(levels)).reshape(16, 16)
    assert entropy(gray) == pytest.approx(bits)


def test_entropy_mean():
    frames = [np.zeros((4, 4)), np.tile([0.0, 1.0], (4, 2))]
    assert entropy_mean(frames) == pytest.approx(0.5)


def test_text_sim():
    vectors = np.array([[1.0, 0.0], [0.0, 1.0]])
    embedder = ExternalEmbedder(vectors)
    assert text_sim([None, None], np.array([2.0, 0.0]), embedder) == pytest.approx(50.0)
    with pytest.raises(ContractError):
        text_sim([None, None], np.ones(3), embedder)
    with pytest.raises(UnsupportedMetricError):
        text_sim([None, None], np.ones(2), ToyEmbedder())


def test_report_on_short_clip():
    frames = list(static_scene(5, SIZE, SIZE, seed=7))
    report = compute_report(frames, frames, ToyEmbedder())
    assert report.sim_star is None and report.sim_dagger is None
    assert report.warp_error == 0.0
    assert report.canny_error == 0.0
    assert report.text_sim is None
    parsed = json.loads(report.to_json())
    assert parsed["sim_adjacent"] == pytest.approx(100.0)
    assert "sim_star=\n" in report.to_lines()


def test_report_with_structural_embedder_and_prompt():
    frames = list(static_scene(25, SIZE, SIZE, seed=7))
    vectors = np.tile([1.0, 0.0], (25, 1))
    report = compute_report(frames, frames, ExternalEmbedder(vectors), structural_embedder=ToyEmbedder(),
                            prompt_embedding=np.array([1.0, 0.0]))
    assert report.sim_star == pytest.approx(100.0)
    assert report.text_sim == pytest.approx(100.0)
    assert report.sim_adjacent_structural == pytest.approx(100.0)


def random_vectors(n, dim=6, seed=0):
    return np.random.default_rng(seed).standard_normal((n, dim))


def unit(vector):
    return vector / math.sqrt(sum(x * x for x in vector))


def loop_cosine(a, b):
    return sum(x * y for x, y in zip(unit(a), unit(b)))


def test_similarities_match_direct_loops():
    vectors = random_vectors(50)
    prompt = random_vectors(1, seed=1)[0]
    embedder = ExternalEmbedder(vectors)
    frames = [None] * len(vectors)

    star = [loop_cosine(vectors[i], vectors[i + LONG_GAP]) for i in range(len(vectors) - LONG_GAP)]
    dagger = [loop_cosine(vectors[0], vectors[i]) for i in range(LONG_GAP, len(vectors), LONG_GAP)]
    adjacent = [loop_cosine(vectors[i], vectors[i + 1]) for i in range(len(vectors) - 1)]
    text = [loop_cosine(v, prompt) for v in vectors]

    assert abs(sim_star(frames, embedder) - 100.0 * sum(star) / len(star)) <= 1e-9
    assert abs(sim_dagger(frames, embedder) - 100.0 * sum(dagger) / len(dagger)) <= 1e-9
    assert abs(sim_adjacent(frames, embedder) - 100.0 * sum(adjacent) / len(adjacent)) <= 1e-9
    assert abs(text_sim(frames, prompt, embedder) - 100.0 * sum(text) / len(text)) <= 1e-9


def test_similarities_are_invariant_under_orthogonal_transforms():
    vectors = random_vectors(50, seed=2)
    prompt = random_vectors(1, seed=3)[0]
    q, _ = np.linalg.qr(np.random.default_rng(4).standard_normal((6, 6)))
    frames = [None] * len(vectors)
    plain, rotated = ExternalEmbedder(vectors), ExternalEmbedder(vectors @ q)
    for metric in (sim_star, sim_dagger, sim_adjacent):
        assert abs(metric(frames, plain) - metric(frames, rotated)) <= 1e-9
    assert abs(text_sim(frames, prompt, plain) - text_sim(frames, prompt @ q, rotated)) <= 1e-9


def edited_fixture(seed=5):
    original = list(translating_texture(4, 20, 20, seed=seed))
    noise = np.random.default_rng(seed).uniform(-0.1, 0.1, size=(4,) + original[0].shape)
    return original, [np.clip(0.8 * f + 0.1 + n, 0.0, 1.0) for f, n in zip(original, noise)]


def test_warp_error_matches_pixel_loop():
    original, edited = edited_fixture()
    per_pair = []
    for i in range(len(original) - 1):
        forward = optical_flow(original[i], original[i + 1])
        backward = optical_flow(original[i + 1], original[i])
        warped, valid = warp(edited[i + 1], forward)
        backward_at, _ = warp(backward, forward)
        total, count = 0.0, 0
        channels, height, width = edited[i].shape
        for y in range(height):
            for x in range(width):
                gap = math.hypot(forward[0, y, x] + backward_at[0, y, x], forward[1, y, x] + backward_at[1, y, x])
                if valid[y, x] and gap < 1.0:
                    total += sum(abs(warped[c, y, x] - edited[i][c, y, x]) for c in range(channels)) / channels
                    count += 1
        if count:
            per_pair.append(total / count)
    assert abs(warp_error(original, edited) - 100.0 * sum(per_pair) / len(per_pair)) <= 1e-9


def test_canny_error_matches_pixel_loop():
    original, edited = edited_fixture(6)
    per_frame = []
    for a, b in zip(original, edited):
        ea, eb = canny(a), canny(b)
        height, width = ea.shape
        differing = sum(int(ea[y, x] != eb[y, x]) for y in range(height) for x in range(width))
        per_frame.append(differing / (height * width))
    assert abs(canny_error(original, edited) - 100.0 * sum(per_frame) / len(per_frame)) <= 1e-9


def test_entropy_matches_histogram_loop():
    _, edited = edited_fixture(7)
    for frame in edited:
        gray = to_gray(frame)
        counts = Counter(min(255, max(0, round(float(v) * 255.0))) for v in gray.ravel())
        expected = -sum(c / gray.size * math.log2(c / gray.size) for c in counts.values())
        assert abs(entropy(frame) - expected) <= 1e-9
