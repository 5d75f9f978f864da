import numpy as np
import pytest

from anchor_edit.errors import ContractError
from anchor_edit.formats.binary import write_embeddings
from anchor_edit.formats.fixtures import mixing_scenes, static_scene
from anchor_edit.metrics.embedders import *


def test_normalize_rows():
    rows = normalize_rows(np.array([[3.0, 4.0], [0.0, 0.0]]))
    assert np.allclose(rows, [[0.6, 0.8], [1.0, 0.0]])


def test_toy_embeddings_are_unit_vectors():
    embedder = ToyEmbedder(grid=4, bins=6)
    e = embedder.embed_all(list(mixing_scenes(3, 16, 16, seed=1)))
    assert e.shape == (3, embedder.dim) == (3, 22)
    assert np.allclose(np.linalg.norm(e, axis=1), 1.0)


def test_toy_embedder_separates_different_scenes():
    embedder = ToyEmbedder()
    first, last = mixing_scenes(9, 16, 16, seed=2)[[0, -1]]
    e = embedder.embed_all([first, first, last])
    assert e[0] @ e[1] == pytest.approx(1.0)
    assert e[0] @ e[2] < 1.0 - 1e-6


def test_toy_embedder_grid_contract():
    with pytest.raises(ContractError):
        ToyEmbedder(grid=8).embed_all([np.zeros((3, 4, 4))])


def test_external_embedder(tmp_path):
    path = tmp_path / "frames.asem"
    write_embeddings(path, np.array([[0.0, 2.0], [1.0, 1.0]]))
    embedder = ExternalEmbedder.from_file(path)
    assert embedder.supports_text and embedder.dim == 2
    e = embedder.embed_all(list(static_scene(2, 8, 8)))
    assert np.allclose(e, [[0.0, 1.0], [2 ** -0.5, 2 ** -0.5]])
    with pytest.raises(ContractError):
        embedder.embed_all([None])
