"""
Little-endian binary blobs: "ANCH" latent blocks, "ASWT" pair-network weights and "ASEM" embedding
sidecars. Feature caches are stored as a numpy .npz archive next to the latents.
"""

import struct
from pathlib import Path

import numpy as np

from ..diffusion.pairnet import PARAMETER_NAMES, PairNetWeights
from ..diffusion.taps import FeatureCache
from ..errors import ContractError, FormatError

__all__ = ["write_latents", "read_latents", "write_weights", "read_weights", "write_embeddings",
           "read_embeddings", "save_feature_cache", "load_feature_cache", "cache_path_for"]

LATENT_MAGIC = b"ANCH"
WEIGHTS_MAGIC = b"ASWT"
EMBEDDING_MAGIC = b"ASEM"
VERSION = 1

F32 = np.dtype("<f4")


def _check_magic(data: bytes, magic: bytes, path: Path):
    if data[:4] != magic:
        raise FormatError(f"{path}: bad magic {data[:4]!r}, expected {magic!r}")


def _unpack(fmt: str, data: bytes, offset: int, path: Path) -> tuple:
    size = struct.calcsize(fmt)
    if len(data) < offset + size:
        raise FormatError(f"{path}: truncated header")
    return struct.unpack_from(fmt, data, offset)


def _floats(data: bytes, offset: int, count: int, path: Path) -> np.ndarray:
    expected = offset + count * F32.itemsize
    if len(data) != expected:
        what = "truncated payload" if len(data) < expected else "trailing bytes after payload"
        raise FormatError(f"{path}: {what} ({len(data)} bytes, expected {expected})")
    return np.frombuffer(data, dtype=F32, count=count, offset=offset).astype(np.float64)


def write_latents(path: Path, latents: np.ndarray):
    """Write an (n, c, h, w) latent block."""
    if latents.ndim != 4:
        raise ContractError(f"Latent block must be (n, c, h, w), got {latents.shape}")
    header = LATENT_MAGIC + struct.pack("<5I", VERSION, *latents.shape)
    Path(path).write_bytes(header + np.ascontiguousarray(latents, dtype=F32).tobytes())


def read_latents(path: Path) -> np.ndarray:
    data = Path(path).read_bytes()
    _check_magic(data, LATENT_MAGIC, path)
    version, n, c, h, w = _unpack("<5I", data, 4, path)
    if version != VERSION:
        raise FormatError(f"{path}: unsupported latent version {version}")
    return _floats(data, 24, n * c * h * w, path).reshape(n, c, h, w)


def write_weights(path: Path, weights: PairNetWeights):
    dims = weights.dims
    header = WEIGHTS_MAGIC + struct.pack(f"<3I{len(dims)}I", VERSION, weights.seed, len(dims), *dims)
    payload = b"".join(np.ascontiguousarray(p, dtype=F32).tobytes() for p in weights.parameters().values())
    Path(path).write_bytes(header + payload)


def read_weights(path: Path) -> PairNetWeights:
    data = Path(path).read_bytes()
    _check_magic(data, WEIGHTS_MAGIC, path)
    version, seed, ndims = _unpack("<3I", data, 4, path)
    if version != VERSION:
        raise FormatError(f"{path}: unsupported weights version {version}")
    if ndims != 4:
        raise FormatError(f"{path}: expected 4 layer dimensions, got {ndims}")
    dims = _unpack("<4I", data, 16, path)
    shapes = PairNetWeights.parameter_shapes(dims)
    sizes = [int(np.prod(shapes[name])) for name in PARAMETER_NAMES]
    flat = _floats(data, 32, sum(sizes), path)
    params = {}
    offset = 0
    for name, size in zip(PARAMETER_NAMES, sizes):
        params[name] = flat[offset:offset + size].reshape(shapes[name])
        offset += size
    return PairNetWeights.from_parameters(seed, dims, params)


def write_embeddings(path: Path, vectors: np.ndarray):
    vectors = np.atleast_2d(vectors)
    header = EMBEDDING_MAGIC + struct.pack("<2I", *vectors.shape)
    Path(path).write_bytes(header + np.ascontiguousarray(vectors, dtype=F32).tobytes())


def read_embeddings(path: Path) -> np.ndarray:
    data = Path(path).read_bytes()
    _check_magic(data, EMBEDDING_MAGIC, path)
    count, dim = _unpack("<2I", data, 4, path)
    return _floats(data, 12, count * dim, path).reshape(count, dim)


def cache_path_for(latent_path: Path) -> Path:
    return Path(latent_path).with_suffix(".cache.npz")


def save_feature_cache(path: Path, cache: FeatureCache):
    with open(path, "wb") as f:
        np.savez(f, **cache.to_arrays())


def load_feature_cache(path: Path) -> FeatureCache:
    path = Path(path)
    if not path.exists():
        raise ContractError(f"Feature cache {path} not found; run `invert` first")
    with np.load(path) as archive:
        return FeatureCache.from_arrays({name: archive[name] for name in archive.files})
