"""
Frame directories: binary PPM (P6, 8-bit) files numbered 000000.ppm, 000001.ppm, ... plus a
key=value manifest.txt with count, width, height and format.
"""

import logging
import re
from pathlib import Path
from typing import Iterable, Iterator, Optional

import numpy as np

from ..errors import FormatError, GapError

__all__ = ["read_ppm", "write_ppm", "FrameSequence", "FrameWriter", "load_frames", "save_frames",
           "read_manifest", "MANIFEST"]

log = logging.getLogger(__name__)

MANIFEST = "manifest.txt"
FRAME_RE = re.compile(r"^(\d{6})\.ppm$")


def _to_bytes(frame: np.ndarray) -> np.ndarray:
    if frame.ndim != 3 or frame.shape[0] != 3:
        raise FormatError(f"Frames must have shape (3, H, W), got {frame.shape}")
    return np.round(np.clip(frame, 0.0, 1.0) * 255.0).astype(np.uint8)


def _parse_header(data: bytes, path: Path) -> tuple[int, int, int]:
    """Return (width, height, payload offset)."""
    tokens = []
    pos = 0
    while len(tokens) < 4:
        while pos < len(data) and data[pos:pos + 1].isspace():
            pos += 1
        if pos < len(data) and data[pos:pos + 1] == b"#":
            while pos < len(data) and data[pos:pos + 1] != b"\n":
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos:pos + 1].isspace():
            pos += 1
        if start == pos:
            raise FormatError(f"{path}: truncated PPM header")
        tokens.append(data[start:pos])
    if tokens[0] != b"P6":
        raise FormatError(f"{path}: not a binary PPM (magic {tokens[0]!r})")
    try:
        width, height, maxval = (int(t) for t in tokens[1:])
    except ValueError as err:
        raise FormatError(f"{path}: malformed PPM header") from err
    if maxval != 255:
        raise FormatError(f"{path}: only 8-bit PPM is supported, maxval={maxval}")
    return width, height, pos + 1


def read_ppm_size(path: Path) -> tuple[int, int]:
    with open(path, "rb") as f:
        head = f.read(256)
    width, height, _ = _parse_header(head, path)
    return width, height


def read_ppm(path: Path) -> np.ndarray:
    data = Path(path).read_bytes()
    width, height, offset = _parse_header(data, path)
    payload = data[offset:offset + 3 * width * height]
    if len(payload) != 3 * width * height:
        raise FormatError(f"{path}: truncated PPM payload")
    rgb = np.frombuffer(payload, dtype=np.uint8).reshape(height, width, 3)
    return rgb.transpose(2, 0, 1).astype(np.float64) / 255.0


def write_ppm(path: Path, frame: np.ndarray):
    rgb = _to_bytes(frame).transpose(1, 2, 0)
    height, width = rgb.shape[:2]
    Path(path).write_bytes(f"P6\n{width} {height}\n255\n".encode("ascii") + rgb.tobytes())


def read_manifest(directory: Path) -> dict[str, str]:
    path = directory / MANIFEST
    if not path.exists():
        raise FormatError(f"{directory}: missing {MANIFEST}")
    entries = {}
    for line in path.read_text().splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise FormatError(f"{path}: expected key=value, got '{line}'")
        entries[key.strip()] = value.strip()
    return entries


class FrameSequence:
    """
    A validated frame directory. Frames are read from disk on access, one at a time.
    """

    def __init__(self, directory: Path):
        self.directory = Path(directory)
        if not self.directory.is_dir():
            raise FormatError(f"{self.directory} is not a directory")
        manifest = read_manifest(self.directory)
        try:
            count = int(manifest["count"])
            self.width = int(manifest["width"])
            self.height = int(manifest["height"])
        except (KeyError, ValueError) as err:
            raise FormatError(f"{self.directory}: incomplete manifest ({err})") from err
        if manifest.get("format", "ppm") != "ppm":
            raise FormatError(f"{self.directory}: unsupported frame format {manifest['format']}")

        indices = sorted(int(m.group(1)) for p in self.directory.iterdir() if (m := FRAME_RE.match(p.name)))
        present = set(indices)
        span = max(count, indices[-1] + 1 if indices else 0)
        for index in range(span):
            if index not in present:
                raise GapError(index)
        if span != count:
            raise FormatError(f"{self.directory}: manifest lists {count} frames, found {span}")
        for index in indices:
            size = read_ppm_size(self.path(index))
            if size != (self.width, self.height):
                raise FormatError(f"{self.path(index)}: frame is {size[0]}x{size[1]}, "
                                  f"expected {self.width}x{self.height}")
        self.count = count

    def path(self, index: int) -> Path:
        return self.directory / f"{index:06d}.ppm"

    def __len__(self) -> int:
        return self.count

    def __getitem__(self, index: int) -> np.ndarray:
        if not 0 <= index < self.count:
            raise IndexError(index)
        return read_ppm(self.path(index))

    def __iter__(self) -> Iterator[np.ndarray]:
        for index in range(self.count):
            yield self[index]

    def read(self, start: int = 0, stop: Optional[int] = None) -> np.ndarray:
        stop = self.count if stop is None else stop
        return np.stack([self[i] for i in range(start, stop)])


class FrameWriter:
    """
    Writes frames in index order and finishes the directory with its manifest. Numbered frames left in
    the directory by an earlier run are removed first.
    """

    def __init__(self, directory: Path):
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)
        stale = [p for p in self.directory.iterdir() if FRAME_RE.match(p.name)]
        for path in stale:
            path.unlink()
        if stale:
            log.debug(f"Removed {len(stale)} stale frames from {self.directory}")
        self.count = 0
        self.size: Optional[tuple[int, int]] = None

    def write(self, frame: np.ndarray):
        size = (frame.shape[2], frame.shape[1])
        if self.size is None:
            self.size = size
        elif size != self.size:
            raise FormatError(f"Frame {self.count} is {size[0]}x{size[1]}, expected {self.size[0]}x{self.size[1]}")
        write_ppm(self.directory / f"{self.count:06d}.ppm", frame)
        self.count += 1

    def write_all(self, frames: Iterable[np.ndarray]):
        for frame in frames:
            self.write(frame)

    def close(self):
        width, height = self.size if self.size is not None else (0, 0)
        (self.directory / MANIFEST).write_text(
            f"count={self.count}\nwidth={width}\nheight={height}\nformat=ppm\n")
        log.info(f"Wrote {self.count} frames to {self.directory}")

    def __enter__(self) -> "FrameWriter":
        return self

    def __exit__(self, exc_type, exc, tb):
        if exc_type is None:
            self.close()


def load_frames(directory: Path) -> FrameSequence:
    return FrameSequence(directory)


def save_frames(frames: Iterable[np.ndarray], directory: Path):
    with FrameWriter(directory) as writer:
        writer.write_all(frames)
