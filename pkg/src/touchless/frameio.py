"""Frame sequences, grayscale conversion, binary edges and pyramid downscaling.

Coordinates follow numpy convention: ``pixels[y, x]``. Frames hold 8-bit data,
either ``(H, W)`` gray or ``(H, W, 3)`` RGB.
"""
from __future__ import annotations

import os
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, Union

import numpy as np
from PIL import Image

from .errors import InputError

PYRAMID_RATIOS = (1.0, 0.5, 0.25, 0.125, 0.0625)
DEFAULT_FRAME_INTERVAL_MS = 33
DEFAULT_EDGE_THRESHOLD = 80
IMAGE_SUFFIXES = (".pgm", ".ppm", ".pnm")


@dataclass(frozen=True, eq=False)
class Frame:
    pixels: np.ndarray
    timestamp_ms: int = 0

    def __post_init__(self):
        px = np.asarray(self.pixels)
        if px.dtype != np.uint8:
            raise InputError(f"frame pixels must be uint8, got {px.dtype}")
        if px.ndim not in (2, 3) or (px.ndim == 3 and px.shape[2] != 3):
            raise InputError(f"unsupported frame shape {px.shape}")
        if px.shape[0] == 0 or px.shape[1] == 0:
            raise InputError("frame has zero size")
        if self.timestamp_ms < 0:
            raise InputError("negative timestamp")
        object.__setattr__(self, "pixels", px)

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def channels(self) -> int:
        return 1 if self.pixels.ndim == 2 else 3

    def __eq__(self, other):
        if not isinstance(other, Frame):
            return NotImplemented
        return (self.timestamp_ms == other.timestamp_ms
                and self.pixels.shape == other.pixels.shape
                and bool(np.array_equal(self.pixels, other.pixels)))


@dataclass(frozen=True, eq=False)
class EdgeImage:
    bits: np.ndarray  # bool (H, W)

    def __post_init__(self):
        object.__setattr__(self, "bits", np.asarray(self.bits, dtype=bool))

    @property
    def width(self) -> int:
        return self.bits.shape[1]

    @property
    def height(self) -> int:
        return self.bits.shape[0]

    def __eq__(self, other):
        if not isinstance(other, EdgeImage):
            return NotImplemented
        return self.bits.shape == other.bits.shape and bool(np.array_equal(self.bits, other.bits))


def _read_image(path: Path) -> np.ndarray:
    try:
        with Image.open(path) as im:
            if im.format != "PPM":
                raise InputError(f"{path}: not a PGM/PPM image")
            if im.mode == "L":
                return np.array(im, dtype=np.uint8)
            if im.mode == "RGB":
                return np.array(im, dtype=np.uint8)
            raise InputError(f"{path}: unsupported image mode {im.mode}")
    except InputError:
        raise
    except Exception as exc:
        raise InputError(f"{path}: unreadable image ({exc})") from exc


def write_frame(path: Union[str, os.PathLike], frame: Frame) -> None:
    """Write a frame as binary PGM (gray) or PPM (RGB)."""
    mode = "L" if frame.channels == 1 else "RGB"
    Image.fromarray(frame.pixels, mode=mode).save(path, format="PPM")


def _sequence_paths(path: Path) -> list[Path]:
    if path.is_dir():
        return sorted(p for p in path.iterdir() if p.suffix.lower() in IMAGE_SUFFIXES)
    lines = path.read_text().splitlines()
    return [(path.parent / ln.strip()) for ln in lines if ln.strip() and not ln.startswith("#")]


def _read_timestamps(path: Path, n: int) -> list[int] | None:
    if not path.is_file():
        return None
    values = [int(ln) for ln in path.read_text().split()]
    if len(values) < n:
        raise InputError(f"{path}: {len(values)} timestamps for {n} frames")
    values = values[:n]
    if any(b <= a for a, b in zip(values, values[1:])) or (values and values[0] < 0):
        raise InputError(f"{path}: timestamps must be nonnegative and strictly increasing")
    return values


def load_sequence(path, frame_interval_ms: int = DEFAULT_FRAME_INTERVAL_MS) -> Iterator[Frame]:
    """Stream frames from a directory of PGM/PPM files or a list file.

    Files are taken in filename order. Timestamps come from ``timestamps.txt``
    next to the images when present, else ``i * frame_interval_ms``. Path and
    timestamp problems raise immediately; unreadable or mismatched frames
    raise when reached.
    """
    path = Path(path)
    if not path.exists():
        raise InputError(f"sequence path not found: {path}")
    files = _sequence_paths(path)
    if not files:
        raise InputError("empty sequence")
    base = path if path.is_dir() else path.parent
    stamps = _read_timestamps(base / "timestamps.txt", len(files))
    if stamps is None:
        if frame_interval_ms <= 0:
            raise InputError("frame_interval_ms must be positive")
        stamps = [i * frame_interval_ms for i in range(len(files))]
    return _stream(files, stamps)


def _stream(files, stamps) -> Iterator[Frame]:
    shape = None
    for f, ts in zip(files, stamps):
        if not f.is_file():
            raise InputError(f"frame not found: {f}")
        px = _read_image(f)
        if shape is None:
            shape = px.shape
        elif px.shape != shape:
            raise InputError(f"dimension mismatch: {f} is {px.shape[1]}x{px.shape[0]}, "
                             f"expected {shape[1]}x{shape[0]}")
        yield Frame(px, ts)


def to_grayscale(frame: Frame) -> Frame:
    if frame.channels == 1:
        return frame
    # exact integer form of round(0.299 R + 0.587 G + 0.114 B), halves rounded up
    px = frame.pixels.astype(np.uint32)
    acc = 299 * px[..., 0] + 587 * px[..., 1] + 114 * px[..., 2] + 500
    gray = np.minimum(acc // 1000, 255).astype(np.uint8)
    return Frame(gray, frame.timestamp_ms)


def gradients(gray: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """3x3 Sobel responses on the interior, zero on the one-pixel border."""
    g = gray.astype(np.int32)
    gx = np.zeros_like(g)
    gy = np.zeros_like(g)
    right = g[:-2, 2:] + 2 * g[1:-1, 2:] + g[2:, 2:]
    left = g[:-2, :-2] + 2 * g[1:-1, :-2] + g[2:, :-2]
    down = g[2:, :-2] + 2 * g[2:, 1:-1] + g[2:, 2:]
    up = g[:-2, :-2] + 2 * g[:-2, 1:-1] + g[:-2, 2:]
    gx[1:-1, 1:-1] = right - left
    gy[1:-1, 1:-1] = down - up
    return gx, gy


def detect_edges(frame: Frame, threshold: float = DEFAULT_EDGE_THRESHOLD) -> EdgeImage:
    """Binary edges where ``max(|Gx|, |Gy|) > threshold``.

    Gradients are raw (unnormalized) Sobel sums, so a full 0->255 step
    produces a magnitude of 1020.
    """
    if threshold <= 0:
        raise InputError("edge threshold must be positive")
    if frame.width < 3 or frame.height < 3:
        raise InputError("frame smaller than 3x3")
    gx, gy = gradients(to_grayscale(frame).pixels)
    mag = np.maximum(np.abs(gx), np.abs(gy))
    return EdgeImage(mag > threshold)


def _block(ratio: float) -> int:
    for r in PYRAMID_RATIOS:
        if abs(ratio - r) < 1e-12:
            return int(round(1.0 / r))
    raise InputError(f"unsupported pyramid ratio {ratio}; expected one of {PYRAMID_RATIOS}")


def downscale(image, ratio: float, min_size: int = 8):
    """Shrink a Frame (box mean) or EdgeImage (block OR) by a linear ratio.

    ``ratio`` applies per dimension; output dims are ``floor(dim * ratio)``.
    Trailing rows/columns that do not fill a block are dropped.
    """
    k = _block(ratio)
    if k == 1:
        return image
    arr = image.bits if isinstance(image, EdgeImage) else image.pixels
    h, w = arr.shape[0] // k, arr.shape[1] // k
    if h < min_size or w < min_size:
        raise InputError(f"downscaled size {w}x{h} below minimum {min_size}x{min_size}")
    cropped = arr[: h * k, : w * k]
    blocks = cropped.reshape(h, k, w, k, *arr.shape[2:])
    if isinstance(image, EdgeImage):
        return EdgeImage(blocks.any(axis=(1, 3)))
    mean = blocks.mean(axis=(1, 3), dtype=np.float64)
    return Frame(np.floor(mean + 0.5).astype(np.uint8), image.timestamp_ms)
