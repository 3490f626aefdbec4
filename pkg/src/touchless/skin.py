"""HSV skin segmentation used to gate hand detection."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InputError
from .frameio import Frame


@dataclass(frozen=True)
class SkinRange:
    """Accepted HSV box. Hue is in degrees; ``h_min > h_max`` wraps through 0."""

    h_min: float = 0.0
    h_max: float = 50.0
    s_min: float = 0.20
    s_max: float = 0.75
    v_min: float = 0.25
    v_max: float = 1.0

    def __post_init__(self):
        if not (0 <= self.h_min < 360 and 0 <= self.h_max < 360):
            raise InputError("hue bounds must lie in [0, 360)")
        if self.s_min > self.s_max or self.v_min > self.v_max:
            raise InputError("saturation/value bounds are inverted")

    def contains(self, h, s, v):
        if self.h_min <= self.h_max:
            hue_ok = (h >= self.h_min) & (h <= self.h_max)
        else:
            hue_ok = (h >= self.h_min) | (h <= self.h_max)
        return hue_ok & (s >= self.s_min) & (s <= self.s_max) & (v >= self.v_min) & (v <= self.v_max)


@dataclass(frozen=True, eq=False)
class SkinMask:
    bits: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "bits", np.asarray(self.bits, dtype=bool))

    @property
    def width(self) -> int:
        return self.bits.shape[1]

    @property
    def height(self) -> int:
        return self.bits.shape[0]


def hsv_arrays(rgb: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Hexcone HSV of an ``(..., 3)`` uint8 array: hue in degrees, s and v in [0, 1]."""
    c = rgb.astype(np.float64) / 255.0
    r, g, b = c[..., 0], c[..., 1], c[..., 2]
    mx = c.max(axis=-1)
    mn = c.min(axis=-1)
    delta = mx - mn
    safe = np.where(delta > 0, delta, 1.0)
    h = np.where(mx == r, ((g - b) / safe) % 6.0,
                 np.where(mx == g, (b - r) / safe + 2.0, (r - g) / safe + 4.0))
    h = np.where(delta > 0, 60.0 * h, 0.0) % 360.0
    s = np.where(mx > 0, delta / np.where(mx > 0, mx, 1.0), 0.0)
    return h, s, mx


def rgb_to_hsv(pixel) -> tuple[float, float, float]:
    h, s, v = hsv_arrays(np.asarray(pixel, dtype=np.uint8).reshape(1, 3))
    return float(h[0]), float(s[0]), float(v[0])


def raw_skin_mask(frame: Frame, skin_range: SkinRange) -> np.ndarray:
    """Per-pixel HSV membership, before smoothing."""
    if frame.channels != 3:
        raise InputError("skin detection needs an RGB frame")
    return skin_range.contains(*hsv_arrays(frame.pixels))


def majority_3x3(bits: np.ndarray) -> np.ndarray:
    # borders replicate so uniform regions touching the frame edge survive
    padded = np.pad(bits.astype(np.uint8), 1, mode="edge")
    h, w = bits.shape
    votes = sum(padded[dy:dy + h, dx:dx + w] for dy in range(3) for dx in range(3))
    return votes >= 5


def detect_skin_regions(frame: Frame, skin_range: SkinRange = SkinRange(),
                        smoothing: bool = True) -> SkinMask:
    bits = raw_skin_mask(frame, skin_range)
    if smoothing:
        bits = majority_3x3(bits)
    return SkinMask(bits)


def dilate(bits: np.ndarray, radius: int) -> np.ndarray:
    """Square (Chebyshev) dilation by ``radius`` pixels."""
    out = bits.astype(bool)
    for _ in range(radius):
        p = np.pad(out, 1)
        h, w = out.shape
        grown = np.zeros_like(out)
        for dy in range(3):
            for dx in range(3):
                grown |= p[dy:dy + h, dx:dx + w]
        out = grown
    return out
