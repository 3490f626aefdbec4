"""Seeded synthetic gesture sequences with exact ground truth.

A bundled contour template is rendered at full resolution (scaled up by the
inverse of its CTM pyramid ratio) as a white stroke around a skin-coloured
fill on a mid-gray background, optionally with random clutter strokes that
stay clear of the target's swept area.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Optional

import cv2
import numpy as np

from .ctm import ContourTemplate, bundled_template
from .errors import InputError
from .frameio import Frame, write_frame
from .gestures import GestureThresholds
from .pipeline import CTM_RATIO

BACKGROUND = (128, 128, 128)
SKIN_TONE = (224, 172, 105)
STROKE = (255, 255, 255)
TRAJECTORIES = ("static", "linear", "circular", "scaling", "deforming")
MAX_DEFORMATION = 0.33
_SHIFT = 4  # cv2 fixed-point bits for subpixel vertices


@dataclass
class Scenario:
    template: str = "hand"
    trajectory: str = "static"
    frames: int = 10
    seed: int = 0
    width: int = 640
    height: int = 480
    center: Optional[tuple[float, float]] = None
    velocity: tuple[float, float] = (0.0, 0.0)  # px/frame, linear
    radius: float = 0.0  # px, circular
    step_deg: float = 15.0  # circular
    scale_amplitude: float = 0.0  # scaling and deforming
    period: int = 48  # frames per scaling/deforming cycle
    base_scale: float = 1.0
    clutter: float = 0.0  # strokes per 100k pixels
    frame_interval_ms: int = 33

    def __post_init__(self):
        if self.trajectory not in TRAJECTORIES:
            raise InputError(f"unknown trajectory {self.trajectory!r}")
        if self.frames < 1:
            raise InputError("frames must be >= 1")
        if self.trajectory in ("scaling", "deforming") and self.scale_amplitude > MAX_DEFORMATION + 1e-9:
            raise InputError("deformation above 33%")
        self.velocity = tuple(self.velocity)
        if self.center is not None:
            self.center = tuple(self.center)

    @classmethod
    def from_dict(cls, d: dict) -> "Scenario":
        known = set(cls.__dataclass_fields__)
        extra = set(d) - known
        if extra:
            raise InputError(f"unknown scenario keys: {sorted(extra)}")
        return cls(**d)


@dataclass
class TruthRecord:
    frame_index: int
    x_min: float
    y_min: float
    x_max: float
    y_max: float
    cx: float
    cy: float
    scale: float


@dataclass
class SynthSequence:
    frames: list
    truth: list
    labels: list
    template: ContourTemplate


def pose(sc: Scenario, k: int) -> tuple[float, float, float, float]:
    """Centre (x, y) and per-axis scale of the target at frame ``k``."""
    cx, cy = sc.center if sc.center is not None else (sc.width / 2.0, sc.height / 2.0)
    sx = sy = sc.base_scale
    if sc.trajectory == "linear":
        cx += sc.velocity[0] * k
        cy += sc.velocity[1] * k
    elif sc.trajectory == "circular":
        a = math.radians(sc.step_deg * k)
        cx += sc.radius * math.cos(a)
        cy += sc.radius * math.sin(a)
    elif sc.trajectory == "scaling":
        f = 1.0 + sc.scale_amplitude * math.sin(2 * math.pi * k / sc.period)
        sx, sy = sx * f, sy * f
    elif sc.trajectory == "deforming":
        d = sc.scale_amplitude * math.sin(2 * math.pi * k / sc.period)
        sx, sy = sx * (1.0 + d), sy * (1.0 - d)
    return cx, cy, sx, sy


def contour_vertices(template: ContourTemplate, cx: float, cy: float, sx: float, sy: float,
                     ratio: float) -> np.ndarray:
    """Template chain mapped to full-resolution pixel-centre coordinates."""
    tw, th = template.size
    p = template.points.astype(np.float64) + 0.5
    x = cx + (p[:, 0] - tw / 2.0) * sx / ratio - 0.5
    y = cy + (p[:, 1] - th / 2.0) * sy / ratio - 0.5
    return np.stack([x, y], axis=1)


def _fixed(v: np.ndarray) -> np.ndarray:
    return np.round(v * (1 << _SHIFT)).astype(np.int32).reshape(-1, 1, 2)


def render_target(canvas: np.ndarray, verts: np.ndarray, fill: bool = True) -> np.ndarray:
    """Draw the filled contour; returns the boolean stroke mask."""
    stroke = np.zeros(canvas.shape[:2], dtype=np.uint8)
    cv2.polylines(stroke, [_fixed(verts)], True, 1, 1, cv2.LINE_8, _SHIFT)
    if fill:
        cv2.fillPoly(canvas, [_fixed(verts)], SKIN_TONE, cv2.LINE_8, _SHIFT)
    mask = stroke.astype(bool)
    canvas[mask] = STROKE
    return mask


def _clutter(sc: Scenario, rng: np.random.Generator, keep_out) -> list[np.ndarray]:
    n = int(round(sc.clutter * sc.width * sc.height / 1e5))
    x0, y0, x1, y1 = keep_out
    strokes = []
    tries = 0
    while len(strokes) < n and tries < 200 * max(n, 1):
        tries += 1
        start = rng.uniform([0, 0], [sc.width - 1, sc.height - 1])
        pts = [start]
        for _ in range(2):
            ang = rng.uniform(0, 2 * np.pi)
            length = rng.uniform(20, 80)
            pts.append(pts[-1] + length * np.array([np.cos(ang), np.sin(ang)]))
        pts = np.array(pts)
        if (pts < 0).any() or (pts[:, 0] > sc.width - 1).any() or (pts[:, 1] > sc.height - 1).any():
            continue
        if pts[:, 0].max() >= x0 and pts[:, 0].min() <= x1 and pts[:, 1].max() >= y0 and pts[:, 1].min() <= y1:
            continue
        strokes.append(pts)
    return strokes


def _labels(sc: Scenario, kind: str, th: GestureThresholds) -> list[dict]:
    if sc.trajectory != "linear" or sc.frames < 2:
        return []
    vx, vy = sc.velocity
    dt = sc.frame_interval_ms / 1000.0
    speed = math.hypot(vx, vy) / dt
    if speed < th.v_idle:
        return []
    alpha = math.degrees(math.atan2(vy, vx)) % 360.0
    t_end = (sc.frames - 1) * dt
    fast = speed >= th.v_fast
    out = []
    if kind == "hand":
        if _near(alpha, 0.0):
            out.append("SwingFingerRight")
        elif _near(alpha, 180.0):
            out.append("SwingFingerLeft")
        if out:
            out.append("SwingFingerFast" if fast else "SwingFingerSlow")
    else:
        if fast and _near(alpha, 90.0):
            out.append("KickBall")
        else:
            out.append("MoveFootFast" if fast else "MoveFootSlow")
    return [{"t_start": 0.0, "t_end": round(t_end, 6), "label": lb} for lb in out]


def _near(a: float, b: float, tol: float = 45.0) -> bool:
    d = abs((a - b + 180.0) % 360.0 - 180.0)
    return d <= tol


def generate(sc: Scenario, template: Optional[ContourTemplate] = None) -> SynthSequence:
    template = template or bundled_template(sc.template)
    ratio = CTM_RATIO[template.kind]
    rng = np.random.default_rng(sc.seed)
    poses = [pose(sc, k) for k in range(sc.frames)]
    verts = [contour_vertices(template, *p, ratio) for p in poses]
    allv = np.concatenate(verts)
    if allv.min() < 0 or (allv[:, 0] > sc.width - 1).any() or (allv[:, 1] > sc.height - 1).any():
        raise InputError("trajectory leaves the frame")
    margin = 3.0 / ratio
    keep_out = (allv[:, 0].min() - margin, allv[:, 1].min() - margin,
                allv[:, 0].max() + margin, allv[:, 1].max() + margin)
    strokes = _clutter(sc, rng, keep_out)
    backdrop = np.empty((sc.height, sc.width, 3), dtype=np.uint8)
    backdrop[:] = BACKGROUND
    for s in strokes:
        cv2.polylines(backdrop, [_fixed(s - 0.0)], False, STROKE, 1, cv2.LINE_8, _SHIFT)
    frames, truth = [], []
    for k, (v, (cx, cy, sx, sy)) in enumerate(zip(verts, poses)):
        canvas = backdrop.copy()
        mask = render_target(canvas, v)
        ys, xs = np.nonzero(mask)
        x0, x1, y0, y1 = float(xs.min()), float(xs.max() + 1), float(ys.min()), float(ys.max() + 1)
        truth.append(TruthRecord(k, x0, y0, x1, y1, (x0 + x1) / 2, (y0 + y1) / 2,
                                 round(math.sqrt(sx * sy), 6)))
        frames.append(Frame(canvas, k * sc.frame_interval_ms))
    labels = _labels(sc, template.kind, GestureThresholds())
    return SynthSequence(frames, truth, labels, template)


def write_dataset(seq: SynthSequence, out_dir, scenario: Optional[Scenario] = None) -> Path:
    """Write frames (PPM), timestamps.txt, truth.jsonl and labels.jsonl."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for i, f in enumerate(seq.frames):
        write_frame(out / f"frame_{i:05d}.ppm", f)
    (out / "timestamps.txt").write_text("".join(f"{f.timestamp_ms}\n" for f in seq.frames))
    with open(out / "truth.jsonl", "w") as fh:
        for t in seq.truth:
            fh.write(json.dumps(asdict(t)) + "\n")
    with open(out / "labels.jsonl", "w") as fh:
        for lb in seq.labels:
            fh.write(json.dumps(lb) + "\n")
    if scenario is not None:
        (out / "scenario.json").write_text(json.dumps(asdict(scenario), indent=1) + "\n")
    return out
