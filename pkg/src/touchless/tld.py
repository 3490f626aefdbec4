"""Tracking-learning-detection on small pyramid images.

Boxes are continuous ``(x_min, y_min, x_max, y_max)`` coordinates where pixel
``i`` spans ``[i, i + 1)``. All images here are gray uint8 arrays at tracking
resolution.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, replace
from typing import Optional, Sequence

import cv2
import numpy as np

from .errors import InputError


@dataclass
class TLDConfig:
    patch_size: int = 15
    pos_capacity: int = 64
    neg_capacity: int = 128
    detect_threshold: float = 0.6
    valid_threshold: float = 0.55
    novelty_ncc: float = 0.95
    negative_iou: float = 0.2
    negative_disjoint: bool = True
    nms_iou: float = 0.5
    scales: tuple = (0.8, 1.0, 1.2)
    stride_frac: float = 0.1
    grid: int = 10
    min_survivors: float = 0.25
    lk_window: int = 5
    lk_levels: int = 2


@dataclass
class ROI:
    bbox: tuple[float, float, float, float]
    confidence: float = 1.0
    scale: float = 1.0
    frame_index: int = 0

    def __post_init__(self):
        x0, y0, x1, y1 = self.bbox
        if not (x0 < x1 and y0 < y1):
            raise InputError(f"degenerate box {self.bbox}")

    @property
    def width(self) -> float:
        return self.bbox[2] - self.bbox[0]

    @property
    def height(self) -> float:
        return self.bbox[3] - self.bbox[1]

    @property
    def center(self) -> tuple[float, float]:
        return (self.bbox[0] + self.bbox[2]) / 2.0, (self.bbox[1] + self.bbox[3]) / 2.0


def _intersects(a, b) -> bool:
    return min(a[2], b[2]) > max(a[0], b[0]) and min(a[3], b[3]) > max(a[1], b[1])


def iou(a, b) -> float:
    ix = min(a[2], b[2]) - max(a[0], b[0])
    iy = min(a[3], b[3]) - max(a[1], b[1])
    if ix <= 0 or iy <= 0:
        return 0.0
    inter = ix * iy
    union = (a[2] - a[0]) * (a[3] - a[1]) + (b[2] - b[0]) * (b[3] - b[1]) - inter
    return inter / union


# -- patches -------------------------------------------------------------------

def sample_patches(image: np.ndarray, boxes, size: int) -> np.ndarray:
    """Bilinear resample of each box to ``size x size``; returns (n, size*size) float."""
    boxes = np.asarray(boxes, dtype=np.float64).reshape(-1, 4)
    img = image.astype(np.float64)
    h, w = img.shape
    t = (np.arange(size) + 0.5) / size
    xs = boxes[:, 0:1] + t[None] * (boxes[:, 2:3] - boxes[:, 0:1]) - 0.5
    ys = boxes[:, 1:2] + t[None] * (boxes[:, 3:4] - boxes[:, 1:2]) - 0.5
    xs = np.clip(xs, 0, w - 1)
    ys = np.clip(ys, 0, h - 1)
    x0 = np.minimum(np.floor(xs).astype(int), w - 2 if w > 1 else 0)
    y0 = np.minimum(np.floor(ys).astype(int), h - 2 if h > 1 else 0)
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    fx = (xs - x0)[:, None, :]
    fy = (ys - y0)[:, :, None]
    g = lambda yy, xx: img[yy[:, :, None], xx[:, None, :]]
    top = g(y0, x0) * (1 - fx) + g(y0, x1) * fx
    bot = g(y1, x0) * (1 - fx) + g(y1, x1) * fx
    out = top * (1 - fy) + bot * fy
    return out.reshape(len(boxes), size * size)


def normalize(patches: np.ndarray) -> np.ndarray:
    """Zero-mean, unit-norm rows; flat patches become zero vectors (NCC 0)."""
    p = patches - patches.mean(axis=1, keepdims=True)
    norm = np.linalg.norm(p, axis=1, keepdims=True)
    return np.where(norm > 1e-6, p / np.where(norm > 1e-6, norm, 1.0), 0.0)


class OnlineModel:
    """Positive and negative normalized patches with oldest-first eviction."""

    def __init__(self, patch_size: int = 15, pos_capacity: int = 64, neg_capacity: int = 128,
                 base_size: tuple[float, float] = (1.0, 1.0)):
        self.patch_size = patch_size
        self.positives: deque = deque(maxlen=pos_capacity)
        self.negatives: deque = deque(maxlen=neg_capacity)
        self.base_size = base_size

    def _matrix(self, which) -> np.ndarray:
        if not which:
            return np.zeros((0, self.patch_size ** 2))
        return np.stack(which)

    def ncc(self, patches: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Max NCC of each normalized patch against positives and negatives."""
        pos = self._matrix(self.positives)
        neg = self._matrix(self.negatives)
        p = patches @ pos.T if len(pos) else np.zeros((len(patches), 1))
        n = patches @ neg.T if len(neg) else np.zeros((len(patches), 1))
        return p.max(axis=1), n.max(axis=1)

    def confidence(self, patches: np.ndarray) -> np.ndarray:
        pos, neg = self.ncc(patches)
        # an empty or anti-correlated negative set does not raise confidence
        diff = np.clip(pos - np.maximum(neg, 0.0), -1.0, 1.0)
        return (diff + 1.0) / 2.0

    def score_boxes(self, image: np.ndarray, boxes) -> np.ndarray:
        return self.confidence(normalize(sample_patches(image, boxes, self.patch_size)))


@dataclass
class TrackState:
    model: OnlineModel
    last_roi: ROI
    last_frame: np.ndarray
    status: str = "tracking"


def _check_inside(image: np.ndarray, bbox) -> None:
    h, w = image.shape
    x0, y0, x1, y1 = bbox
    if x0 < 0 or y0 < 0 or x1 > w or y1 > h:
        raise InputError(f"ROI {bbox} outside {w}x{h} frame")


def init(image: np.ndarray, roi0: ROI, cfg: TLDConfig = TLDConfig()) -> TrackState:
    """Start tracking: the model holds the ROI_0 patch as its only positive."""
    _check_inside(image, roi0.bbox)
    model = OnlineModel(cfg.patch_size, cfg.pos_capacity, cfg.neg_capacity,
                        (roi0.width, roi0.height))
    model.positives.append(normalize(sample_patches(image, [roi0.bbox], cfg.patch_size))[0])
    roi = replace(roi0, confidence=1.0)
    return TrackState(model, roi, image, "tracking")


# -- tracker -------------------------------------------------------------------

def _grid_points(bbox, n: int) -> np.ndarray:
    x0, y0, x1, y1 = bbox
    t = (np.arange(n) + 0.5) / n
    xs = x0 + t * (x1 - x0) - 0.5
    ys = y0 + t * (y1 - y0) - 0.5
    gx, gy = np.meshgrid(xs, ys)
    return np.stack([gx.ravel(), gy.ravel()], axis=1).astype(np.float32)


def _lk(a: np.ndarray, b: np.ndarray, pts: np.ndarray, cfg: TLDConfig):
    nxt, st, _ = cv2.calcOpticalFlowPyrLK(
        a, b, pts.reshape(-1, 1, 2), None, winSize=(cfg.lk_window, cfg.lk_window),
        maxLevel=cfg.lk_levels,
        criteria=(cv2.TERM_CRITERIA_EPS | cv2.TERM_CRITERIA_COUNT, 30, 0.01))
    return nxt.reshape(-1, 2), st.ravel().astype(bool)


def track_frame(prev: np.ndarray, cur: np.ndarray, last_roi: ROI,
                cfg: TLDConfig = TLDConfig()) -> Optional[ROI]:
    """Median-flow step: grid points flowed forward and back, FB-median gated.

    Returns the shifted and rescaled box (confidence 0, to be scored by the
    caller) or None when fewer than ``min_survivors`` of the points survive.
    """
    if prev.shape != cur.shape:
        raise InputError("frames differ in size")
    p0 = _grid_points(last_roi.bbox, cfg.grid)
    p1, ok1 = _lk(prev, cur, p0, cfg)
    p0r, ok2 = _lk(cur, prev, p1, cfg)
    ok = ok1 & ok2
    if not ok.any():
        return None
    fb = np.linalg.norm(p0 - p0r, axis=1)
    keep = ok & (fb <= np.median(fb[ok]))
    if keep.sum() < cfg.min_survivors * len(p0):
        return None
    a, b = p0[keep].astype(np.float64), p1[keep].astype(np.float64)
    dx, dy = np.median(b - a, axis=0)
    i, j = np.triu_indices(len(a), k=1)
    d0 = np.linalg.norm(a[i] - a[j], axis=1)
    d1 = np.linalg.norm(b[i] - b[j], axis=1)
    good = d0 > 1e-6
    scale = float(np.median(d1[good] / d0[good])) if good.any() else 1.0
    cx, cy = last_roi.center
    cx, cy = cx + dx, cy + dy
    hw, hh = last_roi.width * scale / 2.0, last_roi.height * scale / 2.0
    if hw <= 0 or hh <= 0:
        return None
    return ROI((cx - hw, cy - hh, cx + hw, cy + hh), 0.0, last_roi.scale * scale,
               last_roi.frame_index + 1)


# -- detector ------------------------------------------------------------------

def _interp_matrix(starts: np.ndarray, side: float, size: int, limit: int) -> np.ndarray:
    """Rows of bilinear weights resampling ``[start, start + side)`` to ``size`` samples."""
    t = (np.arange(size) + 0.5) / size
    c = np.clip(starts[:, None] + t[None] * side - 0.5, 0, limit - 1)
    i0 = np.floor(c).astype(int)
    i1 = np.minimum(i0 + 1, limit - 1)
    f = c - i0
    m = np.zeros((len(starts), size, limit))
    n_idx = np.arange(len(starts))[:, None]
    s_idx = np.arange(size)[None, :]
    np.add.at(m, (n_idx, s_idx, i0), 1 - f)
    np.add.at(m, (n_idx, s_idx, i1), f)
    return m


def grid_patches(image: np.ndarray, xs: np.ndarray, ys: np.ndarray, ww: float, wh: float,
                 size: int) -> np.ndarray:
    """Patches for every window ``(x, y, x + ww, y + wh)`` with x in xs, y in ys.

    Same result as :func:`sample_patches` on the equivalent boxes, computed
    separably; rows are ordered y-major.
    """
    h, w = image.shape
    my = _interp_matrix(ys, wh, size, h)  # (ny, size, h)
    mx = _interp_matrix(xs, ww, size, w)  # (nx, size, w)
    rows = my @ image.astype(np.float64)  # (ny, size, w)
    out = rows[:, None] @ mx.transpose(0, 2, 1)[None]  # (ny, nx, size, size)
    return out.reshape(len(ys) * len(xs), size * size)


def _axis_positions(anchor: float, side: float, limit: float, stride: float) -> np.ndarray:
    lo = anchor - np.floor(anchor / stride) * stride
    return np.arange(lo, limit - side + 1e-9, stride)


def candidate_grids(shape, anchor_bbox, scales, stride_frac):
    """Per-scale window grids (xs, ys, ww, wh) whose phase passes through the anchor box."""
    h, w = shape
    ax0, ay0, ax1, ay1 = anchor_bbox
    cx, cy = (ax0 + ax1) / 2, (ay0 + ay1) / 2
    out = []
    for s in scales:
        ww, wh = (ax1 - ax0) * s, (ay1 - ay0) * s
        if ww > w or wh > h or ww < 2 or wh < 2:
            continue
        sx, sy = max(1.0, round(stride_frac * ww)), max(1.0, round(stride_frac * wh))
        xs = _axis_positions(cx - ww / 2, ww, w, sx)
        ys = _axis_positions(cy - wh / 2, wh, h, sy)
        if len(xs) and len(ys):
            out.append((xs, ys, ww, wh))
    return out


def candidate_windows(shape, anchor_bbox, scales, stride_frac) -> np.ndarray:
    """All sliding-window boxes, in the same order as the patches of :func:`detect`."""
    out = []
    for xs, ys, ww, wh in candidate_grids(shape, anchor_bbox, scales, stride_frac):
        gx, gy = np.meshgrid(xs, ys)
        gx, gy = gx.ravel(), gy.ravel()
        out.append(np.stack([gx, gy, gx + ww, gy + wh], axis=1))
    return np.concatenate(out) if out else np.zeros((0, 4))


def nms(boxes: np.ndarray, scores: np.ndarray, threshold: float) -> list[int]:
    """Greedy suppression; equal scores keep the earlier box."""
    boxes = np.asarray(boxes, dtype=np.float64).reshape(-1, 4)
    order = np.argsort(-np.asarray(scores), kind="stable")
    area = (boxes[:, 2] - boxes[:, 0]) * (boxes[:, 3] - boxes[:, 1])
    kept: list[int] = []
    alive = np.ones(len(boxes), dtype=bool)
    for k in order:
        if not alive[k]:
            continue
        kept.append(int(k))
        ix = np.minimum(boxes[:, 2], boxes[k, 2]) - np.maximum(boxes[:, 0], boxes[k, 0])
        iy = np.minimum(boxes[:, 3], boxes[k, 3]) - np.maximum(boxes[:, 1], boxes[k, 1])
        inter = np.clip(ix, 0, None) * np.clip(iy, 0, None)
        ov = inter / (area + area[k] - inter)
        alive &= ov <= threshold
        alive[k] = False
    return kept


def detect(image: np.ndarray, model: OnlineModel, anchor: Optional[ROI] = None,
           cfg: TLDConfig = TLDConfig(), frame_index: int = 0) -> list[ROI]:
    """Scan windows at 0.8/1.0/1.2 of the anchor size, keep confident ones after NMS.

    The anchor (last ROI, or a centred box of the model's base size) fixes both
    the window sizes and the grid phase, so the anchor window itself is always
    scanned.
    """
    if not model.positives:
        raise InputError("model has no positive patches")
    if anchor is None:
        h, w = image.shape
        bw, bh = model.base_size
        anchor_bbox = ((w - bw) / 2, (h - bh) / 2, (w + bw) / 2, (h + bh) / 2)
        base_scale = 1.0
    else:
        anchor_bbox = anchor.bbox
        base_scale = anchor.scale
    grids = candidate_grids(image.shape, anchor_bbox, cfg.scales, cfg.stride_frac)
    if not grids:
        return []
    boxes = candidate_windows(image.shape, anchor_bbox, cfg.scales, cfg.stride_frac)
    patches = np.concatenate([grid_patches(image, *g, model.patch_size) for g in grids])
    conf = model.confidence(normalize(patches))
    hit = np.flatnonzero(conf > cfg.detect_threshold)
    boxes, conf = boxes[hit], conf[hit]
    aw = anchor_bbox[2] - anchor_bbox[0]
    out = []
    for k in nms(boxes, conf, cfg.nms_iou):
        b = tuple(float(v) for v in boxes[k])
        out.append(ROI(b, float(conf[k]), base_scale * (b[2] - b[0]) / aw, frame_index))
    return out


# -- learning and integration --------------------------------------------------

def pn_learn(state: TrackState, image: np.ndarray, validated: ROI, detections: Sequence[ROI],
             cfg: TLDConfig = TLDConfig()) -> OnlineModel:
    """P-expert grows positives with novel validated patches; N-expert adds far detections."""
    model = state.model
    patch = normalize(sample_patches(image, [validated.bbox], model.patch_size))
    pos, _ = model.ncc(patch)
    if pos[0] < cfg.novelty_ncc:
        model.positives.append(patch[0])
    far = [d.bbox for d in detections if iou(d.bbox, validated.bbox) < cfg.negative_iou
           and not (cfg.negative_disjoint and _intersects(d.bbox, validated.bbox))]
    if far:
        for p in normalize(sample_patches(image, far, model.patch_size)):
            model.negatives.append(p)
    return model


def integrate(track_cand: Optional[ROI], det_cands: Sequence[ROI],
              valid_threshold: float = TLDConfig.valid_threshold) -> Optional[ROI]:
    """Most confident candidate, tracker first on ties; None (lost) below threshold."""
    cands = ([track_cand] if track_cand is not None else []) + list(det_cands)
    best = None
    for c in cands:
        if best is None or c.confidence > best.confidence:
            best = c
    if best is None or best.confidence <= valid_threshold:
        return None
    return best
