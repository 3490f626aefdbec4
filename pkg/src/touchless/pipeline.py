"""Per-frame CTM + TLD schedule on the hand/foot image pyramid.

The first frame (and any frame after the track is lost) is localized by
contour template matching at the CTM ratio; every other frame is tracked at
the smaller tracking ratio.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Optional, Sequence

import numpy as np

from . import tld
from .ctm import ContourTemplate, cb_template_matching
from .errors import InputError
from .frameio import DEFAULT_EDGE_THRESHOLD, Frame, detect_edges, downscale, to_grayscale
from .skin import SkinRange, detect_skin_regions

CTM_RATIO = {"hand": 0.125, "foot": 0.25}
TRACK_RATIO = {"hand": 0.0625, "foot": 0.125}


@dataclass
class PipelineConfig:
    kind: str = "hand"
    edge_threshold: float = DEFAULT_EDGE_THRESHOLD
    skin_range: SkinRange = field(default_factory=SkinRange)
    skin_smoothing: bool = True
    skin_gating: bool = True
    mask_fraction: float = 0.5
    mask_dilation: int = 4
    min_score: float = 0.5
    tld: tld.TLDConfig = field(default_factory=tld.TLDConfig)

    @property
    def ctm_ratio(self) -> float:
        return CTM_RATIO[self.kind]

    @property
    def track_ratio(self) -> float:
        return TRACK_RATIO[self.kind]


@dataclass
class TrackRecord:
    frame_index: int
    status: str
    roi: Optional[tld.ROI]
    timestamp_ms: int
    ratio: float

    def to_record(self, full_res: bool = False) -> dict:
        k = 1.0 / self.ratio if full_res else 1.0
        rec = {"frame_index": self.frame_index, "status": self.status}
        if self.roi is None:
            rec.update(x_min=None, y_min=None, x_max=None, y_max=None, confidence=0.0, scale=None)
        else:
            x0, y0, x1, y1 = (float(v) * k for v in self.roi.bbox)
            rec.update(x_min=round(x0, 3), y_min=round(y0, 3), x_max=round(x1, 3),
                       y_max=round(y1, 3), confidence=round(float(self.roi.confidence), 4),
                       scale=round(float(self.roi.scale), 4))
        rec["timestamp_ms"] = self.timestamp_ms
        rec["ratio"] = 1.0 if full_res else self.ratio
        return rec


def _clip_box(bbox, shape):
    h, w = shape
    x0, y0, x1, y1 = max(0.0, bbox[0]), max(0.0, bbox[1]), min(float(w), bbox[2]), min(float(h), bbox[3])
    if x1 - x0 < 1.0 or y1 - y0 < 1.0:
        return None
    return (x0, y0, x1, y1)


class GesturePipeline:
    """Stateful per-sequence tracker; feed frames in order to :meth:`process_frame`."""

    def __init__(self, templates: Sequence[ContourTemplate], config: Optional[PipelineConfig] = None):
        self.config = config or PipelineConfig()
        if self.config.kind not in CTM_RATIO:
            raise InputError(f"unknown mode {self.config.kind!r}")
        if not templates:
            raise InputError("no templates given")
        self.templates = list(templates)
        self.state: Optional[tld.TrackState] = None
        self.frame_index = 0
        self._area0: Optional[float] = None

    # CTM localization, returned at tracking resolution
    def localize(self, frame: Frame) -> Optional[tld.ROI]:
        cfg = self.config
        edges = downscale(detect_edges(frame, cfg.edge_threshold), cfg.ctm_ratio)
        mask = None
        if cfg.kind == "hand" and cfg.skin_gating:
            if frame.channels != 3:
                raise InputError("hand mode with skin gating needs RGB frames")
            small = downscale(frame, cfg.ctm_ratio)
            mask = detect_skin_regions(small, cfg.skin_range, cfg.skin_smoothing)
        det = cb_template_matching(edges, mask, self.templates, cfg.mask_fraction, cfg.mask_dilation)
        if det is None or det.normalized_score < cfg.min_score:
            return None
        x0, y0, x1, y1 = det.match.bbox
        k = cfg.track_ratio / cfg.ctm_ratio
        return tld.ROI((x0 * k, y0 * k, (x1 + 1) * k, (y1 + 1) * k), 1.0, 1.0, self.frame_index)

    def _scale(self, roi: tld.ROI) -> float:
        return math.sqrt(roi.width * roi.height / self._area0)

    def _reacquire(self, frame: Frame, gray: np.ndarray) -> Optional[tld.ROI]:
        roi = self.localize(frame)
        if roi is None:
            self.state = None
            return None
        if self._area0 is None:
            self._area0 = roi.width * roi.height
        roi = replace(roi, scale=self._scale(roi))
        self.state = tld.init(gray, roi, self.config.tld)
        return self.state.last_roi

    def _track(self, gray: np.ndarray) -> Optional[tld.ROI]:
        cfg = self.config.tld
        st = self.state
        cand = tld.track_frame(st.last_frame, gray, st.last_roi, cfg)
        if cand is not None:
            box = _clip_box(cand.bbox, gray.shape)
            if box is None:
                cand = None
            else:
                conf = float(st.model.score_boxes(gray, [box])[0])
                cand = replace(cand, bbox=box, confidence=conf)
        dets = tld.detect(gray, st.model, st.last_roi, cfg, self.frame_index)
        roi = tld.integrate(cand, dets, cfg.valid_threshold)
        if roi is None:
            return None
        roi = replace(roi, frame_index=self.frame_index, scale=self._scale(roi))
        tld.pn_learn(st, gray, roi, dets, cfg)
        st.last_roi = roi
        st.last_frame = gray
        return roi

    def process_frame(self, frame: Frame) -> TrackRecord:
        cfg = self.config
        gray = downscale(to_grayscale(frame), cfg.track_ratio).pixels
        roi = None
        if self.state is not None:
            roi = self._track(gray)
        if roi is None:
            # first frame, or the tracker lost the target: fall back to CTM
            roi = self._reacquire(frame, gray)
        rec = TrackRecord(self.frame_index, "tracking" if roi is not None else "lost", roi,
                          frame.timestamp_ms, cfg.track_ratio)
        self.frame_index += 1
        return rec

    def run(self, frames: Iterable[Frame]) -> list[TrackRecord]:
        return [self.process_frame(f) for f in frames]
