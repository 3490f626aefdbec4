"""Track-vs-truth scoring: IoU success rate and centre-error statistics."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import InputError
from .tld import iou

SUCCESS_IOU = 0.5
_BOX = ("x_min", "y_min", "x_max", "y_max")


@dataclass
class EvalReport:
    frames: int
    success_rate: float
    mean_err: float
    sd_err: float
    max_err: float
    lost: int
    fps: Optional[float] = None

    def to_record(self) -> dict:
        d = asdict(self)
        for k in ("success_rate", "mean_err", "sd_err", "max_err"):
            d[k] = round(d[k], 6)
        return d


def evaluate(track: Sequence[dict], truth: Sequence[dict], full_res: bool = False,
             fps: Optional[float] = None) -> EvalReport:
    """Compare frame-aligned track and truth records.

    Records carry their resolution in an optional ``ratio`` field (1.0 when
    absent, as for truth files); the comparison runs at the track's resolution
    unless ``full_res``. Lost frames fail and are left out of the error stats.
    """
    if len(track) != len(truth):
        raise InputError(f"frame-count mismatch: {len(track)} track vs {len(truth)} truth records")
    if not track:
        raise InputError("no frames to evaluate")
    errs, hits, lost = [], 0, 0
    for tr, gt in zip(track, truth):
        if tr.get("frame_index") != gt.get("frame_index"):
            raise InputError(f"frame index mismatch at track {tr.get('frame_index')}")
        if tr.get("status", "tracking") != "tracking":
            lost += 1
            continue
        # bring both boxes to full resolution, then to the comparison resolution
        t_ratio = float(tr.get("ratio", 1.0))
        g_ratio = float(gt.get("ratio", 1.0))
        s = 1.0 if full_res else t_ratio
        t_box = tuple(tr[c] / t_ratio * s for c in _BOX)
        g_box = tuple(gt[c] / g_ratio * s for c in _BOX)
        tc = ((t_box[0] + t_box[2]) / 2, (t_box[1] + t_box[3]) / 2)
        gc = ((g_box[0] + g_box[2]) / 2, (g_box[1] + g_box[3]) / 2)
        errs.append(math.hypot(tc[0] - gc[0], tc[1] - gc[1]))
        hits += iou(t_box, g_box) >= SUCCESS_IOU
    e = np.array(errs) if errs else np.zeros(1)
    return EvalReport(len(track), hits / len(track), float(e.mean()), float(e.std()),
                      float(e.max()), lost, fps)
