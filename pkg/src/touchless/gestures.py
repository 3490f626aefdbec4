"""Motion vectors from tracked positions and the dynamic-gesture classifier."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

from .errors import InputError

HAND_LABELS = ("SwingFingerLeft", "SwingFingerRight", "FingerFlexionExtension",
               "SwingFingerSlow", "SwingFingerFast", "CollideBall")
FOOT_LABELS = ("KickBall", "MoveFootSlow", "MoveFootFast", "PressKey", "ReleaseKey")
ALL_LABELS = HAND_LABELS + FOOT_LABELS
# labels that need game-object geometry; the games module emits these
GEOMETRY_LABELS = ("CollideBall", "PressKey", "ReleaseKey")


@dataclass(frozen=True)
class TrajectorySample:
    center: tuple[float, float]  # full-resolution camera px
    scale: float
    t: float  # seconds


@dataclass(frozen=True)
class MotionVector:
    D: float
    T: float
    alpha: float  # degrees in [0, 360), atan2(dy, dx)
    V: float


@dataclass(frozen=True)
class GestureEvent:
    label: str
    motion: MotionVector
    t_start: float
    t_end: float

    def to_record(self) -> dict:
        m = self.motion
        return {"t_start": self.t_start, "t_end": self.t_end, "label": self.label,
                "D": m.D, "T": m.T, "alpha": m.alpha, "V": m.V}

    @classmethod
    def from_record(cls, r: dict) -> "GestureEvent":
        try:
            return cls(r["label"], MotionVector(float(r["D"]), float(r["T"]), float(r["alpha"]),
                                                float(r["V"])),
                       float(r["t_start"]), float(r["t_end"]))
        except (KeyError, TypeError, ValueError) as exc:
            raise InputError(f"malformed gesture record {r!r}") from exc


@dataclass
class GestureThresholds:
    v_idle: float = 20.0  # px/s
    v_fast: float = 300.0  # px/s
    window_s: float = 0.4
    flex_depth: float = 0.2
    d_click: float = 15.0  # px
    sector_deg: float = 45.0


def compute_motion(window: Sequence[TrajectorySample]) -> MotionVector:
    """D, T, alpha and V = D / T between the first and last samples."""
    if len(window) < 2:
        raise InputError("motion window needs at least 2 samples")
    a, b = window[0], window[-1]
    dx = b.center[0] - a.center[0]
    dy = b.center[1] - a.center[1]
    T = b.t - a.t
    if T <= 0:
        raise InputError("samples must be strictly increasing in time")
    D = math.hypot(dx, dy)
    alpha = math.degrees(math.atan2(dy, dx)) % 360.0 if D > 0 else 0.0
    return MotionVector(D, T, alpha, D / T)


def angle_near(alpha: float, target: float, tol: float) -> bool:
    return abs((alpha - target + 180.0) % 360.0 - 180.0) <= tol


def _oscillation(scales: Sequence[float]) -> float:
    if len(scales) < 3:
        return 0.0
    inner = scales[1:-1]
    lo_end, hi_end = min(scales[0], scales[-1]), max(scales[0], scales[-1])
    trough = (lo_end - min(inner)) / lo_end if lo_end > 0 else 0.0
    peak = (max(inner) - hi_end) / max(inner) if max(inner) > 0 else 0.0
    return max(trough, peak)


class GestureClassifier:
    """Streaming classifier over a sliding time window.

    Windows that produce the same labels back to back are merged into one
    event spanning both; a window that fires restarts the next window at its
    last sample, so events never overlap.
    """

    def __init__(self, mode: str = "hand", thresholds: Optional[GestureThresholds] = None):
        if mode not in ("hand", "foot"):
            raise InputError(f"unknown mode {mode!r}")
        self.mode = mode
        self.th = thresholds or GestureThresholds()
        self._buf: list[TrajectorySample] = []
        self._pending: Optional[tuple[tuple[str, ...], TrajectorySample, TrajectorySample]] = None

    def window_labels(self, window: Sequence[TrajectorySample]) -> tuple[str, ...]:
        th = self.th
        mv = compute_motion(window)
        if self.mode == "hand":
            if mv.D < th.d_click and _oscillation([s.scale for s in window]) >= th.flex_depth - 1e-9:
                return ("FingerFlexionExtension",)
        if mv.V < th.v_idle:
            return ()
        fast = mv.V >= th.v_fast
        if self.mode == "hand":
            if angle_near(mv.alpha, 0.0, th.sector_deg):
                side = "SwingFingerRight"
            elif angle_near(mv.alpha, 180.0, th.sector_deg):
                side = "SwingFingerLeft"
            else:
                return ()
            return side, ("SwingFingerFast" if fast else "SwingFingerSlow")
        if fast and angle_near(mv.alpha, 90.0, th.sector_deg):
            return ("KickBall",)
        return ("MoveFootFast" if fast else "MoveFootSlow",)

    def _emit_pending(self) -> list[GestureEvent]:
        if self._pending is None:
            return []
        labels, a, b = self._pending
        self._pending = None
        mv = compute_motion([a, b])
        return [GestureEvent(lb, mv, a.t, b.t) for lb in labels]

    def _fire(self, labels: tuple[str, ...]) -> list[GestureEvent]:
        start, end = self._buf[0], self._buf[-1]
        out: list[GestureEvent] = []
        if self._pending and self._pending[0] == labels and self._pending[2] is start:
            self._pending = (labels, self._pending[1], end)
        else:
            out += self._emit_pending()
            self._pending = (labels, start, end)
        self._buf = [end]
        return out

    def push(self, sample: TrajectorySample) -> list[GestureEvent]:
        if self._buf and sample.t <= self._buf[-1].t:
            raise InputError("samples must be strictly increasing in time")
        self._buf.append(sample)
        if self._buf[-1].t - self._buf[0].t < self.th.window_s - 1e-9:
            return []
        labels = self.window_labels(self._buf)
        if labels:
            return self._fire(labels)
        self._buf.pop(0)
        return self._emit_pending()

    def flush(self) -> list[GestureEvent]:
        """End of stream: a trailing window of at least half the length is still classified."""
        out: list[GestureEvent] = []
        buf = self._buf
        if len(buf) >= 2 and buf[-1].t - buf[0].t >= self.th.window_s / 2 - 1e-9:
            labels = self.window_labels(buf)
            if labels:
                out += self._fire(labels)
        out += self._emit_pending()
        self._buf = []
        return out


def classify(trajectory: Iterable[TrajectorySample], mode: str = "hand",
             thresholds: Optional[GestureThresholds] = None) -> list[GestureEvent]:
    clf = GestureClassifier(mode, thresholds)
    events: list[GestureEvent] = []
    for s in trajectory:
        events += clf.push(s)
    return events + clf.flush()


def trajectory_from_track(records: Iterable[dict]) -> list[TrajectorySample]:
    """Full-resolution samples from track records, skipping lost frames."""
    out = []
    for r in records:
        if r.get("status") != "tracking":
            continue
        ratio = float(r.get("ratio", 1.0))
        cx = (r["x_min"] + r["x_max"]) / 2.0 / ratio
        cy = (r["y_min"] + r["y_max"]) / 2.0 / ratio
        out.append(TrajectorySample((cx, cy), float(r["scale"]), r["timestamp_ms"] / 1000.0))
    return out
