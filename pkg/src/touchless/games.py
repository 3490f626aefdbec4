"""Headless state machines for the Bouncing Ball, Football and Foot-Play Piano games.

States are frozen dataclasses; every step function returns a new state plus
the game events it emitted. Time only advances through the caller's ``dt``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

from .errors import InputError
from .gestures import GestureEvent

Rect = tuple[float, float, float, float]  # x0, y0, x1, y1 in screen units

SLOW_LABELS = ("SwingFingerSlow", "MoveFootSlow")
FAST_LABELS = ("SwingFingerFast", "MoveFootFast", "KickBall")
MOTION_LABELS = ("SwingFingerLeft", "SwingFingerRight", "FingerFlexionExtension") + SLOW_LABELS + FAST_LABELS
_EPS = 1e-9


@dataclass(frozen=True)
class ScreenMap:
    cam_w: float = 640.0
    cam_h: float = 480.0
    scr_w: float = 1280.0
    scr_h: float = 720.0

    def __post_init__(self):
        if min(self.cam_w, self.cam_h, self.scr_w, self.scr_h) <= 0:
            raise InputError("screen map sizes must be positive")

    @property
    def kx(self) -> float:
        return self.scr_w / self.cam_w

    @property
    def ky(self) -> float:
        return self.scr_h / self.cam_h


def map_to_screen(center, m: ScreenMap) -> tuple[float, float]:
    """Linear camera-to-screen map; points outside the camera image are clamped."""
    x = min(max(float(center[0]), 0.0), m.cam_w)
    y = min(max(float(center[1]), 0.0), m.cam_h)
    return x * m.kx, y * m.ky


def _inside(p, r: Rect) -> bool:
    return r[0] <= p[0] < r[2] and r[1] <= p[1] < r[3]


def _overlap(a: Rect, b: Rect) -> bool:
    return min(a[2], b[2]) > max(a[0], b[0]) and min(a[3], b[3]) > max(a[1], b[1])


# -- ball games ----------------------------------------------------------------

@dataclass(frozen=True)
class BallRules:
    screen: ScreenMap = ScreenMap()
    v_max: float = 600.0  # camera px/s giving a full speed indicator
    grab_radius: float = 40.0  # cursor-ball distance counted as contact


@dataclass(frozen=True)
class BallGameState:
    court: Rect
    goal: Rect
    ball_pos: tuple[float, float]
    ball_vel: tuple[float, float] = (0.0, 0.0)
    held: bool = False
    cursor: tuple[float, float] = (0.0, 0.0)
    score: int = 0
    speed_index: float = 0.0
    camera_view: bool = True  # the "smile face" toggle; render-only

    def __post_init__(self):
        _goal_side(self.court, self.goal)

    def to_record(self) -> dict:
        r = lambda v: [round(v[0], 4), round(v[1], 4)]
        return {"ball_pos": r(self.ball_pos), "ball_vel": r(self.ball_vel), "held": self.held,
                "cursor": r(self.cursor), "score": self.score,
                "speed_index": round(self.speed_index, 4)}


def _goal_side(court: Rect, goal: Rect) -> str:
    cx0, cy0, cx1, cy1 = court
    gx0, gy0, gx1, gy1 = goal
    if not (cx0 < cx1 and cy0 < cy1 and gx0 < gx1 and gy0 < gy1):
        raise InputError("court and goal must be non-empty rectangles")
    if abs(gx0 - cx1) < _EPS and gy0 >= cy0 and gy1 <= cy1:
        return "right"
    if abs(gx1 - cx0) < _EPS and gy0 >= cy0 and gy1 <= cy1:
        return "left"
    if abs(gy1 - cy0) < _EPS and gx0 >= cx0 and gx1 <= cx1:
        return "top"
    if abs(gy0 - cy1) < _EPS and gx0 >= cx0 and gx1 <= cx1:
        return "bottom"
    raise InputError("goal must sit outside the court, flush against one edge")


def new_ball_game(court: Rect = (0.0, 0.0, 1280.0, 720.0),
                  goal: Rect = (1280.0, 260.0, 1330.0, 460.0),
                  ball_vel=(0.0, 0.0)) -> BallGameState:
    c = ((court[0] + court[2]) / 2.0, (court[1] + court[3]) / 2.0)
    return BallGameState(tuple(court), tuple(goal), c, tuple(ball_vel), cursor=c)


def _court_center(s: BallGameState):
    return (s.court[0] + s.court[2]) / 2.0, (s.court[1] + s.court[3]) / 2.0


def with_cursor(state: BallGameState, cursor) -> BallGameState:
    x0, y0, x1, y1 = state.court
    return replace(state, cursor=(min(max(float(cursor[0]), x0), x1),
                                  min(max(float(cursor[1]), y0), y1)))


def apply_ball_event(state: BallGameState, event: Optional[GestureEvent],
                     rules: BallRules = BallRules()) -> tuple[BallGameState, list[dict]]:
    """Resolve one gesture against the ball: grab, dribble or throw."""
    if event is None:
        return state, []
    out: list[dict] = []
    label = event.label
    if not state.held:
        near = math.dist(state.cursor, state.ball_pos) <= rules.grab_radius
        if near and (label == "CollideBall" or label in MOTION_LABELS):
            state = replace(state, held=True, ball_vel=(0.0, 0.0), ball_pos=state.cursor)
            out.append({"type": "CollideBall"})
            if label != "KickBall":
                return state, out
            # a kick on a loose ball releases it in the same step
    if state.held and label in SLOW_LABELS:
        out.append({"type": "Dribble"})
    elif state.held and label in FAST_LABELS:
        m = event.motion
        a = math.radians(m.alpha)
        vel = (m.V * math.cos(a) * rules.screen.kx, m.V * math.sin(a) * rules.screen.ky)
        state = replace(state, held=False, ball_vel=vel, speed_index=min(1.0, m.V / rules.v_max))
        out.append({"type": "Throw", "V": m.V, "alpha": m.alpha})
    return state, out


def _reflect(p: float, v: float, lo: float, hi: float) -> tuple[float, float]:
    """Fold a position back into [lo, hi]; each bounce flips the velocity sign."""
    while p > hi or p < lo:
        p = 2 * hi - p if p > hi else 2 * lo - p
        v = -v
    return p, v


def advance_ball(state: BallGameState, cursor, dt: float,
                 rules: BallRules = BallRules()) -> tuple[BallGameState, list[dict]]:
    """Move the cursor (clamped to the court) and integrate the ball over ``dt``."""
    if dt <= 0:
        raise InputError("dt must be positive")
    state = with_cursor(state, cursor)
    if state.held:
        return replace(state, ball_pos=state.cursor), []
    x0, y0, x1, y1 = state.court
    (px, py), (vx, vy) = state.ball_pos, state.ball_vel
    nx, ny = px + vx * dt, py + vy * dt
    side = _goal_side(state.court, state.goal)
    gx0, gy0, gx1, gy1 = state.goal
    scored = False
    if side in ("right", "left") and vx != 0:
        wall = x1 if side == "right" else x0
        crossing = (nx > wall) if side == "right" else (nx < wall)
        if crossing:
            yc = py + vy * (wall - px) / vx
            scored = gy0 <= yc <= gy1
    elif side in ("top", "bottom") and vy != 0:
        wall = y0 if side == "top" else y1
        crossing = (ny < wall) if side == "top" else (ny > wall)
        if crossing:
            xc = px + vx * (wall - py) / vy
            scored = gx0 <= xc <= gx1
    if scored:
        return replace(state, score=state.score + 1, ball_pos=_court_center(state),
                       ball_vel=(0.0, 0.0)), [{"type": "Goal", "score": state.score + 1}]
    nx, vx = _reflect(nx, vx, x0, x1)
    ny, vy = _reflect(ny, vy, y0, y1)
    return replace(state, ball_pos=(nx, ny), ball_vel=(vx, vy)), []


def ball_game_step(state: BallGameState, event: Optional[GestureEvent], cursor, dt: float,
                   rules: BallRules = BallRules()) -> tuple[BallGameState, list[dict]]:
    """One fixed step of the Bouncing Ball / Football machine (shared rules)."""
    s, ev1 = apply_ball_event(with_cursor(state, cursor), event, rules)
    s, ev2 = advance_ball(s, cursor, dt, rules)
    return s, ev1 + ev2


def ball_contained(state: BallGameState) -> bool:
    x0, y0, x1, y1 = state.court
    p = state.ball_pos
    in_court = x0 <= p[0] <= x1 and y0 <= p[1] <= y1
    g = state.goal
    return in_court or (g[0] <= p[0] <= g[2] and g[1] <= p[1] <= g[3])


# -- piano ---------------------------------------------------------------------

@dataclass(frozen=True)
class PianoKey:
    region: Rect
    code: str
    pressed: bool = False
    hold_s: float = 0.0


@dataclass(frozen=True)
class PianoState:
    keys: tuple[PianoKey, ...]
    mora_s: float = 0.6

    def __post_init__(self):
        if self.mora_s <= 0:
            raise InputError("mora_s must be positive")
        for i, a in enumerate(self.keys):
            for b in self.keys[i + 1:]:
                if _overlap(a.region, b.region):
                    raise InputError(f"piano keys {a.code} and {b.code} overlap")

    def progress(self, key: PianoKey) -> float:
        """Hold time in moras (1.0 = full circle), at reporting precision."""
        return round(key.hold_s / self.mora_s, 3)

    def to_record(self) -> dict:
        return {"keys": [{"code": k.code, "pressed": k.pressed, "hold_s": round(k.hold_s, 6),
                          "progress": self.progress(k)} for k in self.keys]}


def new_piano(keys: Sequence[tuple[Rect, str]], mora_s: float = 0.6) -> PianoState:
    return PianoState(tuple(PianoKey(tuple(r), str(c)) for r, c in keys), mora_s)


def default_piano_keys(screen: ScreenMap = ScreenMap(), n: int = 7) -> list[tuple[Rect, str]]:
    codes = ["C4", "D4", "E4", "F4", "G4", "A4", "B4", "C5"]
    w = screen.scr_w / n
    top = screen.scr_h * 0.7
    return [((i * w, top, (i + 1) * w, screen.scr_h), codes[i % len(codes)]) for i in range(n)]


def piano_step(state: PianoState, cursor, press_active: bool,
               dt: float) -> tuple[PianoState, list[dict]]:
    """Press the key under the cursor while ``press_active``; release reports progress."""
    if dt <= 0:
        raise InputError("dt must be positive")
    events: list[dict] = []
    keys = []
    for k in state.keys:
        on = press_active and _inside(cursor, k.region)
        if k.pressed and not on:
            events.append({"type": "ReleaseKey", "code": k.code, "progress": state.progress(k)})
            k = replace(k, pressed=False)
        elif on and not k.pressed:
            events.append({"type": "PressKey", "code": k.code})
            k = replace(k, pressed=True, hold_s=dt)
        elif on:
            k = replace(k, hold_s=k.hold_s + dt)
        keys.append(k)
    return replace(state, keys=tuple(keys)), events


class DwellPress:
    """Derives ``press_active`` from the cursor resting on one key for ``dwell_s``."""

    def __init__(self, dwell_s: float = 0.1):
        self.dwell_s = dwell_s
        self._key: Optional[str] = None
        self._dwelled = 0.0

    def update(self, state: PianoState, cursor, dt: float) -> bool:
        key = next((k.code for k in state.keys if _inside(cursor, k.region)), None)
        if key != self._key:
            self._key, self._dwelled = key, 0.0
        active = key is not None and self._dwelled >= self.dwell_s - 1e-9
        if key is not None:
            self._dwelled += dt
        return active


# -- replay --------------------------------------------------------------------

@dataclass
class GameConfig:
    dt: float = 1.0 / 30.0
    mora_s: float = 0.6
    v_max: float = 600.0
    dwell_s: float = 0.1
    grab_radius: float = 40.0


@dataclass
class Layout:
    screen: ScreenMap = ScreenMap()
    court: Rect = (0.0, 0.0, 1280.0, 720.0)
    goal: Rect = (1280.0, 260.0, 1330.0, 460.0)
    keys: list = field(default_factory=lambda: default_piano_keys())

    @classmethod
    def from_dict(cls, d: dict) -> "Layout":
        try:
            cam = d.get("camera", [640, 480])
            scr = d.get("screen", [1280, 720])
            screen = ScreenMap(float(cam[0]), float(cam[1]), float(scr[0]), float(scr[1]))
            court = tuple(float(v) for v in d.get("court", [0, 0, screen.scr_w, screen.scr_h]))
            goal = tuple(float(v) for v in d.get(
                "goal", [court[2], court[1] + 0.36 * (court[3] - court[1]), court[2] + 50,
                         court[1] + 0.64 * (court[3] - court[1])]))
            if "keys" in d:
                keys = [(tuple(float(v) for v in k["rect"]), str(k["code"])) for k in d["keys"]]
            else:
                keys = default_piano_keys(screen)
        except (KeyError, TypeError, ValueError, IndexError) as exc:
            raise InputError(f"malformed layout: {exc}") from exc
        return cls(screen, court, goal, keys)


GAMES = ("bouncing_ball", "football", "foot_piano")


def replay(game: str, cursor_samples: Sequence[tuple[float, float, float]],
           events: Sequence[GestureEvent], layout: Layout = Layout(),
           config: GameConfig = GameConfig(), steps: Optional[int] = None) -> list[dict]:
    """Run a game at fixed ``dt`` over time-stamped inputs; returns per-step trace records.

    ``cursor_samples`` are ``(t, x, y)`` in camera px and are held until the
    next sample; gesture events fire on the first step at or after ``t_end``.
    """
    if game not in GAMES:
        raise InputError(f"unknown game {game!r}")
    dt = config.dt
    cursor_samples = sorted(cursor_samples)
    events = sorted(events, key=lambda e: e.t_end)
    t_last = max([c[0] for c in cursor_samples] + [e.t_end for e in events] + [0.0])
    n = steps if steps is not None else int(math.ceil(t_last / dt - 1e-9)) + 1
    rules = BallRules(layout.screen, config.v_max, config.grab_radius)
    if game == "foot_piano":
        state = new_piano(layout.keys, config.mora_s)
        dwell = DwellPress(config.dwell_s)
    else:
        state = new_ball_game(layout.court, layout.goal)
    cursor = map_to_screen((layout.screen.cam_w / 2, layout.screen.cam_h / 2), layout.screen)
    ci = ei = 0
    trace = []
    for k in range(n):
        t = k * dt
        while ci < len(cursor_samples) and cursor_samples[ci][0] <= t + 1e-9:
            cursor = map_to_screen(cursor_samples[ci][1:], layout.screen)
            ci += 1
        due = []
        while ei < len(events) and events[ei].t_end <= t + 1e-9:
            due.append(events[ei])
            ei += 1
        emitted: list[dict] = []
        if game == "foot_piano":
            active = dwell.update(state, cursor, dt)
            state, emitted = piano_step(state, cursor, active, dt)
        else:
            state = with_cursor(state, cursor)
            for ev in due:
                state, ev_out = apply_ball_event(state, ev, rules)
                emitted += ev_out
            state, ev_out = advance_ball(state, cursor, dt, rules)
            emitted += ev_out
        trace.append({"step": k, "t": round(t, 6), "state": state.to_record(), "events": emitted})
    return trace
