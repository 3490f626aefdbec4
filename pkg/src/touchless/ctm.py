"""Deformable contour template matching by Viterbi dynamic programming.

A contour template is cut into short segments. Every segment may be placed at
any shift ``p = (ox, oy)`` of the shift domain, but consecutive segments must
sit within Chebyshev distance 1 of each other. The trellis has one column per
segment and one node per shift; the accumulated score is

    R(p, i) = max_{p' in sigma(p)} R(p', i - 1) + V(p, i)

where ``V(p, i)`` counts the edge pixels covered by segment ``i`` at ``p`` and
``sigma(p)`` is the 3x3 neighbourhood of ``p`` (``p`` included) inside the
domain. The best path is recovered by backtracking from the highest score in
the last column; equal scores favour the path with fewer shift changes.

Shift domains are boolean masks indexed ``omega[oy, ox]``; template points are
stored relative to their bounding-box top-left, so shift ``(ox, oy)`` puts the
template's top-left at pixel ``(ox, oy)``.
"""
from __future__ import annotations

from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .errors import InputError
from .frameio import EdgeImage
from .skin import SkinMask, dilate

KINDS = ("hand", "foot")
DEFAULT_SEG_LEN = 3
_NEG = np.int64(-(1 << 60))
# Trellis values pack (score, -shift changes) into one integer so that among
# equal scores the most rigid path wins; remaining ties go to the first offset
# in lexicographic (dx, dy) order, i.e. the smallest predecessor shift.
_SCALE = np.int64(1 << 20)
_OFFSETS = tuple((dx, dy) for dx in (-1, 0, 1) for dy in (-1, 0, 1))
_STAY = _OFFSETS.index((0, 0))


@dataclass(frozen=True, eq=False)
class ContourTemplate:
    points: np.ndarray  # (N, 2) int, columns x, y
    seg_len: int = DEFAULT_SEG_LEN
    kind: str = "hand"
    name: str = ""

    @property
    def segments(self) -> list[np.ndarray]:
        n = len(self.points)
        return [self.points[i:i + self.seg_len] for i in range(0, n, self.seg_len)]

    @property
    def size(self) -> tuple[int, int]:
        """(width, height) of the template bounding box."""
        return int(self.points[:, 0].max()) + 1, int(self.points[:, 1].max()) + 1

    def __len__(self):
        return len(self.points)


@dataclass
class MatchResult:
    bbox: tuple[int, int, int, int]  # inclusive pixel bounds x_min, y_min, x_max, y_max
    score: int
    shifts: list[tuple[int, int]]

    @property
    def center(self) -> tuple[float, float]:
        x0, y0, x1, y1 = self.bbox
        return (x0 + x1 + 1) / 2.0, (y0 + y1 + 1) / 2.0


@dataclass
class Detection:
    match: MatchResult
    template_id: int
    normalized_score: float


def segment_template(points, seg_len: int = DEFAULT_SEG_LEN, kind: str = "hand",
                     name: str = "") -> ContourTemplate:
    """Build a template from contour points given in contour order.

    Points are translated so the bounding box starts at (0, 0). The last
    segment keeps any remainder shorter than ``seg_len``.
    """
    pts = np.asarray(points, dtype=np.int64).reshape(-1, 2)
    if len(pts) == 0:
        raise InputError("template has no points")
    if seg_len < 1:
        raise InputError("seg_len must be >= 1")
    if kind not in KINDS:
        raise InputError(f"unknown template kind {kind!r}")
    pts = pts - pts.min(axis=0)
    return ContourTemplate(pts, int(seg_len), kind, name)


def trace_polyline(vertices, closed: bool = True) -> np.ndarray:
    """Ordered 8-connected pixel chain through integer vertices (Bresenham)."""
    v = [tuple(int(round(c)) for c in p) for p in vertices]
    if closed:
        v = v + [v[0]]
    out: list[tuple[int, int]] = []
    for (x0, y0), (x1, y1) in zip(v, v[1:]):
        dx, dy = abs(x1 - x0), -abs(y1 - y0)
        sx, sy = (1 if x1 > x0 else -1), (1 if y1 > y0 else -1)
        err = dx + dy
        x, y = x0, y0
        while True:
            if not out or out[-1] != (x, y):
                out.append((x, y))
            if x == x1 and y == y1:
                break
            e2 = 2 * err
            if e2 >= dy:
                err += dy
                x += sx
            if e2 <= dx:
                err += dx
                y += sy
    if closed and len(out) > 1 and out[-1] == out[0]:
        out.pop()
    return np.array(out, dtype=np.int64)


# -- shift domain --------------------------------------------------------------

def default_omega(template: ContourTemplate, shape: tuple[int, int]) -> np.ndarray:
    """All shifts that keep the whole template inside an image of ``shape`` (H, W)."""
    h, w = shape
    tw, th = template.size
    omega = np.zeros((h, w), dtype=bool)
    if tw <= w and th <= h:
        omega[: h - th + 1, : w - tw + 1] = True
    return omega


def neighbor_shifts(p: tuple[int, int], omega: np.ndarray) -> set[tuple[int, int]]:
    """sigma(p): shifts of ``omega`` within Chebyshev distance 1 of ``p``."""
    ox, oy = p
    h, w = omega.shape
    out = set()
    for dx, dy in _OFFSETS:
        x, y = ox + dx, oy + dy
        if 0 <= x < w and 0 <= y < h and omega[y, x]:
            out.add((x, y))
    return out


# -- rewards -------------------------------------------------------------------

def local_reward(segment: np.ndarray, shift: tuple[int, int], edges: EdgeImage) -> int:
    """Number of segment points that land on edge pixels at ``shift``."""
    ox, oy = shift
    xs = segment[:, 0] + ox
    ys = segment[:, 1] + oy
    inside = (xs >= 0) & (xs < edges.width) & (ys >= 0) & (ys < edges.height)
    assert inside.all(), "segment placed outside the image"
    return int(edges.bits[ys[inside], xs[inside]].sum())


def coverage_map(points: np.ndarray, bits: np.ndarray) -> np.ndarray:
    """``out[oy, ox]`` = number of ``points`` on set pixels when shifted by (ox, oy).

    Pixels beyond the image count as unset.
    """
    h, w = bits.shape
    xmax = int(points[:, 0].max())
    ymax = int(points[:, 1].max())
    padded = np.zeros((h + ymax, w + xmax), dtype=np.int64)
    padded[:h, :w] = bits
    out = np.zeros((h, w), dtype=np.int64)
    for x, y in points:
        out += padded[y:y + h, x:x + w]
    return out


def _neighbour_max(r: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    h, w = r.shape
    p = np.full((h + 2, w + 2), _NEG, dtype=np.int64)
    p[1:-1, 1:-1] = r
    stack = np.stack([p[1 + dy:1 + dy + h, 1 + dx:1 + dx + w] for dx, dy in _OFFSETS])
    # moving between consecutive segments costs one unit of the tie-break term
    stack -= 1
    stack[_STAY] += 1
    arg = stack.argmax(axis=0)
    return np.take_along_axis(stack, arg[None], axis=0)[0], arg.astype(np.int8)


def viterbi_match(template: ContourTemplate, edges: EdgeImage,
                  omega: Optional[np.ndarray] = None) -> MatchResult:
    """Globally optimal segment placement for ``template`` on ``edges``.

    Among paths with the maximal score the one with the fewest shift changes
    between consecutive segments is preferred; remaining ties go to the
    lexicographically smallest ``(ox, oy)``, both for the final node and at
    every backtracking step.
    """
    if omega is None:
        omega = default_omega(template, edges.bits.shape)
    omega = np.asarray(omega, dtype=bool)
    if omega.shape != edges.bits.shape:
        raise InputError("shift domain shape differs from the edge image")
    if not omega.any():
        raise InputError("empty shift domain")
    segs = template.segments
    score = np.where(omega, coverage_map(segs[0], edges.bits) * _SCALE, _NEG)
    back = []
    for seg in segs[1:]:
        best, arg = _neighbour_max(score)
        score = np.where(omega, best + coverage_map(seg, edges.bits) * _SCALE, _NEG)
        back.append(arg)
    # transpose so the flat argmax scans ox first, then oy
    ox, oy = np.unravel_index(int(score.T.argmax()), score.T.shape)
    # packed value is score * _SCALE - changes with changes < _SCALE
    total = int(-(-score[oy, ox] // _SCALE))
    path = [(int(ox), int(oy))]
    for arg in reversed(back):
        dx, dy = _OFFSETS[int(arg[oy, ox])]
        ox, oy = ox + dx, oy + dy
        path.append((int(ox), int(oy)))
    path.reverse()
    placed = np.concatenate([seg + np.array(s) for seg, s in zip(segs, path)])
    bbox = (int(placed[:, 0].min()), int(placed[:, 1].min()),
            int(placed[:, 0].max()), int(placed[:, 1].max()))
    return MatchResult(bbox, total, path)


def masked_omega(template: ContourTemplate, mask: SkinMask, min_fraction: float = 0.5,
                 dilation: int = 4) -> np.ndarray:
    """Default domain restricted to shifts with enough template points on skin support."""
    support = dilate(mask.bits, dilation)
    inside = coverage_map(template.points, support)
    need = min_fraction * len(template.points)
    return default_omega(template, mask.bits.shape) & (inside >= need)


def cb_template_matching(edges: EdgeImage, mask: Optional[SkinMask],
                         templates: Sequence[ContourTemplate], min_fraction: float = 0.5,
                         dilation: int = 4) -> Optional[Detection]:
    """Best match over ``templates``, ranked by score / template point count.

    With a skin mask the shift domain is limited to shifts whose template
    points fall at least ``min_fraction`` inside the dilated skin support. The
    default dilation leaves room for the segments of a template shrunk by a
    third to drift off the rigid outline.
    Returns None when no template has a feasible shift.
    """
    if not templates:
        raise InputError("no templates given")
    best = None
    for tid, tpl in enumerate(templates):
        if mask is None:
            omega = default_omega(tpl, edges.bits.shape)
        else:
            omega = masked_omega(tpl, mask, min_fraction, dilation)
        if not omega.any():
            continue
        m = viterbi_match(tpl, edges, omega)
        norm = m.score / len(tpl)
        if best is None or norm > best.normalized_score:
            best = Detection(m, tid, norm)
    return best


# -- template files ------------------------------------------------------------

def parse_template(text: str, name: str = "") -> ContourTemplate:
    lines = [ln.split("#", 1)[0].strip() for ln in text.splitlines()]
    lines = [ln for ln in lines if ln]
    if not lines:
        raise InputError(f"template {name or '<text>'} is empty")
    head = lines[0].split()
    try:
        seg_len, kind = int(head[0]), head[1]
        pts = [tuple(int(v) for v in ln.split()) for ln in lines[1:]]
    except (IndexError, ValueError) as exc:
        raise InputError(f"malformed template {name or '<text>'}: {exc}") from exc
    if any(len(p) != 2 for p in pts):
        raise InputError(f"malformed template {name or '<text>'}: expected 'x y' per line")
    return segment_template(pts, seg_len, kind, name)


def load_template(path) -> ContourTemplate:
    path = Path(path)
    if not path.is_file():
        raise InputError(f"template not found: {path}")
    return parse_template(path.read_text(), path.stem)


def format_template(template: ContourTemplate) -> str:
    rows = [f"{template.seg_len} {template.kind}"]
    rows += [f"{x} {y}" for x, y in template.points]
    return "\n".join(rows) + "\n"


def bundled_template(kind: str) -> ContourTemplate:
    """The shipped two-finger hand or shoe contour, defined at CTM resolution."""
    if kind not in KINDS:
        raise InputError(f"unknown template kind {kind!r}")
    text = resources.files("touchless.templates").joinpath(f"{kind}.txt").read_text()
    return parse_template(text, kind)
