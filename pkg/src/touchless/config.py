"""Flat ``key = value`` configuration with dotted keys and ``--set`` overrides."""
from __future__ import annotations

import ast
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Iterable, Optional

from .errors import InputError
from .frameio import DEFAULT_FRAME_INTERVAL_MS
from .games import GameConfig
from .gestures import GestureThresholds
from .pipeline import PipelineConfig
from .skin import SkinRange
from .tld import TLDConfig

_SECTIONS = {
    "skin": SkinRange,
    "tld": TLDConfig,
    "gesture": GestureThresholds,
    "games": GameConfig,
}
_TOP = {"edge_threshold", "frame_interval_ms"}
_EXTRA = {"skin.smoothing", "skin.gating", "ctm.min_score", "ctm.mask_fraction",
          "ctm.mask_dilation"}


def known_keys() -> set[str]:
    keys = set(_TOP) | set(_EXTRA)
    for sec, cls in _SECTIONS.items():
        keys |= {f"{sec}.{f.name}" for f in fields(cls)}
    return keys


def parse_value(text: str):
    t = text.strip()
    low = t.lower()
    if low in ("true", "yes", "on"):
        return True
    if low in ("false", "no", "off"):
        return False
    try:
        return ast.literal_eval(t)
    except (ValueError, SyntaxError):
        return t


def parse_config(text: str, source: str = "<config>") -> dict:
    out = {}
    for n, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InputError(f"{source}:{n}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key] = parse_value(value)
    return out


def parse_overrides(items: Iterable[str]) -> dict:
    out = {}
    for item in items or ():
        if "=" not in item:
            raise InputError(f"bad override {item!r}; expected key=value")
        k, v = item.split("=", 1)
        out[k.strip()] = parse_value(v)
    return out


@dataclass
class Settings:
    pipeline: PipelineConfig = field(default_factory=PipelineConfig)
    gesture: GestureThresholds = field(default_factory=GestureThresholds)
    games: GameConfig = field(default_factory=GameConfig)
    frame_interval_ms: int = DEFAULT_FRAME_INTERVAL_MS


def _section(cls, values: dict, prefix: str):
    kw = {}
    for f in fields(cls):
        key = f"{prefix}.{f.name}"
        if key in values:
            v = values[key]
            if isinstance(v, list):
                v = tuple(v)
            kw[f.name] = v
    try:
        return cls(**kw)
    except TypeError as exc:
        raise InputError(f"bad {prefix} settings: {exc}") from exc


def build_settings(values: dict, kind: str = "hand") -> Settings:
    unknown = set(values) - known_keys()
    if unknown:
        raise InputError(f"unknown config keys: {', '.join(sorted(unknown))}")
    pc = PipelineConfig(
        kind=kind,
        edge_threshold=values.get("edge_threshold", PipelineConfig.edge_threshold),
        skin_range=_section(SkinRange, values, "skin"),
        skin_smoothing=bool(values.get("skin.smoothing", True)),
        skin_gating=bool(values.get("skin.gating", True)),
        mask_fraction=values.get("ctm.mask_fraction", PipelineConfig.mask_fraction),
        mask_dilation=int(values.get("ctm.mask_dilation", PipelineConfig.mask_dilation)),
        min_score=values.get("ctm.min_score", PipelineConfig.min_score),
        tld=_section(TLDConfig, values, "tld"),
    )
    return Settings(pc, _section(GestureThresholds, values, "gesture"),
                    _section(GameConfig, values, "games"),
                    int(values.get("frame_interval_ms", DEFAULT_FRAME_INTERVAL_MS)))


def load_settings(path: Optional[str], overrides: Iterable[str] = (), kind: str = "hand") -> Settings:
    values = {}
    if path:
        p = Path(path)
        if not p.is_file():
            raise InputError(f"config not found: {p}")
        values.update(parse_config(p.read_text(), str(p)))
    values.update(parse_overrides(overrides))
    return build_settings(values, kind)
