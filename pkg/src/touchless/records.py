"""Line-delimited JSON records used by every CLI input and output."""
from __future__ import annotations

import json
from pathlib import Path
from typing import Iterable, TextIO

from .errors import InputError


def dumps(rec: dict) -> str:
    return json.dumps(rec, separators=(", ", ": "))


def write_jsonl(records: Iterable[dict], out: TextIO) -> None:
    for r in records:
        out.write(dumps(r) + "\n")


def read_jsonl(path) -> list[dict]:
    path = Path(path)
    if not path.exists():
        raise InputError(f"file not found: {path}")
    out = []
    for n, line in enumerate(path.read_text().splitlines(), 1):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as exc:
            raise InputError(f"{path}:{n}: bad record ({exc.msg})") from exc
        if not isinstance(rec, dict):
            raise InputError(f"{path}:{n}: record is not an object")
        out.append(rec)
    return out
