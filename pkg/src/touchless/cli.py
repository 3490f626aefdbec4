"""Command-line front end: track, eval, gestures, play, synth.

Exit codes: 0 success, 1 input error, 2 internal invariant failure.
"""
from __future__ import annotations

import argparse
import contextlib
import json
import logging
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from .config import Settings, load_settings
from .ctm import bundled_template, load_template
from .errors import InputError, InvariantError
from .evaluation import evaluate
from .frameio import load_sequence
from .games import GAMES, Layout, replay
from .gestures import GestureEvent, classify, trajectory_from_track
from .pipeline import GesturePipeline
from .records import dumps, read_jsonl, write_jsonl
from .synth import Scenario, generate, write_dataset

log = logging.getLogger("touchless")


@contextlib.contextmanager
def _output(path):
    if path is None or path == "-":
        yield sys.stdout
    else:
        with open(path, "w") as fh:
            yield fh


def _settings(args, kind="hand") -> Settings:
    return load_settings(args.config, args.set, kind)


def track_sequence(seq_path, templates, settings: Settings, full_res: bool = False):
    """Run the pipeline over one sequence; returns (records, frames per second)."""
    pipe = GesturePipeline(templates, settings.pipeline)
    start = time.perf_counter()
    records = [pipe.process_frame(f).to_record(full_res)
               for f in load_sequence(seq_path, settings.frame_interval_ms)]
    elapsed = time.perf_counter() - start
    return records, len(records) / elapsed if elapsed > 0 else float("inf")


def _track_job(job):
    seq, templates, settings, full_res, out = job
    records, fps = track_sequence(seq, templates, settings, full_res)
    with _output(out) as fh:
        write_jsonl(records, fh)
    return str(seq), len(records), fps


def cmd_track(args) -> int:
    settings = _settings(args, args.mode)
    if args.template:
        templates = [load_template(p) for p in args.template]
    else:
        templates = [bundled_template(args.mode)]
    bad = [t.name for t in templates if t.kind != args.mode]
    if bad:
        raise InputError(f"templates {bad} are not {args.mode} templates")
    seqs = [Path(s) for s in args.sequence]
    if len(seqs) == 1:
        jobs = [(seqs[0], templates, settings, args.full_res, args.out)]
    else:
        if args.out in (None, "-"):
            raise InputError("several sequences need --out DIR")
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        jobs = [(s, templates, settings, args.full_res, str(out_dir / f"{s.name}.track.jsonl"))
                for s in seqs]
    if args.jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(args.jobs) as pool:
            results = list(pool.map(_track_job, jobs))
    else:
        results = [_track_job(j) for j in jobs]
    for seq, n, fps in results:
        print(f"{seq}: {n} frames, {fps:.1f} fps", file=sys.stderr)
    return 0


def cmd_eval(args) -> int:
    report = evaluate(read_jsonl(args.track), read_jsonl(args.truth), args.full_res, args.fps)
    print(dumps(report.to_record()))
    return 0


def cmd_gestures(args) -> int:
    settings = _settings(args, args.mode)
    samples = trajectory_from_track(read_jsonl(args.track))
    events = classify(samples, args.mode, settings.gesture)
    with _output(args.out) as fh:
        write_jsonl((e.to_record() for e in events), fh)
    return 0


def _play_inputs(records):
    cursors, events = [], []
    for r in records:
        if "label" in r:
            events.append(GestureEvent.from_record(r))
        elif {"t", "x", "y"} <= set(r):
            cursors.append((float(r["t"]), float(r["x"]), float(r["y"])))
        else:
            raise InputError(f"unrecognized play input record {r!r}")
    return cursors, events


def cmd_play(args) -> int:
    settings = _settings(args)
    cursors, events = _play_inputs(read_jsonl(args.events))
    if args.track:
        for s in trajectory_from_track(read_jsonl(args.track)):
            cursors.append((s.t, s.center[0], s.center[1]))
    layout = Layout()
    if args.layout:
        p = Path(args.layout)
        if not p.is_file():
            raise InputError(f"layout not found: {p}")
        try:
            layout = Layout.from_dict(json.loads(p.read_text()))
        except json.JSONDecodeError as exc:
            raise InputError(f"bad layout file: {exc}") from exc
    trace = replay(args.game, cursors, events, layout, settings.games, args.steps)
    with _output(args.out) as fh:
        write_jsonl(trace, fh)
    return 0


def cmd_synth(args) -> int:
    spec = {}
    if args.scenario:
        text = args.scenario
        if not text.lstrip().startswith("{"):
            p = Path(text)
            if not p.is_file():
                raise InputError(f"scenario not found: {p}")
            text = p.read_text()
        try:
            spec = json.loads(text)
        except json.JSONDecodeError as exc:
            raise InputError(f"bad scenario: {exc}") from exc
    for item in args.param or ():
        if "=" not in item:
            raise InputError(f"bad parameter {item!r}; expected key=value")
        k, v = item.split("=", 1)
        try:
            spec[k] = json.loads(v)
        except json.JSONDecodeError:
            spec[k] = v
    sc = Scenario.from_dict(spec)
    seq = generate(sc)
    write_dataset(seq, args.out, sc)
    print(f"wrote {len(seq.frames)} frames to {args.out}", file=sys.stderr)
    return 0


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="touchless", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, mode=True):
        p.add_argument("--config", help="key = value config file")
        p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                       help="override one config key (repeatable)")
        if mode:
            p.add_argument("--mode", choices=("hand", "foot"), default="hand")
        p.add_argument("-o", "--out", help="output file (default stdout)")

    p = sub.add_parser("track", help="track a frame sequence")
    p.add_argument("sequence", nargs="+", help="frame directory or list file")
    p.add_argument("--template", action="append", help="template file (repeatable)")
    p.add_argument("--full-res", action="store_true", help="report full-resolution coordinates")
    p.add_argument("--jobs", type=int, default=1, help="parallel workers across sequences")
    common(p)
    p.set_defaults(func=cmd_track)

    p = sub.add_parser("eval", help="score a track against ground truth")
    p.add_argument("track")
    p.add_argument("truth")
    p.add_argument("--full-res", action="store_true")
    p.add_argument("--fps", type=float, help="throughput to include in the report")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("gestures", help="classify gestures from a track")
    p.add_argument("track")
    common(p)
    p.set_defaults(func=cmd_gestures)

    p = sub.add_parser("play", help="replay a game over gesture events and cursor samples")
    p.add_argument("game", choices=GAMES)
    p.add_argument("events", help="JSONL of gesture events and/or {t, x, y} cursor samples")
    p.add_argument("--track", help="track file supplying cursor positions")
    p.add_argument("--layout", help="JSON layout (screen, camera, court, goal, keys)")
    p.add_argument("--steps", type=int, help="number of fixed steps to run")
    common(p, mode=False)
    p.set_defaults(func=cmd_play)

    p = sub.add_parser("synth", help="generate a synthetic sequence with ground truth")
    p.add_argument("out", help="output directory")
    p.add_argument("--scenario", help="scenario JSON file or inline JSON")
    p.add_argument("-p", "--param", action="append", metavar="KEY=VALUE",
                   help="scenario field override, value parsed as JSON")
    p.set_defaults(func=cmd_synth)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (InputError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (InvariantError, AssertionError) as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
