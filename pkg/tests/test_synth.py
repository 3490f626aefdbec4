import math

import numpy as np
import pytest

from touchless.ctm import viterbi_match
from touchless.errors import InputError
from touchless.frameio import detect_edges, downscale, load_sequence
from touchless.pipeline import CTM_RATIO
from touchless.records import read_jsonl
from touchless.synth import Scenario, contour_vertices, generate, pose, write_dataset


def test_static_frames_identical():
    seq = generate(Scenario(frames=10, width=320, height=320))
    assert all(np.array_equal(f.pixels, seq.frames[0].pixels) for f in seq.frames)
    assert len({(t.cx, t.cy) for t in seq.truth}) == 1
    assert [f.timestamp_ms for f in seq.frames[:3]] == [0, 33, 66]


def test_circular_centres_on_circle():
    sc = Scenario(trajectory="circular", radius=50, frames=24)
    for k in range(24):
        cx, cy, _, _ = pose(sc, k)
        assert math.hypot(cx - 320, cy - 240) == pytest.approx(50)
        assert math.degrees(math.atan2(cy - 240, cx - 320)) % 360 == pytest.approx((15 * k) % 360, abs=1e-9)
    truth = generate(sc).truth
    for k, t in enumerate(truth):
        cx, cy, _, _ = pose(sc, k)
        assert abs(t.cx - cx) <= 8 and abs(t.cy - cy) <= 8  # raster bbox of the outline


def _perimeter(v):
    return float(np.linalg.norm(np.diff(np.vstack([v, v[:1]]), axis=0), axis=1).sum())


@pytest.mark.parametrize("kind", ["hand", "foot"])
def test_deforming_length_within_third(kind):
    sc = Scenario(template=kind, trajectory="deforming", scale_amplitude=0.33, period=8, frames=8)
    seq = generate(sc)
    ratio = CTM_RATIO[kind]
    ref = _perimeter(contour_vertices(seq.template, 0, 0, 1, 1, ratio))
    for k in range(sc.frames):
        _, _, sx, sy = pose(sc, k)
        length = _perimeter(contour_vertices(seq.template, 0, 0, sx, sy, ratio))
        assert 0.67 <= length / ref <= 1.33
        # the rendered stroke extent follows the same transform
        t = seq.truth[k]
        tw, th = seq.template.size
        assert (t.x_max - t.x_min) == pytest.approx(tw / ratio * sx, abs=2 / ratio)
        assert (t.y_max - t.y_min) == pytest.approx(th / ratio * sy, abs=2 / ratio)
    with pytest.raises(InputError):
        Scenario(trajectory="deforming", scale_amplitude=0.4)


def test_seed_reproducible_and_sensitive():
    a = generate(Scenario(clutter=4, seed=3, frames=2))
    b = generate(Scenario(clutter=4, seed=3, frames=2))
    c = generate(Scenario(clutter=4, seed=4, frames=2))
    assert all(np.array_equal(x.pixels, y.pixels) for x, y in zip(a.frames, b.frames))
    assert a.truth == b.truth
    assert not np.array_equal(a.frames[0].pixels, c.frames[0].pixels)


def test_clutter_stays_off_target():
    seq = generate(Scenario(clutter=6, seed=1, frames=1))
    plain = generate(Scenario(clutter=0, seed=1, frames=1))
    diff = np.any(seq.frames[0].pixels != plain.frames[0].pixels, axis=2)
    assert diff.any()
    t = seq.truth[0]
    assert not diff[int(t.y_min):int(t.y_max), int(t.x_min):int(t.x_max)].any()


def test_trajectory_leaving_frame_errors():
    with pytest.raises(InputError, match="leaves the frame"):
        generate(Scenario(trajectory="linear", velocity=(20, 0), frames=40))
    with pytest.raises(InputError):
        Scenario(trajectory="spiral")
    with pytest.raises(InputError):
        Scenario.from_dict({"frames": 3, "colour": 1})


@pytest.mark.parametrize("kind", ["hand", "foot"])
def test_truth_consistent_with_matching(kind):
    seq = generate(Scenario(template=kind, frames=1, center=(301.3, 222.8)))
    ratio = CTM_RATIO[kind]
    edges = downscale(detect_edges(seq.frames[0]), ratio)
    m = viterbi_match(seq.template, edges)
    cx, cy = m.center
    t = seq.truth[0]
    assert abs(cx / ratio - t.cx) * ratio <= 1 and abs(cy / ratio - t.cy) * ratio <= 1


def test_linear_labels():
    seq = generate(Scenario(trajectory="linear", velocity=(-4, 0), frames=20))
    assert [lb["label"] for lb in seq.labels] == ["SwingFingerLeft", "SwingFingerSlow"]
    seq = generate(Scenario(template="foot", trajectory="linear", velocity=(0, 12), frames=10))
    assert [lb["label"] for lb in seq.labels] == ["KickBall"]


def test_write_dataset_roundtrip(tmp_path):
    sc = Scenario(frames=3, width=320, height=320)
    seq = generate(sc)
    out = write_dataset(seq, tmp_path / "d", sc)
    frames = list(load_sequence(out))
    assert all(np.array_equal(a.pixels, b.pixels) for a, b in zip(frames, seq.frames))
    truth = read_jsonl(out / "truth.jsonl")
    assert [r["frame_index"] for r in truth] == [0, 1, 2]
    assert (out / "labels.jsonl").read_text() == ""
    assert (out / "scenario.json").exists()
