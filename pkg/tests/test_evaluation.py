import pytest
from hypothesis import given, settings, strategies as st

from touchless.errors import InputError
from touchless.evaluation import evaluate


def rec(i, x0, y0, x1, y1, status="tracking", ratio=1.0):
    return {"frame_index": i, "status": status, "x_min": x0, "y_min": y0, "x_max": x1,
            "y_max": y1, "ratio": ratio}


def truth(n):
    return [{"frame_index": i, "x_min": 10.0 + i, "y_min": 20.0, "x_max": 40.0 + i, "y_max": 60.0}
            for i in range(n)]


def test_identity():
    gt = truth(5)
    r = evaluate(gt, gt)
    assert (r.success_rate, r.mean_err, r.max_err, r.sd_err, r.lost) == (1.0, 0.0, 0.0, 0.0, 0)


def test_track_file_against_itself():
    tr = [rec(i, 1.0, 2.0, 3.5, 4.5, ratio=0.0625) for i in range(4)]
    r = evaluate(tr, tr)
    assert r.success_rate == 1.0 and r.max_err == 0.0


def test_constant_offset():
    gt = truth(6)
    tr = [rec(g["frame_index"], g["x_min"] + 2, g["y_min"], g["x_max"] + 2, g["y_max"]) for g in gt]
    r = evaluate(tr, gt)
    assert r.mean_err == pytest.approx(2.0) and r.sd_err == pytest.approx(0.0, abs=1e-12)


def test_half_lost():
    gt = truth(6)
    tr = [dict(rec(i, 0, 0, 0, 0, "lost")) if i % 2 else
          rec(i, g["x_min"], g["y_min"], g["x_max"], g["y_max"]) for i, g in enumerate(gt)]
    r = evaluate(tr, gt)
    assert r.success_rate <= 0.5 and r.lost == 3 and r.max_err == 0.0


def test_resolution_conversion():
    gt = truth(1)
    k = 0.125
    tr = [rec(0, gt[0]["x_min"] * k + 1, gt[0]["y_min"] * k, gt[0]["x_max"] * k + 1,
              gt[0]["y_max"] * k, ratio=k)]
    assert evaluate(tr, gt).mean_err == pytest.approx(1.0)
    assert evaluate(tr, gt, full_res=True).mean_err == pytest.approx(8.0)


def test_mismatch_errors():
    with pytest.raises(InputError, match="frame-count mismatch"):
        evaluate(truth(2), truth(3))
    with pytest.raises(InputError):
        evaluate([], [])


@settings(max_examples=50)
@given(st.lists(st.tuples(st.floats(-5, 5), st.floats(-5, 5), st.booleans()), min_size=1, max_size=12))
def test_report_invariants(moves):
    gt = truth(len(moves))
    tr = [rec(i, g["x_min"] + dx, g["y_min"] + dy, g["x_max"] + dx, g["y_max"] + dy,
              "lost" if lost else "tracking") for i, (g, (dx, dy, lost)) in enumerate(zip(gt, moves))]
    r = evaluate(tr, gt)
    assert 0 <= r.success_rate <= 1 and r.sd_err >= 0 and r.max_err >= r.mean_err - 1e-12
