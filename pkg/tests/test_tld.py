import cv2
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import iou as oracle_iou
from touchless.errors import InputError
from touchless.tld import (ROI, OnlineModel, TLDConfig, candidate_windows, detect, grid_patches,
                           init, integrate, iou, nms, normalize, pn_learn, sample_patches,
                           track_frame)


def textured(h=60, w=80, seed=0):
    """Smooth random texture, suitable for optical flow."""
    rng = np.random.default_rng(seed)
    noise = rng.random((h, w)) * 255
    return cv2.GaussianBlur(noise, (0, 0), 2.0)


def blob_image(h=60, w=80, centers=((40, 30),), size=14, seed=0):
    img = np.full((h, w), 90, np.uint8)
    rng = np.random.default_rng(seed)
    pattern = (rng.random((size, size)) * 160 + 60).astype(np.uint8)
    for cx, cy in centers:
        img[cy - size // 2:cy - size // 2 + size, cx - size // 2:cx - size // 2 + size] = pattern
    return img


def shifted(img, dx, dy, fill=128.0):
    m = np.float32([[1, 0, dx], [0, 1, dy]])
    return cv2.warpAffine(img, m, img.shape[::-1], flags=cv2.INTER_LINEAR,
                          borderMode=cv2.BORDER_CONSTANT, borderValue=fill)


def u8(a):
    return np.clip(np.round(a), 0, 255).astype(np.uint8)


def test_roi_validation():
    with pytest.raises(InputError):
        ROI((5, 5, 5, 9))
    r = ROI((2, 4, 10, 8))
    assert (r.width, r.height, r.center) == (8, 4, (6.0, 6.0))


def test_init_model_holds_roi0():
    img = blob_image()
    st_ = init(img, ROI((33, 23, 47, 37), confidence=0.3))
    assert len(st_.model.positives) == 1 and len(st_.model.negatives) == 0
    assert st_.last_roi.confidence == 1.0 and st_.status == "tracking"
    with pytest.raises(InputError):
        init(img, ROI((70, 50, 90, 70)))


def test_init_window_self_similarity_and_rank():
    img = blob_image()
    roi = ROI((33, 23, 47, 37))
    st_ = init(img, roi)
    assert st_.model.score_boxes(img, [roi.bbox])[0] == pytest.approx(1.0)
    dets = detect(img, st_.model, roi)
    assert dets and dets[0].bbox == pytest.approx(roi.bbox)
    assert dets[0].confidence == pytest.approx(1.0)


def test_track_static():
    img = u8(textured())
    roi = ROI((20, 15, 50, 45))
    out = track_frame(img, img, roi)
    assert out.center == pytest.approx(roi.center, abs=1e-3)
    assert out.scale == pytest.approx(1.0, abs=1e-6)


def test_track_translation_oracle():
    base = textured()
    prev, cur = u8(base), u8(shifted(base, 2, 1))
    roi = ROI((20, 15, 50, 45))
    out = track_frame(prev, cur, roi)
    dx, dy = out.center[0] - roi.center[0], out.center[1] - roi.center[1]
    assert abs(dx - 2) <= 0.5 and abs(dy - 1) <= 0.5


def test_track_scale_oracle():
    base = textured(80, 100, seed=4)
    roi = ROI((30, 20, 70, 60))
    cx, cy = roi.center
    m = cv2.getRotationMatrix2D((cx - 0.5, cy - 0.5), 0, 1.1)
    cur = cv2.warpAffine(base, m, (100, 80), flags=cv2.INTER_LINEAR,
                         borderMode=cv2.BORDER_CONSTANT, borderValue=128)
    out = track_frame(u8(base), u8(cur), roi)
    assert abs(out.scale - 1.1) <= 0.05
    assert out.center == pytest.approx(roi.center, abs=0.5)


def test_track_rejects_size_mismatch():
    a = u8(textured(seed=1))
    with pytest.raises(InputError):
        track_frame(a, a[:, :40], ROI((5, 5, 20, 20)))


def test_detect_uniform_frame_is_empty():
    rng = np.random.default_rng(7)
    model = OnlineModel(base_size=(14, 14))
    model.positives.append(normalize(rng.random((1, 225)))[0])
    assert detect(np.full((60, 80), 100, np.uint8), model) == []


def test_detect_twin_targets():
    img = blob_image(centers=((20, 30), (60, 30)))
    roi = ROI((13, 23, 27, 37))
    st_ = init(img, roi)
    dets = detect(img, st_.model, roi)
    centers = sorted(round(d.center[0]) for d in dets if d.confidence >= 0.95)
    assert centers == [20, 60]


def test_detect_requires_positive():
    with pytest.raises(InputError):
        detect(np.zeros((20, 20), np.uint8), OnlineModel())


def test_pn_learning_rules():
    img = blob_image(centers=((20, 30), (60, 30)), seed=3)
    img[:, 45:] = 255 - img[:, 45:]  # second copy inverted, so it is novel
    roi = ROI((13, 23, 27, 37))
    st_ = init(img, roi)
    pn_learn(st_, img, roi, [])
    assert len(st_.model.positives) == 1  # identical patch is not novel
    far = ROI((53, 23, 67, 37), 0.7)
    pn_learn(st_, img, roi, [far])
    assert len(st_.model.negatives) == 1
    near = ROI((14, 24, 28, 38), 0.7)
    pn_learn(st_, img, roi, [near])
    assert len(st_.model.negatives) == 1
    # overlapping but low-IoU windows stay out of the negatives
    grazing = ROI((25, 35, 39, 49), 0.7)
    assert iou(grazing.bbox, roi.bbox) < 0.2
    pn_learn(st_, img, roi, [grazing])
    assert len(st_.model.negatives) == 1


def test_positive_capacity_evicts_oldest():
    cfg = TLDConfig(pos_capacity=3)
    img = u8(textured(seed=9))
    st_ = init(img, ROI((5, 5, 20, 20)), cfg)
    first = st_.model.positives[0].copy()
    boxes = [(30, 5, 45, 20), (5, 30, 20, 45), (50, 30, 65, 45)]
    for b in boxes:
        pn_learn(st_, img, ROI(b), [], cfg)
    assert len(st_.model.positives) == 3
    assert not any(np.array_equal(first, p) for p in st_.model.positives)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2 ** 31 - 1))
def test_model_sizes_bounded(seed):
    rng = np.random.default_rng(seed)
    cfg = TLDConfig(pos_capacity=4, neg_capacity=5)
    img = u8(textured(seed=seed % 1000))
    st_ = init(img, ROI((5, 5, 20, 20)), cfg)
    for _ in range(12):
        x, y = rng.integers(0, 60), rng.integers(0, 40)
        dets = [ROI((float(a), float(b), a + 15.0, b + 15.0), 0.7)
                for a, b in rng.integers(0, 40, (3, 2))]
        pn_learn(st_, img, ROI((float(x), float(y), x + 15.0, y + 15.0)), dets, cfg)
        assert len(st_.model.positives) <= 4 and len(st_.model.negatives) <= 5


def test_integrate_examples():
    t = ROI((0, 0, 10, 10), 0.9)
    d = ROI((5, 5, 15, 15), 0.6)
    assert integrate(t, [d]) is t
    assert integrate(None, []) is None
    d8 = ROI((5, 5, 15, 15), 0.8)
    assert integrate(None, [d8]) is d8
    tie = ROI((5, 5, 15, 15), 0.9)
    assert integrate(t, [tie]) is t
    assert integrate(ROI((0, 0, 1, 1), 0.5), []) is None


@settings(max_examples=50)
@given(st.lists(st.floats(0, 1), min_size=0, max_size=6), st.one_of(st.none(), st.floats(0, 1)))
def test_integrate_is_argmax(confs, tconf):
    dets = [ROI((0, 0, 1, 1), c) for c in confs]
    track = None if tconf is None else ROI((0, 0, 1, 1), tconf)
    out = integrate(track, dets)
    allc = confs + ([] if tconf is None else [tconf])
    if out is not None:
        assert all(out.confidence >= c for c in allc)
    else:
        assert not allc or max(allc) <= TLDConfig.valid_threshold


@settings(max_examples=50)
@given(st.lists(st.floats(0, 50), min_size=8, max_size=8))
def test_iou_matches_oracle(v):
    a = (min(v[0], v[1]), min(v[2], v[3]), max(v[0], v[1]) + 1, max(v[2], v[3]) + 1)
    b = (min(v[4], v[5]), min(v[6], v[7]), max(v[4], v[5]) + 1, max(v[6], v[7]) + 1)
    assert iou(a, b) == pytest.approx(oracle_iou(a, b), abs=1e-12)


def test_nms_keeps_disjoint_maxima():
    boxes = np.array([[0, 0, 10, 10], [1, 1, 11, 11], [30, 30, 40, 40], [31, 30, 41, 40]], float)
    assert nms(boxes, np.array([0.9, 0.95, 0.7, 0.7]), 0.5) == [1, 2]


def test_grid_patches_match_direct_sampling():
    img = u8(textured(seed=2))
    boxes = candidate_windows(img.shape, (20.5, 11.25, 41.0, 33.0), (0.8, 1.0, 1.2), 0.1)
    from touchless.tld import candidate_grids
    grids = candidate_grids(img.shape, (20.5, 11.25, 41.0, 33.0), (0.8, 1.0, 1.2), 0.1)
    fast = np.concatenate([grid_patches(img, *g, 15) for g in grids])
    assert np.allclose(fast, sample_patches(img, boxes, 15), atol=1e-9)
    # the anchor window is part of the scan
    assert any(np.allclose(b, (20.5, 11.25, 41.0, 33.0)) for b in boxes)
