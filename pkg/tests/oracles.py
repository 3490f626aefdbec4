"""Independent reference implementations used by the tests."""
import itertools

import numpy as np


def reward(segment, shift, bits):
    ox, oy = shift
    return int(sum(bits[y + oy, x + ox] for x, y in segment))


def brute_force_score(template, bits, omega):
    """Max total reward over every assignment of shifts with consecutive
    shifts at Chebyshev distance <= 1, by plain enumeration."""
    shifts = [(int(x), int(y)) for y, x in zip(*np.nonzero(omega))]
    segs = template.segments
    best = None
    for combo in itertools.product(shifts, repeat=len(segs)):
        if any(max(abs(a[0] - b[0]), abs(a[1] - b[1])) > 1 for a, b in zip(combo, combo[1:])):
            continue
        total = sum(reward(s, p, bits) for s, p in zip(segs, combo))
        best = total if best is None else max(best, total)
    return best


def brute_force_tensor(template, bits, omega):
    """Same maximum, enumerated as a dense tensor over all assignments (fast for
    up to three segments and a hundred shifts)."""
    ys, xs = np.nonzero(omega)
    segs = template.segments
    rewards = [np.array([reward(s, (x, y), bits) for x, y in zip(xs, ys)]) for s in segs]
    adj = np.maximum(np.abs(xs[:, None] - xs[None]), np.abs(ys[:, None] - ys[None])) <= 1
    total = rewards[0].astype(float)
    feasible = np.ones(len(xs), bool)
    for k in range(1, len(segs)):
        total = total[..., None] + rewards[k].reshape((1,) * k + (-1,))
        feasible = feasible[..., None] & adj.reshape((1,) * (k - 1) + adj.shape)
    return int(np.where(feasible, total, -np.inf).max())


def iou(a, b):
    ix = max(0.0, min(a[2], b[2]) - max(a[0], b[0]))
    iy = max(0.0, min(a[3], b[3]) - max(a[1], b[1]))
    inter = ix * iy
    union = (a[2] - a[0]) * (a[3] - a[1]) + (b[2] - b[0]) * (b[3] - b[1]) - inter
    return inter / union if union > 0 else 0.0
