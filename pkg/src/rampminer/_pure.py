"""Pure-Python/numpy implementations of the hot kernels.

Every function here has a twin with the same signature in ``_ext.pyx``.
The two are checked against each other in ``tests/test_kernels.py``.
"""

import math

import numpy as np

NEG_INF = -math.inf


def viterbi_decode(log_pi, log_A, log_B):
    """Most likely state path given log start/transition/emission scores.

    ``log_B`` has shape (n_frames, n_states). Ties go to the lower state
    index, both in the back-pointers and in the final state.
    Returns ``(path, score)`` with ``path`` an int64 array.
    """
    log_pi = np.asarray(log_pi, dtype=np.float64)
    log_A = np.asarray(log_A, dtype=np.float64)
    log_B = np.asarray(log_B, dtype=np.float64)
    n, k = log_B.shape
    delta = log_pi + log_B[0]
    back = np.zeros((n, k), dtype=np.int64)
    for t in range(1, n):
        # scores[i, j]: best path ending in i at t-1, then i -> j
        scores = delta[:, None] + log_A
        best = np.argmax(scores, axis=0)
        back[t] = best
        delta = scores[best, np.arange(k)] + log_B[t]
    path = np.empty(n, dtype=np.int64)
    path[-1] = int(np.argmax(delta))
    score = float(delta[path[-1]])
    for t in range(n - 1, 0, -1):
        path[t - 1] = back[t, path[t]]
    return path, score


def dtw_distance(a, b):
    """Accumulated DTW cost with local cost |a_i - b_j|, steps (1,0),(0,1),(1,1)."""
    a = [float(x) for x in a]
    b = [float(x) for x in b]
    n, m = len(a), len(b)
    prev = [math.inf] * (m + 1)
    prev[0] = 0.0
    for i in range(1, n + 1):
        cur = [math.inf] * (m + 1)
        ai = a[i - 1]
        for j in range(1, m + 1):
            cur[j] = abs(ai - b[j - 1]) + min(prev[j - 1], prev[j], cur[j - 1])
        prev = cur
    return prev[m]


def project_points(points, verts, cum_s):
    """Project points onto a polyline.

    Returns ``(s, d, flag)``: arc length, signed lateral offset (positive to
    the left of travel direction) and a flag that is 1 where the foot lies
    beyond either end of the polyline (linear extrapolation along the
    terminal segment). Ties between segments keep the smallest s.
    """
    points = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    verts = np.asarray(verts, dtype=np.float64)
    cum_s = np.asarray(cum_s, dtype=np.float64)
    a = verts[:-1]
    seg = verts[1:] - a
    seg_len2 = np.einsum("ij,ij->i", seg, seg)
    seg_len = np.sqrt(seg_len2)
    n_seg = len(seg)

    rel = points[:, None, :] - a[None, :, :]  # (m, n_seg, 2)
    t_raw = np.einsum("mij,ij->mi", rel, seg) / seg_len2
    t = np.clip(t_raw, 0.0, 1.0)
    foot = a[None, :, :] + t[:, :, None] * seg[None, :, :]
    diff = points[:, None, :] - foot
    dist2 = np.einsum("mij,mij->mi", diff, diff)
    best = np.argmin(dist2, axis=1)  # first minimum -> smallest s

    rows = np.arange(len(points))
    tb = t[rows, best]
    tr = t_raw[rows, best]
    cross = seg[best, 0] * rel[rows, best, 1] - seg[best, 1] * rel[rows, best, 0]
    sign = np.where(cross < 0.0, -1.0, 1.0)
    s = cum_s[best] + tb * seg_len[best]
    d = sign * np.sqrt(dist2[rows, best])
    flag = np.zeros(len(points), dtype=np.int8)

    before = (best == 0) & (tr < 0.0)
    after = (best == n_seg - 1) & (tr > 1.0)
    ext = before | after
    if ext.any():
        s_ext = np.where(before, tr * seg_len[best], cum_s[-1] + (tr - 1.0) * seg_len[best])
        s = np.where(ext, s_ext, s)
        d = np.where(ext, cross / seg_len[best], d)
        flag[ext] = 1
    return s, d, flag


def _seg_intersect(p0x, p0y, p1x, p1y, q0x, q0y, q1x, q1y):
    """Intersection of closed segments; returns (u, v, degenerate) or None."""
    rx, ry = p1x - p0x, p1y - p0y
    sx, sy = q1x - q0x, q1y - q0y
    qpx, qpy = q0x - p0x, q0y - p0y
    denom = rx * sy - ry * sx
    if denom != 0.0:
        u = (qpx * sy - qpy * sx) / denom
        v = (qpx * ry - qpy * rx) / denom
        if 0.0 <= u <= 1.0 and 0.0 <= v <= 1.0:
            return u, v, False
        return None
    if qpx * ry - qpy * rx != 0.0:
        return None  # parallel, not collinear
    rr = rx * rx + ry * ry
    ss = sx * sx + sy * sy
    if rr == 0.0 or ss == 0.0:
        return None
    # collinear: overlap in p's parameter space
    t0 = (qpx * rx + qpy * ry) / rr
    t1 = t0 + (sx * rx + sy * ry) / rr
    lo, hi = max(0.0, min(t0, t1)), min(1.0, max(t0, t1))
    if lo > hi:
        return None
    u = 0.5 * (lo + hi)
    mx, my = p0x + u * rx, p0y + u * ry
    v = ((mx - q0x) * sx + (my - q0y) * sy) / ss
    return u, v, True


def first_crossing(path_a, path_b):
    """First crossing of two polyline paths, ordered along ``path_a``.

    Returns ``(i, j, u, v, degenerate)`` where segment i of a meets segment j
    of b at parameters u, v; ``i == -1`` when the paths never cross. Among
    crossings on the same segment of a, the smallest u wins, then smallest j.
    """
    A = np.asarray(path_a, dtype=np.float64)
    B = np.asarray(path_b, dtype=np.float64)
    if len(A) < 2 or len(B) < 2:
        return -1, -1, 0.0, 0.0, False
    bminx = np.minimum(B[:-1, 0], B[1:, 0])
    bmaxx = np.maximum(B[:-1, 0], B[1:, 0])
    bminy = np.minimum(B[:-1, 1], B[1:, 1])
    bmaxy = np.maximum(B[:-1, 1], B[1:, 1])
    for i in range(len(A) - 1):
        ax0, ay0 = A[i]
        ax1, ay1 = A[i + 1]
        cand = np.nonzero(
            (bmaxx >= min(ax0, ax1)) & (bminx <= max(ax0, ax1))
            & (bmaxy >= min(ay0, ay1)) & (bminy <= max(ay0, ay1))
        )[0]
        best = None
        for j in cand:
            hit = _seg_intersect(ax0, ay0, ax1, ay1, B[j, 0], B[j, 1], B[j + 1, 0], B[j + 1, 1])
            if hit is not None and (best is None or hit[0] < best[2]):
                best = (i, int(j), hit[0], hit[1], hit[2])
        if best is not None:
            return best
    return -1, -1, 0.0, 0.0, False
