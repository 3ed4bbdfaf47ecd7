# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels. Same signatures and semantics as ``_pure``."""

import numpy as np
cimport numpy as cnp
from libc.math cimport fabs, sqrt, INFINITY

cnp.import_array()


def viterbi_decode(log_pi, log_A, log_B):
    cdef const double[::1] lp = np.ascontiguousarray(log_pi, dtype=np.float64)
    cdef const double[:, ::1] la = np.ascontiguousarray(log_A, dtype=np.float64)
    cdef const double[:, ::1] lb = np.ascontiguousarray(log_B, dtype=np.float64)
    cdef Py_ssize_t n = lb.shape[0], k = lb.shape[1]
    cdef Py_ssize_t t, i, j, arg
    cdef double best, v
    delta_arr = np.empty(k, dtype=np.float64)
    nxt_arr = np.empty(k, dtype=np.float64)
    back_arr = np.zeros((n, k), dtype=np.int64)
    path_arr = np.empty(n, dtype=np.int64)
    cdef double[::1] delta = delta_arr
    cdef double[::1] nxt = nxt_arr
    cdef cnp.int64_t[:, ::1] back = back_arr
    cdef cnp.int64_t[::1] path = path_arr

    for j in range(k):
        delta[j] = lp[j] + lb[0, j]
    for t in range(1, n):
        for j in range(k):
            arg = 0
            best = delta[0] + la[0, j]
            for i in range(1, k):
                v = delta[i] + la[i, j]
                if v > best:
                    best = v
                    arg = i
            back[t, j] = arg
            nxt[j] = best + lb[t, j]
        for j in range(k):
            delta[j] = nxt[j]
    arg = 0
    best = delta[0]
    for j in range(1, k):
        if delta[j] > best:
            best = delta[j]
            arg = j
    path[n - 1] = arg
    for t in range(n - 1, 0, -1):
        path[t - 1] = back[t, path[t]]
    return path_arr, float(best)


def dtw_distance(a, b):
    cdef const double[::1] x = np.ascontiguousarray(a, dtype=np.float64)
    cdef const double[::1] y = np.ascontiguousarray(b, dtype=np.float64)
    cdef Py_ssize_t n = x.shape[0], m = y.shape[0], i, j
    cdef double c, best
    prev_arr = np.full(m + 1, INFINITY)
    cur_arr = np.full(m + 1, INFINITY)
    cdef double[::1] prev = prev_arr
    cdef double[::1] cur = cur_arr
    cdef double[::1] tmp
    prev[0] = 0.0
    for i in range(1, n + 1):
        cur[0] = INFINITY
        for j in range(1, m + 1):
            best = prev[j - 1]
            if prev[j] < best:
                best = prev[j]
            if cur[j - 1] < best:
                best = cur[j - 1]
            c = fabs(x[i - 1] - y[j - 1])
            cur[j] = c + best
        tmp = prev
        prev = cur
        cur = tmp
    return float(prev[m])


def project_points(points, verts, cum_s):
    cdef const double[:, ::1] P = np.ascontiguousarray(np.asarray(points, dtype=np.float64).reshape(-1, 2))
    cdef const double[:, ::1] V = np.ascontiguousarray(verts, dtype=np.float64)
    cdef const double[::1] S = np.ascontiguousarray(cum_s, dtype=np.float64)
    cdef Py_ssize_t m = P.shape[0], ns = V.shape[0] - 1, p, i, best_i
    cdef double px, py, ax, ay, sx, sy, l2, tr, t, fx, fy, dx, dy, d2, best_d2
    cdef double best_t, best_tr, best_cross, sl, cross
    s_arr = np.empty(m, dtype=np.float64)
    d_arr = np.empty(m, dtype=np.float64)
    f_arr = np.zeros(m, dtype=np.int8)
    cdef double[::1] so = s_arr
    cdef double[::1] do = d_arr
    cdef cnp.int8_t[::1] fo = f_arr
    for p in range(m):
        px = P[p, 0]
        py = P[p, 1]
        best_d2 = INFINITY
        best_i = 0
        best_t = 0.0
        best_tr = 0.0
        best_cross = 0.0
        for i in range(ns):
            ax = V[i, 0]
            ay = V[i, 1]
            sx = V[i + 1, 0] - ax
            sy = V[i + 1, 1] - ay
            l2 = sx * sx + sy * sy
            tr = ((px - ax) * sx + (py - ay) * sy) / l2
            t = tr
            if t < 0.0:
                t = 0.0
            elif t > 1.0:
                t = 1.0
            fx = ax + t * sx
            fy = ay + t * sy
            dx = px - fx
            dy = py - fy
            d2 = dx * dx + dy * dy
            if d2 < best_d2:
                best_d2 = d2
                best_i = i
                best_t = t
                best_tr = tr
                best_cross = sx * (py - ay) - sy * (px - ax)
        sx = V[best_i + 1, 0] - V[best_i, 0]
        sy = V[best_i + 1, 1] - V[best_i, 1]
        sl = sqrt(sx * sx + sy * sy)
        if best_i == 0 and best_tr < 0.0:
            so[p] = best_tr * sl
            do[p] = best_cross / sl
            fo[p] = 1
        elif best_i == ns - 1 and best_tr > 1.0:
            so[p] = S[ns] + (best_tr - 1.0) * sl
            do[p] = best_cross / sl
            fo[p] = 1
        else:
            so[p] = S[best_i] + best_t * sl
            do[p] = (-1.0 if best_cross < 0.0 else 1.0) * sqrt(best_d2)
    return s_arr, d_arr, f_arr


cdef int _seg_intersect(double p0x, double p0y, double p1x, double p1y,
                        double q0x, double q0y, double q1x, double q1y,
                        double* u_out, double* v_out, int* degen) nogil:
    cdef double rx = p1x - p0x, ry = p1y - p0y
    cdef double sx = q1x - q0x, sy = q1y - q0y
    cdef double qpx = q0x - p0x, qpy = q0y - p0y
    cdef double denom = rx * sy - ry * sx
    cdef double u, v, rr, ss, t0, t1, lo, hi, mx, my
    if denom != 0.0:
        u = (qpx * sy - qpy * sx) / denom
        v = (qpx * ry - qpy * rx) / denom
        if 0.0 <= u <= 1.0 and 0.0 <= v <= 1.0:
            u_out[0] = u
            v_out[0] = v
            degen[0] = 0
            return 1
        return 0
    if qpx * ry - qpy * rx != 0.0:
        return 0
    rr = rx * rx + ry * ry
    ss = sx * sx + sy * sy
    if rr == 0.0 or ss == 0.0:
        return 0
    t0 = (qpx * rx + qpy * ry) / rr
    t1 = t0 + (sx * rx + sy * ry) / rr
    lo = t0 if t0 < t1 else t1
    hi = t1 if t0 < t1 else t0
    if lo < 0.0:
        lo = 0.0
    if hi > 1.0:
        hi = 1.0
    if lo > hi:
        return 0
    u = 0.5 * (lo + hi)
    mx = p0x + u * rx
    my = p0y + u * ry
    u_out[0] = u
    v_out[0] = ((mx - q0x) * sx + (my - q0y) * sy) / ss
    degen[0] = 1
    return 1


def first_crossing(path_a, path_b):
    cdef const double[:, ::1] A = np.ascontiguousarray(path_a, dtype=np.float64)
    cdef const double[:, ::1] B = np.ascontiguousarray(path_b, dtype=np.float64)
    cdef Py_ssize_t na = A.shape[0], nb = B.shape[0], i, j, bj
    cdef double ax0, ay0, ax1, ay1, aminx, amaxx, aminy, amaxy
    cdef double bx0, by0, bx1, by1, u, v, bu, bv
    cdef int degen, bdeg, found
    if na < 2 or nb < 2:
        return -1, -1, 0.0, 0.0, False
    for i in range(na - 1):
        ax0 = A[i, 0]; ay0 = A[i, 1]; ax1 = A[i + 1, 0]; ay1 = A[i + 1, 1]
        aminx = ax0 if ax0 < ax1 else ax1
        amaxx = ax1 if ax0 < ax1 else ax0
        aminy = ay0 if ay0 < ay1 else ay1
        amaxy = ay1 if ay0 < ay1 else ay0
        found = 0
        bj = -1
        bu = 0.0
        bv = 0.0
        bdeg = 0
        for j in range(nb - 1):
            bx0 = B[j, 0]; by0 = B[j, 1]; bx1 = B[j + 1, 0]; by1 = B[j + 1, 1]
            if (bx0 if bx0 > bx1 else bx1) < aminx or (bx0 if bx0 < bx1 else bx1) > amaxx:
                continue
            if (by0 if by0 > by1 else by1) < aminy or (by0 if by0 < by1 else by1) > amaxy:
                continue
            if _seg_intersect(ax0, ay0, ax1, ay1, bx0, by0, bx1, by1, &u, &v, &degen):
                if not found or u < bu:
                    found = 1
                    bj = j
                    bu = u
                    bv = v
                    bdeg = degen
        if found:
            return int(i), int(bj), float(bu), float(bv), bool(bdeg)
    return -1, -1, 0.0, 0.0, False
