# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled fly-out and CART kernels.

Mirror of ``_pycore.py``: same signatures, same operation order. Any change
here must be made there too; tests compare the two bit for bit.
"""
from libc.math cimport atan2, exp, pow, sqrt, fabs, INFINITY

import numpy as np
cimport numpy as cnp

cnp.import_array()

DEF P_M0 = 0
DEF P_MPB = 1
DEF P_MPS = 2
DEF P_FB = 3
DEF P_TB = 4
DEF P_FS = 5
DEF P_TS = 6
DEF P_S = 7
DEF P_N = 8
DEF P_GLIM = 9
DEF P_LOFT = 10
DEF P_TLOFT = 11
DEF P_RSEEK = 12
DEF P_RHIT = 13
DEF P_TMAX = 14
DEF P_VMIN = 15
DEF P_SITE = 16
DEF P_G = 17
DEF NPARAM = 18

cdef double R_AIR = 287.05287
cdef double T0 = 288.15
cdef double P0 = 101325.0
cdef double LAPSE = 0.0065
cdef double H_TROPO = 11000.0
cdef double LOFT_GAIN = 1.0
cdef double DIVERGE_TIME = 3.0

cdef struct Ctx:
    double p[NPARAM]
    const double* cdm
    const double* cdon
    const double* cdoff
    int ncd


cdef inline double _mass(double t, Ctx* c) nogil:
    cdef double tb = c.p[P_TB]
    cdef double ts = c.p[P_TS]
    cdef double m1
    if t <= 0.0:
        return c.p[P_M0]
    if t < tb:
        return c.p[P_M0] - c.p[P_MPB] * (t / tb)
    m1 = c.p[P_M0] - c.p[P_MPB]
    if t < tb + ts:
        return m1 - c.p[P_MPS] * ((t - tb) / ts)
    return m1 - c.p[P_MPS]


cdef inline double _thrust(double t, Ctx* c) nogil:
    if t < c.p[P_TB]:
        return c.p[P_FB]
    if t < c.p[P_TB] + c.p[P_TS]:
        return c.p[P_FS]
    return 0.0


cdef inline double _interp(double x, const double* xs, const double* ys, int n) nogil:
    cdef int j = 0
    if x <= xs[0]:
        return ys[0]
    if x >= xs[n - 1]:
        return ys[n - 1]
    while xs[j + 1] < x:
        j += 1
    if x == xs[j + 1]:
        return ys[j + 1]
    return (ys[j + 1] - ys[j]) / (xs[j + 1] - xs[j]) * (x - xs[j]) + ys[j]


cdef inline void _accel(double pz, double vx, double vy, double vz, double t,
                        double thrust, double ax, double ay, double az, Ctx* c,
                        double* out) nogil:
    cdef double g = c.p[P_G]
    cdef double m = _mass(t, c)
    cdef double v = sqrt(vx * vx + vy * vy + vz * vz)
    cdef double rx = ax, ry = ay, rz = az - g
    cdef double h, temp, pres, rho, sos, cd, kt, kd
    if v > 0.0:
        h = pz + c.p[P_SITE]
        if h <= H_TROPO:
            temp = T0 - LAPSE * h
            pres = P0 * pow(temp / T0, g / (R_AIR * LAPSE))
        else:
            temp = T0 - LAPSE * H_TROPO
            pres = P0 * pow(temp / T0, g / (R_AIR * LAPSE)) * exp(-g * (h - H_TROPO) / (R_AIR * temp))
        rho = pres / (R_AIR * temp)
        sos = sqrt(1.4 * R_AIR * temp)
        if thrust > 0.0:
            cd = _interp(v / sos, c.cdm, c.cdon, c.ncd)
        else:
            cd = _interp(v / sos, c.cdm, c.cdoff, c.ncd)
        kt = thrust / m / v
        kd = 0.5 * rho * v * cd * c.p[P_S] / m
        rx = rx + kt * vx - kd * vx
        ry = ry + kt * vy - kd * vy
        rz = rz + kt * vz - kd * vz
    out[0] = rx
    out[1] = ry
    out[2] = rz


cdef void _segment(double* s, double t0, double t1, double ax, double ay, double az,
                   Ctx* c) nogil:
    cdef double px = s[0], py = s[1], pz = s[2], vx = s[3], vy = s[4], vz = s[5]
    cdef double h = t1 - t0
    cdef double hh = 0.5 * h
    cdef double th = _thrust(0.5 * (t0 + t1), c)
    cdef double a1[3]
    cdef double a2[3]
    cdef double a3[3]
    cdef double a4[3]
    cdef double v2x, v2y, v2z, v3x, v3y, v3z, v4x, v4y, v4z, h6
    _accel(pz, vx, vy, vz, t0, th, ax, ay, az, c, a1)
    v2x = vx + hh * a1[0]
    v2y = vy + hh * a1[1]
    v2z = vz + hh * a1[2]
    _accel(pz + hh * vz, v2x, v2y, v2z, t0 + hh, th, ax, ay, az, c, a2)
    v3x = vx + hh * a2[0]
    v3y = vy + hh * a2[1]
    v3z = vz + hh * a2[2]
    _accel(pz + hh * v2z, v3x, v3y, v3z, t0 + hh, th, ax, ay, az, c, a3)
    v4x = vx + h * a3[0]
    v4y = vy + h * a3[1]
    v4z = vz + h * a3[2]
    _accel(pz + h * v3z, v4x, v4y, v4z, t1, th, ax, ay, az, c, a4)
    h6 = h / 6.0
    s[0] = px + h6 * (vx + 2.0 * v2x + 2.0 * v3x + v4x)
    s[1] = py + h6 * (vy + 2.0 * v2y + 2.0 * v3y + v4y)
    s[2] = pz + h6 * (vz + 2.0 * v2z + 2.0 * v3z + v4z)
    s[3] = vx + h6 * (a1[0] + 2.0 * a2[0] + 2.0 * a3[0] + a4[0])
    s[4] = vy + h6 * (a1[1] + 2.0 * a2[1] + 2.0 * a3[1] + a4[1])
    s[5] = vz + h6 * (a1[2] + 2.0 * a2[2] + 2.0 * a3[2] + a4[2])


def run_flyout(p, cdm, cdon, cdoff, m0, tg0, double dt, bint trace=False):
    """Fly one engagement; see ``_pycore.run_flyout``."""
    cdef double[::1] pv = np.ascontiguousarray(p, dtype=np.float64)
    cdef double[::1] cdm_v = np.ascontiguousarray(cdm, dtype=np.float64)
    cdef double[::1] cdon_v = np.ascontiguousarray(cdon, dtype=np.float64)
    cdef double[::1] cdoff_v = np.ascontiguousarray(cdoff, dtype=np.float64)
    cdef Ctx c
    cdef int i
    if pv.shape[0] != NPARAM:
        raise ValueError("parameter vector must have %d entries" % NPARAM)
    if not (cdon_v.shape[0] == cdoff_v.shape[0] == cdm_v.shape[0] >= 1):
        raise ValueError("drag table length mismatch")
    for i in range(NPARAM):
        c.p[i] = pv[i]
    c.cdm = &cdm_v[0]
    c.cdon = &cdon_v[0]
    c.cdoff = &cdoff_v[0]
    c.ncd = cdm_v.shape[0]

    cdef double s[6]
    for i in range(6):
        s[i] = float(m0[i])
    cdef double t = float(m0[6])
    cdef double t_launch = t
    cdef double tx = float(tg0[0]), ty = float(tg0[1]), tz = float(tg0[2])
    cdef double tvx = float(tg0[3]), tvy = float(tg0[4]), tvz = float(tg0[5])
    cdef double g = c.p[P_G]
    cdef double cap = c.p[P_GLIM] * g
    cdef double tb = c.p[P_TB]
    cdef double tburn = c.p[P_TB] + c.p[P_TS]
    cdef double tmax = t_launch + c.p[P_TMAX]
    rows = [] if trace else None

    cdef double px, py, pz, vx, vy, vz, rx, ry, rz, wx, wy, wz, r2, rng, miss
    cdef double v2, vh, sp, err, k, vc, ox, oy, oz, ux, uy, uz, ax, ay, az, d, amag, f
    cdef double t_prev, t_end, t0, ntx, nty, ntz, qx, qy, qz, dx, dy, dz, dd, u
    cdef double cx, cy, cz, cpa, rng1, rdot
    cdef int phase = 0
    cdef double div_time = 0.0
    cdef int closed = 0
    cdef double t_cpa = 0.0
    cdef int reason = 0
    cdef long n = 0

    rx = tx - s[0]
    ry = ty - s[1]
    rz = tz - s[2]
    rng = sqrt(rx * rx + ry * ry + rz * rz)
    miss = rng
    if rng <= c.p[P_RHIT]:
        return 1, rng, 0.0, 0, 0, rows
    while True:
        px = s[0]; py = s[1]; pz = s[2]; vx = s[3]; vy = s[4]; vz = s[5]
        rx = tx - px
        ry = ty - py
        rz = tz - pz
        wx = tvx - vx
        wy = tvy - vy
        wz = tvz - vz
        r2 = rx * rx + ry * ry + rz * rz
        rng = sqrt(r2)
        if phase != 2 and rng <= c.p[P_RSEEK]:
            phase = 2
        elif phase == 0 and t - t_launch >= c.p[P_TLOFT]:
            phase = 1
        v2 = vx * vx + vy * vy + vz * vz
        if phase == 0:
            ax = 0.0
            ay = 0.0
            az = 0.0
            vh = sqrt(vx * vx + vy * vy)
            sp = sqrt(v2)
            if sp > 0.0 and vh > 0.0:
                err = c.p[P_LOFT] - atan2(vz, vh)
                if err != 0.0:
                    k = LOFT_GAIN * sp * err / (sp * vh)
                    ax = k * (-vz * vx)
                    ay = k * (-vz * vy)
                    az = k * (vh * vh)
        else:
            vc = -(rx * wx + ry * wy + rz * wz) / rng
            ox = (ry * wz - rz * wy) / r2
            oy = (rz * wx - rx * wz) / r2
            oz = (rx * wy - ry * wx) / r2
            ux = rx / rng
            uy = ry / rng
            uz = rz / rng
            k = c.p[P_N] * fabs(vc)
            ax = k * (oy * uz - oz * uy)
            ay = k * (oz * ux - ox * uz)
            az = k * (ox * uy - oy * ux) + g
        if v2 > 0.0:
            d = (ax * vx + ay * vy + az * vz) / v2
            ax = ax - d * vx
            ay = ay - d * vy
            az = az - d * vz
        amag = sqrt(ax * ax + ay * ay + az * az)
        if amag > cap:
            f = cap / amag
            ax = ax * f
            ay = ay * f
            az = az * f
            amag = cap
        if trace:
            rows.append((t, px, py, pz, tx, ty, tz, phase, amag))

        if t + dt > tmax + 1e-9:
            reason = 1
            break
        t_prev = t
        t_end = t + dt
        t0 = t
        if t0 < tb < t_end:
            _segment(s, t0, tb, ax, ay, az, &c)
            t0 = tb
        if t0 < tburn < t_end:
            _segment(s, t0, tburn, ax, ay, az, &c)
            t0 = tburn
        _segment(s, t0, t_end, ax, ay, az, &c)
        ntx = tx + tvx * dt
        nty = ty + tvy * dt
        ntz = tz + tvz * dt
        t = t_end
        n += 1

        qx = ntx - s[0]
        qy = nty - s[1]
        qz = ntz - s[2]
        dx = qx - rx
        dy = qy - ry
        dz = qz - rz
        dd = dx * dx + dy * dy + dz * dz
        u = 1.0
        if dd > 0.0:
            u = -(rx * dx + ry * dy + rz * dz) / dd
            if u < 0.0:
                u = 0.0
            elif u > 1.0:
                u = 1.0
        cx = rx + u * dx
        cy = ry + u * dy
        cz = rz + u * dz
        cpa = sqrt(cx * cx + cy * cy + cz * cz)
        tx = ntx
        ty = nty
        tz = ntz
        if not (cpa == cpa and s[3] == s[3] and s[4] == s[4] and s[5] == s[5]
                and fabs(cpa) < 1e300 and fabs(s[3]) + fabs(s[4]) + fabs(s[5]) < 1e300):
            return 0, miss, t - t_launch, -1, n, rows
        if cpa < miss:
            miss = cpa
            t_cpa = (t_prev - t_launch) + u * dt
        if miss <= c.p[P_RHIT] and u < 1.0:
            reason = 0
            break

        rng1 = sqrt(qx * qx + qy * qy + qz * qz)
        rdot = (qx * (tvx - s[3]) + qy * (tvy - s[4]) + qz * (tvz - s[5])) / rng1
        if s[2] + c.p[P_SITE] < 0.0:
            reason = 3
            break
        if t >= tmax - 1e-9:
            reason = 1
            break
        if t - t_launch >= tburn and rdot > 0.0 and \
                s[3] * s[3] + s[4] * s[4] + s[5] * s[5] < c.p[P_VMIN] * c.p[P_VMIN]:
            reason = 2
            break
        if phase == 2:
            if rdot <= 0.0:
                closed = 1
            if rdot > 0.0 and closed:
                div_time += dt
                if div_time >= DIVERGE_TIME - 1e-9:
                    reason = 4
                    break
            else:
                div_time = 0.0
    if miss <= c.p[P_RHIT]:
        return 1, miss, t_cpa, 0, n, rows
    return 0, miss, t - t_launch, reason, n, rows


# ---------------------------------------------------------------------------
# CART regression tree

def build_tree(X, y, w, orders, long min_samples_split, long min_samples_leaf,
               long max_depth):
    """Grow one variance-reduction regression tree; see ``_pycore.build_tree``."""
    cdef const double[:, ::1] Xv = np.ascontiguousarray(X, dtype=np.float64)
    cdef const double[::1] yv = np.ascontiguousarray(y, dtype=np.float64)
    cdef const double[::1] wv = np.ascontiguousarray(w, dtype=np.float64)
    cdef long[:, ::1] ord_v = np.array(orders, dtype=np.int64, copy=True, order="C")
    cdef Py_ssize_t n = Xv.shape[0]
    cdef Py_ssize_t dfeat = Xv.shape[1]
    cdef Py_ssize_t cap = 2 * n if n > 0 else 1
    feature_a = np.full(cap, -1, dtype=np.int64)
    threshold_a = np.zeros(cap)
    left_a = np.full(cap, -1, dtype=np.int64)
    right_a = np.full(cap, -1, dtype=np.int64)
    value_a = np.zeros(cap)
    cdef long[::1] feature = feature_a
    cdef double[::1] threshold = threshold_a
    cdef long[::1] left = left_a
    cdef long[::1] right = right_a
    cdef double[::1] value = value_a
    wy_a = np.empty(n)
    cdef double[::1] wy = wy_a
    cdef Py_ssize_t i, j, f
    for i in range(n):
        wy[i] = wv[i] * yv[i]
    goes_left_a = np.zeros(n, dtype=np.uint8)
    cdef unsigned char[::1] goes_left = goes_left_a
    buf_a = np.empty(n, dtype=np.int64)
    cdef long[::1] buf = buf_a

    # explicit stack: start, end, depth, parent, is_left
    stack_a = np.empty((cap + 1, 5), dtype=np.int64)
    cdef long[:, ::1] stack = stack_a
    cdef Py_ssize_t sp = 0
    cdef long start, end, depth, parent, is_left, node, cnt, nl, mid, best_f, best_nl, li, ri, idx
    cdef long n_nodes = 0
    cdef double W, S, wl, sl, sr, wr, gain, best, best_thr, thr, a, b, ymin, ymax

    stack[0, 0] = 0
    stack[0, 1] = n
    stack[0, 2] = 0
    stack[0, 3] = -1
    stack[0, 4] = 0
    sp = 1
    with nogil:
        while sp > 0:
            sp -= 1
            start = stack[sp, 0]
            end = stack[sp, 1]
            depth = stack[sp, 2]
            parent = stack[sp, 3]
            is_left = stack[sp, 4]
            node = n_nodes
            n_nodes += 1
            if parent >= 0:
                if is_left:
                    left[parent] = node
                else:
                    right[parent] = node
            W = 0.0
            S = 0.0
            idx = ord_v[0, start]
            ymin = yv[idx]
            ymax = yv[idx]
            for i in range(start, end):
                idx = ord_v[0, i]
                W += wv[idx]
                S += wy[idx]
                if yv[idx] < ymin:
                    ymin = yv[idx]
                if yv[idx] > ymax:
                    ymax = yv[idx]
            value[node] = S / W
            cnt = end - start
            if cnt < min_samples_split or (max_depth >= 0 and depth >= max_depth) or ymin == ymax:
                continue
            best = -INFINITY
            best_f = -1
            best_nl = 0
            best_thr = 0.0
            for f in range(dfeat):
                wl = 0.0
                sl = 0.0
                for i in range(start, end - 1):
                    idx = ord_v[f, i]
                    wl += wv[idx]
                    sl += wy[idx]
                    nl = i - start + 1
                    if nl < min_samples_leaf or cnt - nl < min_samples_leaf:
                        continue
                    a = Xv[idx, f]
                    b = Xv[ord_v[f, i + 1], f]
                    if not (a < b):
                        continue
                    sr = S - sl
                    wr = W - wl
                    gain = sl * sl / wl + sr * sr / wr
                    if gain > best:
                        best = gain
                        best_f = f
                        best_nl = nl
                        thr = a + (b - a) * 0.5
                        if thr >= b:
                            thr = a
                        best_thr = thr
            if best_f < 0:
                continue
            feature[node] = best_f
            threshold[node] = best_thr
            for i in range(start, end):
                goes_left[ord_v[best_f, i]] = 1 if i - start < best_nl else 0
            for f in range(dfeat):
                if f == best_f:
                    continue
                li = start
                ri = 0
                for i in range(start, end):
                    idx = ord_v[f, i]
                    if goes_left[idx]:
                        ord_v[f, li] = idx
                        li += 1
                    else:
                        buf[ri] = idx
                        ri += 1
                for j in range(ri):
                    ord_v[f, li + j] = buf[j]
            mid = start + best_nl
            stack[sp, 0] = mid
            stack[sp, 1] = end
            stack[sp, 2] = depth + 1
            stack[sp, 3] = node
            stack[sp, 4] = 0
            sp += 1
            stack[sp, 0] = start
            stack[sp, 1] = mid
            stack[sp, 2] = depth + 1
            stack[sp, 3] = node
            stack[sp, 4] = 1
            sp += 1
    return (feature_a[:n_nodes].copy(), threshold_a[:n_nodes].copy(),
            left_a[:n_nodes].copy(), right_a[:n_nodes].copy(), value_a[:n_nodes].copy())


def predict_forest(X, feature, threshold, left, right, value, roots):
    """Mean leaf value over trees; see ``_pycore.predict_forest``."""
    cdef const double[:, ::1] Xv = np.ascontiguousarray(X, dtype=np.float64)
    cdef const long[::1] fv = np.ascontiguousarray(feature, dtype=np.int64)
    cdef const double[::1] tv = np.ascontiguousarray(threshold, dtype=np.float64)
    cdef const long[::1] lv = np.ascontiguousarray(left, dtype=np.int64)
    cdef const long[::1] rv = np.ascontiguousarray(right, dtype=np.int64)
    cdef const double[::1] vv = np.ascontiguousarray(value, dtype=np.float64)
    cdef const long[::1] roots_v = np.ascontiguousarray(roots, dtype=np.int64)
    cdef Py_ssize_t n = Xv.shape[0]
    cdef Py_ssize_t nt = roots_v.shape[0]
    out_a = np.zeros(n)
    cdef double[::1] out = out_a
    cdef Py_ssize_t i, k
    cdef long node, f
    with nogil:
        for k in range(nt):
            for i in range(n):
                node = roots_v[k]
                f = fv[node]
                while f >= 0:
                    if Xv[i, f] <= tv[node]:
                        node = lv[node]
                    else:
                        node = rv[node]
                    f = fv[node]
                out[i] += vv[node]
        for i in range(n):
            out[i] = out[i] / nt
    return out_a


def adam_step(double[::1] theta, const double[::1] g, double[::1] m, double[::1] v,
              double[::1] tmp, double lr_t, double b1, double b2, double inv_bc2, double eps):
    cdef Py_ssize_t i, n = theta.shape[0]
    cdef double c1 = 1.0 - b1, c2 = 1.0 - b2, gi
    with nogil:
        for i in range(n):
            gi = g[i]
            m[i] = m[i] * b1 + gi * c1
            v[i] = v[i] * b2 + (gi * gi) * c2
            theta[i] = theta[i] - (m[i] / (sqrt(v[i] * inv_bc2) + eps)) * lr_t
