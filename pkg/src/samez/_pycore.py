"""Pure-Python fallback for the compiled kernels in ``_core.pyx``.

Both modules expose the same functions with the same argument layout and
perform the same floating-point operations in the same order, so results agree
to the last bit on one platform (tested). Keep them in lockstep.
"""
from math import atan2, exp, sqrt

import numpy as np

# parameter vector layout, see MissileParams.kernel_vector
P_M0, P_MPB, P_MPS, P_FB, P_TB, P_FS, P_TS, P_S, P_N, P_GLIM, P_LOFT, P_TLOFT, \
    P_RSEEK, P_RHIT, P_TMAX, P_VMIN, P_SITE, P_G = range(18)

R_AIR = 287.05287
T0 = 288.15
P0 = 101325.0
LAPSE = 0.0065
H_TROPO = 11000.0
LOFT_GAIN = 1.0
DIVERGE_TIME = 3.0

HIT, MISS = 1, 0
R_HIT, R_MAXTIME, R_MINSPEED, R_GROUND, R_DIVERGING, R_NONFINITE = 0, 1, 2, 3, 4, -1


def _mass(t, p):
    tb = p[P_TB]
    ts = p[P_TS]
    if t <= 0.0:
        return p[P_M0]
    if t < tb:
        return p[P_M0] - p[P_MPB] * (t / tb)
    m1 = p[P_M0] - p[P_MPB]
    if t < tb + ts:
        return m1 - p[P_MPS] * ((t - tb) / ts)
    return m1 - p[P_MPS]


def _thrust(t, p):
    if t < p[P_TB]:
        return p[P_FB]
    if t < p[P_TB] + p[P_TS]:
        return p[P_FS]
    return 0.0


def _interp(x, xs, ys):
    n = len(xs)
    if x <= xs[0]:
        return ys[0]
    if x >= xs[n - 1]:
        return ys[n - 1]
    j = 0
    while xs[j + 1] < x:
        j += 1
    if x == xs[j + 1]:
        return ys[j + 1]
    return (ys[j + 1] - ys[j]) / (xs[j + 1] - xs[j]) * (x - xs[j]) + ys[j]


def _accel(px, py, pz, vx, vy, vz, t, thrust, ax, ay, az, p, cdm, cdon, cdoff):
    g = p[P_G]
    m = _mass(t, p)
    v = sqrt(vx * vx + vy * vy + vz * vz)
    rx = ax
    ry = ay
    rz = az - g
    if v > 0.0:
        h = pz + p[P_SITE]
        if h <= H_TROPO:
            temp = T0 - LAPSE * h
            pres = P0 * (temp / T0) ** (g / (R_AIR * LAPSE))
        else:
            temp = T0 - LAPSE * H_TROPO
            pres = P0 * (temp / T0) ** (g / (R_AIR * LAPSE)) * exp(-g * (h - H_TROPO) / (R_AIR * temp))
        rho = pres / (R_AIR * temp)
        sos = sqrt(1.4 * R_AIR * temp)
        cd = _interp(v / sos, cdm, cdon if thrust > 0.0 else cdoff)
        kt = thrust / m / v
        kd = 0.5 * rho * v * cd * p[P_S] / m
        rx = rx + kt * vx - kd * vx
        ry = ry + kt * vy - kd * vy
        rz = rz + kt * vz - kd * vz
    return rx, ry, rz


def _segment(s, t0, t1, ax, ay, az, p, cdm, cdon, cdoff):
    px, py, pz, vx, vy, vz = s
    h = t1 - t0
    hh = 0.5 * h
    th = _thrust(0.5 * (t0 + t1), p)
    a1x, a1y, a1z = _accel(px, py, pz, vx, vy, vz, t0, th, ax, ay, az, p, cdm, cdon, cdoff)
    v2x = vx + hh * a1x
    v2y = vy + hh * a1y
    v2z = vz + hh * a1z
    a2x, a2y, a2z = _accel(px + hh * vx, py + hh * vy, pz + hh * vz, v2x, v2y, v2z,
                           t0 + hh, th, ax, ay, az, p, cdm, cdon, cdoff)
    v3x = vx + hh * a2x
    v3y = vy + hh * a2y
    v3z = vz + hh * a2z
    a3x, a3y, a3z = _accel(px + hh * v2x, py + hh * v2y, pz + hh * v2z, v3x, v3y, v3z,
                           t0 + hh, th, ax, ay, az, p, cdm, cdon, cdoff)
    v4x = vx + h * a3x
    v4y = vy + h * a3y
    v4z = vz + h * a3z
    a4x, a4y, a4z = _accel(px + h * v3x, py + h * v3y, pz + h * v3z, v4x, v4y, v4z,
                           t1, th, ax, ay, az, p, cdm, cdon, cdoff)
    h6 = h / 6.0
    return (px + h6 * (vx + 2.0 * v2x + 2.0 * v3x + v4x),
            py + h6 * (vy + 2.0 * v2y + 2.0 * v3y + v4y),
            pz + h6 * (vz + 2.0 * v2z + 2.0 * v3z + v4z),
            vx + h6 * (a1x + 2.0 * a2x + 2.0 * a3x + a4x),
            vy + h6 * (a1y + 2.0 * a2y + 2.0 * a3y + a4y),
            vz + h6 * (a1z + 2.0 * a2z + 2.0 * a3z + a4z))


def run_flyout(p, cdm, cdon, cdoff, m0, tg0, dt, trace=False):
    """Fly one engagement.

    p: parameter vector; cdm/cdon/cdoff: drag table; m0: missile
    (x, y, z, vx, vy, vz, time); tg0: target (x, y, z, vx, vy, vz).

    Returns (result, miss_distance, time_of_flight, reason, n_steps, rows)
    where rows is a list of per-step tuples when `trace` is true, else None.
    """
    p = [float(x) for x in p]
    cdm = [float(x) for x in cdm]
    cdon = [float(x) for x in cdon]
    cdoff = [float(x) for x in cdoff]
    s = tuple(float(x) for x in m0[:6])
    t = float(m0[6])
    t_launch = t
    tx, ty, tz, tvx, tvy, tvz = (float(x) for x in tg0)
    g = p[P_G]
    cap = p[P_GLIM] * g
    tb = p[P_TB]
    tburn = p[P_TB] + p[P_TS]
    tmax = t_launch + p[P_TMAX]
    rows = [] if trace else None

    rx = tx - s[0]
    ry = ty - s[1]
    rz = tz - s[2]
    rng = sqrt(rx * rx + ry * ry + rz * rz)
    miss = rng
    if rng <= p[P_RHIT]:
        return HIT, rng, 0.0, R_HIT, 0, rows
    phase = 0
    div_time = 0.0
    closed = 0
    t_cpa = 0.0
    reason = R_HIT
    n = 0
    while True:
        px, py, pz, vx, vy, vz = s
        rx = tx - px
        ry = ty - py
        rz = tz - pz
        wx = tvx - vx
        wy = tvy - vy
        wz = tvz - vz
        r2 = rx * rx + ry * ry + rz * rz
        rng = sqrt(r2)
        if phase != 2 and rng <= p[P_RSEEK]:
            phase = 2
        elif phase == 0 and t - t_launch >= p[P_TLOFT]:
            phase = 1
        v2 = vx * vx + vy * vy + vz * vz
        if phase == 0:
            ax = ay = az = 0.0
            vh = sqrt(vx * vx + vy * vy)
            sp = sqrt(v2)
            if sp > 0.0 and vh > 0.0:
                err = p[P_LOFT] - atan2(vz, vh)
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
            k = p[P_N] * abs(vc)
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
        if rows is not None:
            rows.append((t, px, py, pz, tx, ty, tz, phase, amag))

        if t + dt > tmax + 1e-9:
            reason = R_MAXTIME
            break
        t_prev = t
        t_end = t + dt
        t0 = t
        if t0 < tb < t_end:
            s = _segment(s, t0, tb, ax, ay, az, p, cdm, cdon, cdoff)
            t0 = tb
        if t0 < tburn < t_end:
            s = _segment(s, t0, tburn, ax, ay, az, p, cdm, cdon, cdoff)
            t0 = tburn
        s = _segment(s, t0, t_end, ax, ay, az, p, cdm, cdon, cdoff)
        ntx = tx + tvx * dt
        nty = ty + tvy * dt
        ntz = tz + tvz * dt
        t = t_end
        n += 1

        # closest approach on the straight relative segment across the step
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
                and abs(cpa) < 1e300 and abs(s[3]) + abs(s[4]) + abs(s[5]) < 1e300):
            return MISS, miss, t - t_launch, R_NONFINITE, n, rows
        if cpa < miss:
            miss = cpa
            t_cpa = (t_prev - t_launch) + u * dt
        # inside the kill radius and the range has started opening
        if miss <= p[P_RHIT] and u < 1.0:
            reason = R_HIT
            break

        rng1 = sqrt(qx * qx + qy * qy + qz * qz)
        rdot = (qx * (tvx - s[3]) + qy * (tvy - s[4]) + qz * (tvz - s[5])) / rng1
        if s[2] + p[P_SITE] < 0.0:
            reason = R_GROUND
            break
        if t >= tmax - 1e-9:
            reason = R_MAXTIME
            break
        if t - t_launch >= tburn and rdot > 0.0 and \
                s[3] * s[3] + s[4] * s[4] + s[5] * s[5] < p[P_VMIN] * p[P_VMIN]:
            reason = R_MINSPEED
            break
        if phase == 2:
            if rdot <= 0.0:
                closed = 1
            if rdot > 0.0 and closed:
                div_time += dt
                if div_time >= DIVERGE_TIME - 1e-9:
                    reason = R_DIVERGING
                    break
            else:
                div_time = 0.0
    if miss <= p[P_RHIT]:
        return HIT, miss, t_cpa, R_HIT, n, rows
    return MISS, miss, t - t_launch, reason, n, rows


# ---------------------------------------------------------------------------
# CART regression tree


def build_tree(X, y, w, orders, min_samples_split, min_samples_leaf, max_depth):
    """Grow one variance-reduction regression tree.

    X: (n, d) features of the distinct rows; y: targets; w: row weights
    (bootstrap multiplicities); orders: (d, n) int64, each row a stable argsort
    of the matching feature column. max_depth < 0 means unlimited.

    Returns (feature, threshold, left, right, value) arrays in preorder; leaves
    have feature == -1.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    w = np.asarray(w, dtype=np.float64)
    n, d = X.shape
    orders = np.array(orders, dtype=np.int64, copy=True)
    wy = w * y
    cap = 2 * n
    feature = np.full(cap, -1, dtype=np.int64)
    threshold = np.zeros(cap)
    left = np.full(cap, -1, dtype=np.int64)
    right = np.full(cap, -1, dtype=np.int64)
    value = np.zeros(cap)
    goes_left = np.zeros(n, dtype=bool)
    n_nodes = 0
    # (start, end, depth, parent, is_left)
    stack = [(0, n, 0, -1, False)]
    while stack:
        start, end, depth, parent, is_left = stack.pop()
        node = n_nodes
        n_nodes += 1
        if parent >= 0:
            if is_left:
                left[parent] = node
            else:
                right[parent] = node
        idx0 = orders[0, start:end]
        W = np.cumsum(w[idx0])[-1]
        S = np.cumsum(wy[idx0])[-1]
        value[node] = S / W
        cnt = end - start
        yn = y[idx0]
        if cnt < min_samples_split or (0 <= max_depth <= depth) or yn.min() == yn.max():
            continue
        best = -np.inf
        best_f = -1
        best_nl = 0
        best_thr = 0.0
        for f in range(d):
            idx = orders[f, start:end]
            xs = X[idx, f]
            wl = np.cumsum(w[idx])[:-1]
            sl = np.cumsum(wy[idx])[:-1]
            nl = np.arange(1, cnt)
            ok = (xs[:-1] < xs[1:]) & (nl >= min_samples_leaf) & (cnt - nl >= min_samples_leaf)
            if not ok.any():
                continue
            sr = S - sl
            wr = W - wl
            gain = sl * sl / wl + sr * sr / wr
            gain = np.where(ok, gain, -np.inf)
            i = int(np.argmax(gain))
            if gain[i] > best:
                best = gain[i]
                best_f = f
                best_nl = i + 1
                a = xs[i]
                b = xs[i + 1]
                thr = a + (b - a) * 0.5
                if thr >= b:
                    thr = a
                best_thr = thr
        if best_f < 0:
            continue
        feature[node] = best_f
        threshold[node] = best_thr
        split_idx = orders[best_f, start:end]
        goes_left[split_idx[:best_nl]] = True
        goes_left[split_idx[best_nl:]] = False
        for f in range(d):
            if f == best_f:
                continue
            seg = orders[f, start:end]
            m = goes_left[seg]
            orders[f, start:end] = np.concatenate((seg[m], seg[~m]))
        mid = start + best_nl
        stack.append((mid, end, depth + 1, node, False))
        stack.append((start, mid, depth + 1, node, True))
    return (feature[:n_nodes].copy(), threshold[:n_nodes].copy(), left[:n_nodes].copy(),
            right[:n_nodes].copy(), value[:n_nodes].copy())


def predict_forest(X, feature, threshold, left, right, value, roots):
    """Mean over trees of the leaf values reached by each row of X.

    Node arrays are the concatenation of all trees with child indices already
    offset; `roots` holds each tree's root index.
    """
    X = np.asarray(X, dtype=np.float64)
    n = X.shape[0]
    rows = np.arange(n)
    total = np.zeros(n)
    for r in roots:
        node = np.full(n, r, dtype=np.int64)
        while True:
            f = feature[node]
            inner = f >= 0
            if not inner.any():
                break
            ni = node[inner]
            go_left = X[rows[inner], f[inner]] <= threshold[ni]
            node[inner] = np.where(go_left, left[ni], right[ni])
        total += value[node]
    return total / len(roots)


def adam_step(theta, g, m, v, tmp, lr_t, b1, b2, inv_bc2, eps):
    """In-place Adam update; lr_t already carries the first-moment correction.

    m = b1 m + (1 - b1) g;  v = b2 v + (g g)(1 - b2);
    theta -= (m / (sqrt(v inv_bc2) + eps)) lr_t
    """
    m *= b1
    np.multiply(g, 1.0 - b1, out=tmp)
    m += tmp
    v *= b2
    np.multiply(g, g, out=tmp)
    tmp *= 1.0 - b2
    v += tmp
    np.multiply(v, inv_bc2, out=tmp)
    np.sqrt(tmp, out=tmp)
    tmp += eps
    np.divide(m, tmp, out=tmp)
    tmp *= lr_t
    theta -= tmp
