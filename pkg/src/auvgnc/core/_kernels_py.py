"""Pure-Python kernels; mirror _kernels.pyx operation for operation."""
from __future__ import annotations

import math

NSTATE = 15        # p(3), R_WI row-major(9), q, r, gamma
NCOL = 14          # t, p(3), q, r, fins(5), suction, gamma, gamma_dot
NPARAM = 20


def suction(depth, F0, depth_ref, depth_scale):
    if depth <= depth_ref:
        return F0
    return F0 * math.exp(-(depth - depth_ref) / depth_scale)


def clip(x, lim):
    if x > lim:
        return lim
    if x < -lim:
        return -lim
    return x


def mix(dv, dh, lim):
    return (clip(-dv + dh, lim), clip(-dv - dh, lim), clip(dv - dh, lim),
            clip(dv + dh, lim), clip(dv, lim))


def unmix(f):
    return ((-f[0] - f[1] + f[2] + f[3] + f[4]) / 5.0,
            (f[0] - f[1] - f[2] + f[3]) / 4.0)


def autopilot(cq, cr, q, r, ap, dt, Kpv, Kph, Kiv, Kih, lim):
    """Discrete PI with trapezoidal integration and conditional anti-windup.

    ap = [I_q, I_r, e_prev_q, e_prev_r] is updated in place.
    """
    eq = cq - q
    er = cr - r
    Iq = ap[0] + 0.5 * dt * (eq + ap[2])
    Ir = ap[1] + 0.5 * dt * (er + ap[3])
    dv_old = Kpv * eq + Kiv * ap[0]
    dh_old = Kph * er + Kih * ap[1]
    if abs(dv_old) >= lim and dv_old * eq > 0.0:
        Iq = ap[0]
    if abs(dh_old) >= lim and dh_old * er > 0.0:
        f = mix(dv_old, dh_old, lim)
        if abs(f[0]) >= lim and abs(f[1]) >= lim and abs(f[2]) >= lim and abs(f[3]) >= lim:
            Ir = ap[1]
    ap[0] = Iq
    ap[1] = Ir
    ap[2] = eq
    ap[3] = er
    return Kpv * eq + Kiv * Iq, Kph * er + Kih * Ir


def bezier(ctrl, s, out):
    """de Casteljau on an (N+1) x 3 nested list; writes the point into out."""
    n = len(ctrl)
    if n == 0:
        out[0] = out[1] = out[2] = 0.0
        return
    tmp = [list(row) for row in ctrl]
    u = 1.0 - s
    for k in range(1, n):
        for i in range(n - k):
            a = tmp[i]
            b = tmp[i + 1]
            a[0] = u * a[0] + s * b[0]
            a[1] = u * a[1] + s * b[1]
            a[2] = u * a[2] + s * b[2]
    out[0], out[1], out[2] = tmp[0]


def gamma_rate(x, prm, ctrl, hodo):
    """Virtual-time rate at state x; zero when no path is attached."""
    T_f = prm[15]
    if len(ctrl) == 0 or T_f <= 0.0:
        return 0.0
    g = x[14]
    s = g / T_f
    if s < 0.0:
        s = 0.0
    elif s > 1.0:
        s = 1.0
    pd = [0.0, 0.0, 0.0]
    dd = [0.0, 0.0, 0.0]
    bezier(ctrl, s, pd)
    bezier(hodo, s, dd)
    sp = math.sqrt(dd[0] * dd[0] + dd[1] * dd[1] + dd[2] * dd[2])
    if sp < prm[19]:
        sp = prm[19]
    v = prm[0]
    kg = prm[14]
    ax = v * x[3] + kg * (x[0] - pd[0])
    ay = v * x[6] + kg * (x[1] - pd[1])
    az = v * x[9] + kg * (x[2] - pd[2])
    rate = (ax * dd[0] + ay * dd[1] + az * dd[2]) / (sp * sp)
    if (g >= T_f and rate > 0.0) or (g <= 0.0 and rate < 0.0):
        return 0.0
    return rate


def deriv(x, dv, dh, prm, ctrl, hodo, out):
    v = prm[0]
    q = x[12]
    r = x[13]
    out[0] = v * x[3]
    out[1] = v * x[6]
    out[2] = v * x[9]
    # R' = R hat([0, q, r]); hat columns: [0, r, -q], [-r, 0, 0], [q, 0, 0]
    for i in range(3):
        r0 = x[3 + 3 * i]
        r1 = x[4 + 3 * i]
        r2 = x[5 + 3 * i]
        out[3 + 3 * i] = r * r1 - q * r2
        out[4 + 3 * i] = -r * r0
        out[5 + 3 * i] = q * r0
    depth = -x[2]
    wq = prm[13] * suction(depth, prm[10], prm[11], prm[12])
    out[12] = (-q + prm[3] * dv + wq) / prm[1]
    out[13] = (-r + prm[4] * dh) / prm[2]
    out[14] = gamma_rate(x, prm, ctrl, hodo)


def reortho(x):
    """Gram-Schmidt on the columns of R keeping the first column's direction."""
    c0 = [x[3], x[6], x[9]]
    c1 = [x[4], x[7], x[10]]
    n0 = math.sqrt(c0[0] * c0[0] + c0[1] * c0[1] + c0[2] * c0[2])
    c0 = [c0[0] / n0, c0[1] / n0, c0[2] / n0]
    d = c0[0] * c1[0] + c0[1] * c1[1] + c0[2] * c1[2]
    c1 = [c1[0] - d * c0[0], c1[1] - d * c0[1], c1[2] - d * c0[2]]
    n1 = math.sqrt(c1[0] * c1[0] + c1[1] * c1[1] + c1[2] * c1[2])
    c1 = [c1[0] / n1, c1[1] / n1, c1[2] / n1]
    c2 = [c0[1] * c1[2] - c0[2] * c1[1], c0[2] * c1[0] - c0[0] * c1[2],
          c0[0] * c1[1] - c0[1] * c1[0]]
    for i in range(3):
        x[3 + 3 * i] = c0[i]
        x[4 + 3 * i] = c1[i]
        x[5 + 3 * i] = c2[i]


def advance(x, ap, cmd, t0, dt, nsteps, prm, ctrl, hodo, out):
    """Advance the vehicle nsteps substeps of length dt with a held command.

    x (15), ap (4) are updated in place; row k of ``out`` records the state
    at t0 + k dt together with the fins applied over that substep.  Returns
    0 on success or 1 if the state became non-finite (rows up to the failing
    step are written).
    """
    ctrl = [list(map(float, row)) for row in ctrl]
    hodo = [list(map(float, row)) for row in hodo]
    xs = [float(v) for v in x]
    apl = [float(v) for v in ap]
    prm = [float(v) for v in prm]
    lim = prm[9]
    k1 = [0.0] * NSTATE
    k2 = [0.0] * NSTATE
    k3 = [0.0] * NSTATE
    k4 = [0.0] * NSTATE
    tmp = [0.0] * NSTATE
    status = 0
    for k in range(nsteps):
        t = t0 + k * dt
        cq = cmd[0]
        cr = cmd[1]
        if t >= prm[16]:
            cq += prm[17]
            cr += prm[18]
        dvc, dhc = autopilot(cq, cr, xs[12], xs[13], apl, dt, prm[5], prm[6], prm[7], prm[8], lim)
        fins = mix(dvc, dhc, lim)
        dv, dh = unmix(fins)
        row = out[k]
        row[0] = t
        row[1] = xs[0]
        row[2] = xs[1]
        row[3] = xs[2]
        row[4] = xs[12]
        row[5] = xs[13]
        for i in range(5):
            row[6 + i] = fins[i]
        row[11] = suction(-xs[2], prm[10], prm[11], prm[12]) if prm[13] != 0.0 else 0.0
        row[12] = xs[14]
        row[13] = gamma_rate(xs, prm, ctrl, hodo)
        deriv(xs, dv, dh, prm, ctrl, hodo, k1)
        for i in range(NSTATE):
            tmp[i] = xs[i] + 0.5 * dt * k1[i]
        deriv(tmp, dv, dh, prm, ctrl, hodo, k2)
        for i in range(NSTATE):
            tmp[i] = xs[i] + 0.5 * dt * k2[i]
        deriv(tmp, dv, dh, prm, ctrl, hodo, k3)
        for i in range(NSTATE):
            tmp[i] = xs[i] + dt * k3[i]
        deriv(tmp, dv, dh, prm, ctrl, hodo, k4)
        for i in range(NSTATE):
            xs[i] = xs[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
        reortho(xs)
        T_f = prm[15]
        if len(ctrl) and T_f > 0.0:
            if xs[14] > T_f:
                xs[14] = T_f
            elif xs[14] < 0.0:
                xs[14] = 0.0
        if not all(math.isfinite(v) for v in xs):
            status = 1
            break
    for i in range(NSTATE):
        x[i] = xs[i]
    for i in range(4):
        ap[i] = apl[i]
    return status


def _unit_tangent_rate(d1, d2, T_f, g, floor, t1, dt1):
    """Unit tangent and its gamma-derivative at g; returns False below the speed floor."""
    s = g / T_f
    a = [0.0, 0.0, 0.0]
    b = [0.0, 0.0, 0.0]
    bezier(d1, s, a)
    bezier(d2, s, b)
    sp = math.sqrt(a[0] * a[0] + a[1] * a[1] + a[2] * a[2])
    if sp < floor:
        return False
    t1[0] = a[0] / sp
    t1[1] = a[1] / sp
    t1[2] = a[2] / sp
    d = t1[0] * b[0] + t1[1] * b[1] + t1[2] * b[2]
    dt1[0] = (b[0] - t1[0] * d) / sp
    dt1[1] = (b[1] - t1[1] * d) / sp
    dt1[2] = (b[2] - t1[2] * d) / sp
    return True


def _frame_rates(d1, d2, T_f, g, floor, a2, a3, r2, r3):
    t1 = [0.0, 0.0, 0.0]
    dt1 = [0.0, 0.0, 0.0]
    if not _unit_tangent_rate(d1, d2, T_f, g, floor, t1, dt1):
        return False
    k2 = a2[0] * dt1[0] + a2[1] * dt1[1] + a2[2] * dt1[2]
    k3 = a3[0] * dt1[0] + a3[1] * dt1[1] + a3[2] * dt1[2]
    for i in range(3):
        r2[i] = -k2 * t1[i]
        r3[i] = -k3 * t1[i]
    return True


def transport(d1, d2, T_f, g, g_end, n, t2, t3, floor):
    """Carry the normals t2, t3 (updated in place) from g to g_end in n RK4 substeps.

    After each substep t1 is taken from the analytic tangent and the normals
    are re-orthonormalised against it.  Returns (status, gamma): status 0 on
    success, 2 if the path speed fell below ``floor`` at gamma, 3 if the
    frame flipped handedness.
    """
    d1 = [list(map(float, row)) for row in d1]
    d2 = [list(map(float, row)) for row in d2]
    a2 = [0.0] * 3
    a3 = [0.0] * 3
    b2 = [0.0] * 3
    b3 = [0.0] * 3
    c2 = [0.0] * 3
    c3 = [0.0] * 3
    e2 = [0.0] * 3
    e3 = [0.0] * 3
    u2 = [0.0] * 3
    u3 = [0.0] * 3
    x2 = [float(t2[0]), float(t2[1]), float(t2[2])]
    x3 = [float(t3[0]), float(t3[1]), float(t3[2])]
    t1 = [0.0] * 3
    dt1 = [0.0] * 3
    h = (g_end - g) / n if n > 0 else 0.0
    for i in range(n):
        g0 = g + i * h
        gm = g0 + 0.5 * h
        gm = 0.0 if gm < 0.0 else (T_f if gm > T_f else gm)
        if i == n - 1:
            g1 = g_end
        else:
            g1 = g0 + h
            g1 = 0.0 if g1 < 0.0 else (T_f if g1 > T_f else g1)
        if not _frame_rates(d1, d2, T_f, g0, floor, x2, x3, a2, a3):
            return 2, g0
        for j in range(3):
            u2[j] = x2[j] + 0.5 * h * a2[j]
            u3[j] = x3[j] + 0.5 * h * a3[j]
        if not _frame_rates(d1, d2, T_f, gm, floor, u2, u3, b2, b3):
            return 2, gm
        for j in range(3):
            u2[j] = x2[j] + 0.5 * h * b2[j]
            u3[j] = x3[j] + 0.5 * h * b3[j]
        if not _frame_rates(d1, d2, T_f, gm, floor, u2, u3, c2, c3):
            return 2, gm
        for j in range(3):
            u2[j] = x2[j] + h * c2[j]
            u3[j] = x3[j] + h * c3[j]
        if not _frame_rates(d1, d2, T_f, g1, floor, u2, u3, e2, e3):
            return 2, g1
        for j in range(3):
            x2[j] = x2[j] + h / 6.0 * (a2[j] + 2.0 * b2[j] + 2.0 * c2[j] + e2[j])
            x3[j] = x3[j] + h / 6.0 * (a3[j] + 2.0 * b3[j] + 2.0 * c3[j] + e3[j])
        if not _unit_tangent_rate(d1, d2, T_f, g1, floor, t1, dt1):
            return 2, g1
        d = t1[0] * x2[0] + t1[1] * x2[1] + t1[2] * x2[2]
        for j in range(3):
            x2[j] = x2[j] - d * t1[j]
        nn = math.sqrt(x2[0] * x2[0] + x2[1] * x2[1] + x2[2] * x2[2])
        for j in range(3):
            x2[j] = x2[j] / nn
        y0 = t1[1] * x2[2] - t1[2] * x2[1]
        y1 = t1[2] * x2[0] - t1[0] * x2[2]
        y2 = t1[0] * x2[1] - t1[1] * x2[0]
        if y0 * x3[0] + y1 * x3[1] + y2 * x3[2] < 0.0:
            return 3, g1
        x3[0] = y0
        x3[1] = y1
        x3[2] = y2
    for j in range(3):
        t2[j] = x2[j]
        t3[j] = x3[j]
    return 0, g_end
