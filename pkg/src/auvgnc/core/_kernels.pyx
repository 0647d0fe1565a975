# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled substep kernel; see _kernels_py for the reference implementation."""
from libc.math cimport exp, sqrt, fabs, isfinite

cdef enum:
    NSTATE = 15
    MAXPTS = 64
    NPARAM_C = 20

NCOL = 14
NPARAM = NPARAM_C


cdef inline double suction(double depth, double F0, double dref, double scale) nogil:
    if depth <= dref:
        return F0
    return F0 * exp(-(depth - dref) / scale)


cdef inline double clip(double x, double lim) nogil:
    if x > lim:
        return lim
    if x < -lim:
        return -lim
    return x


cdef inline void mix(double dv, double dh, double lim, double* f) nogil:
    f[0] = clip(-dv + dh, lim)
    f[1] = clip(-dv - dh, lim)
    f[2] = clip(dv - dh, lim)
    f[3] = clip(dv + dh, lim)
    f[4] = clip(dv, lim)


cdef void autopilot(double cq, double cr, double q, double r, double* ap, double dt,
                    const double* prm, double* dv, double* dh) nogil:
    cdef double lim = prm[9]
    cdef double eq = cq - q
    cdef double er = cr - r
    cdef double Iq = ap[0] + 0.5 * dt * (eq + ap[2])
    cdef double Ir = ap[1] + 0.5 * dt * (er + ap[3])
    cdef double dv_old = prm[5] * eq + prm[7] * ap[0]
    cdef double dh_old = prm[6] * er + prm[8] * ap[1]
    cdef double f[5]
    if fabs(dv_old) >= lim and dv_old * eq > 0.0:
        Iq = ap[0]
    if fabs(dh_old) >= lim and dh_old * er > 0.0:
        mix(dv_old, dh_old, lim, f)
        if fabs(f[0]) >= lim and fabs(f[1]) >= lim and fabs(f[2]) >= lim and fabs(f[3]) >= lim:
            Ir = ap[1]
    ap[0] = Iq
    ap[1] = Ir
    ap[2] = eq
    ap[3] = er
    dv[0] = prm[5] * eq + prm[7] * Iq
    dh[0] = prm[6] * er + prm[8] * Ir


cdef void bezier(const double[:, ::1] ctrl, double s, double* out) nogil:
    cdef int n = ctrl.shape[0]
    cdef double tmp[MAXPTS * 3]
    cdef int i, k
    cdef double u = 1.0 - s
    if n == 0:
        out[0] = 0.0
        out[1] = 0.0
        out[2] = 0.0
        return
    for i in range(n):
        tmp[3 * i] = ctrl[i, 0]
        tmp[3 * i + 1] = ctrl[i, 1]
        tmp[3 * i + 2] = ctrl[i, 2]
    for k in range(1, n):
        for i in range(n - k):
            tmp[3 * i] = u * tmp[3 * i] + s * tmp[3 * i + 3]
            tmp[3 * i + 1] = u * tmp[3 * i + 1] + s * tmp[3 * i + 4]
            tmp[3 * i + 2] = u * tmp[3 * i + 2] + s * tmp[3 * i + 5]
    out[0] = tmp[0]
    out[1] = tmp[1]
    out[2] = tmp[2]


cdef double gamma_rate(const double* x, const double* prm, const double[:, ::1] ctrl,
                       const double[:, ::1] hodo) nogil:
    cdef double T_f = prm[15]
    cdef double g, s, sp, ax, ay, az, rate
    cdef double pd[3]
    cdef double dd[3]
    if ctrl.shape[0] == 0 or T_f <= 0.0:
        return 0.0
    g = x[14]
    s = g / T_f
    if s < 0.0:
        s = 0.0
    elif s > 1.0:
        s = 1.0
    bezier(ctrl, s, pd)
    bezier(hodo, s, dd)
    sp = sqrt(dd[0] * dd[0] + dd[1] * dd[1] + dd[2] * dd[2])
    if sp < prm[19]:
        sp = prm[19]
    ax = prm[0] * x[3] + prm[14] * (x[0] - pd[0])
    ay = prm[0] * x[6] + prm[14] * (x[1] - pd[1])
    az = prm[0] * x[9] + prm[14] * (x[2] - pd[2])
    rate = (ax * dd[0] + ay * dd[1] + az * dd[2]) / (sp * sp)
    if (g >= T_f and rate > 0.0) or (g <= 0.0 and rate < 0.0):
        return 0.0
    return rate


cdef void deriv(const double* x, double dv, double dh, const double* prm,
                const double[:, ::1] ctrl, const double[:, ::1] hodo, double* out) nogil:
    cdef double v = prm[0]
    cdef double q = x[12]
    cdef double r = x[13]
    cdef double r0, r1, r2, wq
    cdef int i
    out[0] = v * x[3]
    out[1] = v * x[6]
    out[2] = v * x[9]
    for i in range(3):
        r0 = x[3 + 3 * i]
        r1 = x[4 + 3 * i]
        r2 = x[5 + 3 * i]
        out[3 + 3 * i] = r * r1 - q * r2
        out[4 + 3 * i] = -r * r0
        out[5 + 3 * i] = q * r0
    wq = prm[13] * suction(-x[2], prm[10], prm[11], prm[12])
    out[12] = (-q + prm[3] * dv + wq) / prm[1]
    out[13] = (-r + prm[4] * dh) / prm[2]
    out[14] = gamma_rate(x, prm, ctrl, hodo)


cdef void reortho(double* x) nogil:
    cdef double c0[3]
    cdef double c1[3]
    cdef double n0, n1, d
    cdef int i
    for i in range(3):
        c0[i] = x[3 + 3 * i]
        c1[i] = x[4 + 3 * i]
    n0 = sqrt(c0[0] * c0[0] + c0[1] * c0[1] + c0[2] * c0[2])
    for i in range(3):
        c0[i] = c0[i] / n0
    d = c0[0] * c1[0] + c0[1] * c1[1] + c0[2] * c1[2]
    for i in range(3):
        c1[i] = c1[i] - d * c0[i]
    n1 = sqrt(c1[0] * c1[0] + c1[1] * c1[1] + c1[2] * c1[2])
    for i in range(3):
        c1[i] = c1[i] / n1
    x[3] = c0[0]
    x[6] = c0[1]
    x[9] = c0[2]
    x[4] = c1[0]
    x[7] = c1[1]
    x[10] = c1[2]
    x[5] = c0[1] * c1[2] - c0[2] * c1[1]
    x[8] = c0[2] * c1[0] - c0[0] * c1[2]
    x[11] = c0[0] * c1[1] - c0[1] * c1[0]


def advance(double[::1] x, double[::1] ap, const double[::1] cmd, double t0, double dt,
            int nsteps, const double[::1] prm, const double[:, ::1] ctrl,
            const double[:, ::1] hodo, double[:, ::1] out):
    """Advance nsteps substeps with a held command; same contract as the Python kernel."""
    if x.shape[0] != NSTATE or ap.shape[0] != 4 or cmd.shape[0] != 2 or prm.shape[0] != NPARAM_C:
        raise ValueError("bad kernel argument sizes")
    if out.shape[0] < nsteps or out.shape[1] != NCOL:
        raise ValueError("output buffer too small")
    if ctrl.shape[0] > MAXPTS or hodo.shape[0] > MAXPTS:
        raise ValueError("path degree too high for the compiled kernel")
    if ctrl.shape[0] and (ctrl.shape[1] != 3 or hodo.shape[1] != 3):
        raise ValueError("path control points must be N x 3")
    cdef double xs[NSTATE]
    cdef double k1[NSTATE]
    cdef double k2[NSTATE]
    cdef double k3[NSTATE]
    cdef double k4[NSTATE]
    cdef double tmp[NSTATE]
    cdef double apl[4]
    cdef double p[NPARAM_C]
    cdef double fins[5]
    cdef double dvc, dhc, dv, dh, t, cq, cr, T_f
    cdef int i, k
    cdef int status = 0
    cdef bint has_path = ctrl.shape[0] > 0
    for i in range(NSTATE):
        xs[i] = x[i]
    for i in range(4):
        apl[i] = ap[i]
    for i in range(NPARAM_C):
        p[i] = prm[i]
    T_f = p[15]
    with nogil:
        for k in range(nsteps):
            t = t0 + k * dt
            cq = cmd[0]
            cr = cmd[1]
            if t >= p[16]:
                cq += p[17]
                cr += p[18]
            autopilot(cq, cr, xs[12], xs[13], apl, dt, p, &dvc, &dhc)
            mix(dvc, dhc, p[9], fins)
            dv = (-fins[0] - fins[1] + fins[2] + fins[3] + fins[4]) / 5.0
            dh = (fins[0] - fins[1] - fins[2] + fins[3]) / 4.0
            out[k, 0] = t
            out[k, 1] = xs[0]
            out[k, 2] = xs[1]
            out[k, 3] = xs[2]
            out[k, 4] = xs[12]
            out[k, 5] = xs[13]
            for i in range(5):
                out[k, 6 + i] = fins[i]
            out[k, 11] = suction(-xs[2], p[10], p[11], p[12]) if p[13] != 0.0 else 0.0
            out[k, 12] = xs[14]
            out[k, 13] = gamma_rate(xs, p, ctrl, hodo)
            deriv(xs, dv, dh, p, ctrl, hodo, k1)
            for i in range(NSTATE):
                tmp[i] = xs[i] + 0.5 * dt * k1[i]
            deriv(tmp, dv, dh, p, ctrl, hodo, k2)
            for i in range(NSTATE):
                tmp[i] = xs[i] + 0.5 * dt * k2[i]
            deriv(tmp, dv, dh, p, ctrl, hodo, k3)
            for i in range(NSTATE):
                tmp[i] = xs[i] + dt * k3[i]
            deriv(tmp, dv, dh, p, ctrl, hodo, k4)
            for i in range(NSTATE):
                xs[i] = xs[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
            reortho(xs)
            if has_path and T_f > 0.0:
                if xs[14] > T_f:
                    xs[14] = T_f
                elif xs[14] < 0.0:
                    xs[14] = 0.0
            for i in range(NSTATE):
                if not isfinite(xs[i]):
                    status = 1
            if status:
                break
    for i in range(NSTATE):
        x[i] = xs[i]
    for i in range(4):
        ap[i] = apl[i]
    return status


cdef bint unit_tangent_rate(const double[:, ::1] d1, const double[:, ::1] d2, double T_f,
                            double g, double floor, double* t1, double* dt1) nogil:
    cdef double a[3]
    cdef double b[3]
    cdef double sp, d
    cdef double s = g / T_f
    bezier(d1, s, a)
    bezier(d2, s, b)
    sp = sqrt(a[0] * a[0] + a[1] * a[1] + a[2] * a[2])
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


cdef bint frame_rates(const double[:, ::1] d1, const double[:, ::1] d2, double T_f, double g,
                      double floor, const double* a2, const double* a3, double* r2,
                      double* r3) nogil:
    cdef double t1[3]
    cdef double dt1[3]
    cdef double k2, k3
    cdef int i
    if not unit_tangent_rate(d1, d2, T_f, g, floor, t1, dt1):
        return False
    k2 = a2[0] * dt1[0] + a2[1] * dt1[1] + a2[2] * dt1[2]
    k3 = a3[0] * dt1[0] + a3[1] * dt1[1] + a3[2] * dt1[2]
    for i in range(3):
        r2[i] = -k2 * t1[i]
        r3[i] = -k3 * t1[i]
    return True


def transport(const double[:, ::1] d1, const double[:, ::1] d2, double T_f, double g,
              double g_end, int n, double[::1] t2, double[::1] t3, double floor):
    """Same contract as the Python kernel."""
    if d1.shape[0] > MAXPTS or d2.shape[0] > MAXPTS:
        raise ValueError("path degree too high for the compiled kernel")
    if d1.shape[1] != 3 or d2.shape[1] != 3 or t2.shape[0] != 3 or t3.shape[0] != 3:
        raise ValueError("bad kernel argument sizes")
    cdef double a2[3]
    cdef double a3[3]
    cdef double b2[3]
    cdef double b3[3]
    cdef double c2[3]
    cdef double c3[3]
    cdef double e2[3]
    cdef double e3[3]
    cdef double u2[3]
    cdef double u3[3]
    cdef double x2[3]
    cdef double x3[3]
    cdef double t1[3]
    cdef double dt1[3]
    cdef double h, g0, gm, g1, d, nn, y0, y1, y2
    cdef double g_fail = g_end
    cdef int i, j
    cdef int status = 0
    for j in range(3):
        x2[j] = t2[j]
        x3[j] = t3[j]
    h = (g_end - g) / n if n > 0 else 0.0
    with nogil:
        for i in range(n):
            g0 = g + i * h
            gm = g0 + 0.5 * h
            gm = 0.0 if gm < 0.0 else (T_f if gm > T_f else gm)
            if i == n - 1:
                g1 = g_end
            else:
                g1 = g0 + h
                g1 = 0.0 if g1 < 0.0 else (T_f if g1 > T_f else g1)
            if not frame_rates(d1, d2, T_f, g0, floor, x2, x3, a2, a3):
                status = 2
                g_fail = g0
                break
            for j in range(3):
                u2[j] = x2[j] + 0.5 * h * a2[j]
                u3[j] = x3[j] + 0.5 * h * a3[j]
            if not frame_rates(d1, d2, T_f, gm, floor, u2, u3, b2, b3):
                status = 2
                g_fail = gm
                break
            for j in range(3):
                u2[j] = x2[j] + 0.5 * h * b2[j]
                u3[j] = x3[j] + 0.5 * h * b3[j]
            if not frame_rates(d1, d2, T_f, gm, floor, u2, u3, c2, c3):
                status = 2
                g_fail = gm
                break
            for j in range(3):
                u2[j] = x2[j] + h * c2[j]
                u3[j] = x3[j] + h * c3[j]
            if not frame_rates(d1, d2, T_f, g1, floor, u2, u3, e2, e3):
                status = 2
                g_fail = g1
                break
            for j in range(3):
                x2[j] = x2[j] + h / 6.0 * (a2[j] + 2.0 * b2[j] + 2.0 * c2[j] + e2[j])
                x3[j] = x3[j] + h / 6.0 * (a3[j] + 2.0 * b3[j] + 2.0 * c3[j] + e3[j])
            if not unit_tangent_rate(d1, d2, T_f, g1, floor, t1, dt1):
                status = 2
                g_fail = g1
                break
            d = t1[0] * x2[0] + t1[1] * x2[1] + t1[2] * x2[2]
            for j in range(3):
                x2[j] = x2[j] - d * t1[j]
            nn = sqrt(x2[0] * x2[0] + x2[1] * x2[1] + x2[2] * x2[2])
            for j in range(3):
                x2[j] = x2[j] / nn
            y0 = t1[1] * x2[2] - t1[2] * x2[1]
            y1 = t1[2] * x2[0] - t1[0] * x2[2]
            y2 = t1[0] * x2[1] - t1[1] * x2[0]
            if y0 * x3[0] + y1 * x3[1] + y2 * x3[2] < 0.0:
                status = 3
                g_fail = g1
                break
            x3[0] = y0
            x3[1] = y1
            x3[2] = y2
    if status:
        return status, g_fail
    for j in range(3):
        t2[j] = x2[j]
        t3[j] = x3[j]
    return 0, g_end
