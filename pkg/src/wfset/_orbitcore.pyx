# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled Dormand-Prince 5(4) orbit kernel for the built-in radial models.

Same algorithm and operation order as ``_orbit_py``; the integration loop runs
without the GIL so thread pools can sweep orbits in parallel.
"""

from libc.math cimport exp, pow, sin, cos, fabs, sqrt, isnan
from libc.stdlib cimport malloc, free

import numpy as np

cdef double C2 = 1.0 / 5.0, C3 = 3.0 / 10.0, C4 = 4.0 / 5.0, C5 = 8.0 / 9.0
cdef double A21 = 1.0 / 5.0
cdef double A31 = 3.0 / 40.0, A32 = 9.0 / 40.0
cdef double A41 = 44.0 / 45.0, A42 = -56.0 / 15.0, A43 = 32.0 / 9.0
cdef double A51 = 19372.0 / 6561.0, A52 = -25360.0 / 2187.0, A53 = 64448.0 / 6561.0, A54 = -212.0 / 729.0
cdef double A61 = 9017.0 / 3168.0, A62 = -355.0 / 33.0, A63 = 46732.0 / 5247.0
cdef double A64 = 49.0 / 176.0, A65 = -5103.0 / 18656.0
cdef double A71 = 35.0 / 384.0, A73 = 500.0 / 1113.0, A74 = 125.0 / 192.0
cdef double A75 = -2187.0 / 6784.0, A76 = 11.0 / 84.0
cdef double E1 = 71.0 / 57600.0, E3 = -71.0 / 16695.0, E4 = 71.0 / 1920.0
cdef double E5 = -17253.0 / 339200.0, E6 = 22.0 / 525.0, E7 = -1.0 / 40.0
cdef double D1 = -12715105075.0 / 11282082432.0, D3 = 87487479700.0 / 32700410799.0
cdef double D4 = -10690763975.0 / 1880347072.0, D5 = 701980252875.0 / 199316789632.0
cdef double D6 = -1453857185.0 / 822651844.0, D7 = 69997945.0 / 29380423.0
cdef double EPS = 2.220446049250313e-16

cdef enum:
    MAXDIM = 64

cdef struct Model:
    int n
    int mk
    double me
    double mp
    int pk
    double pe
    double pp
    int tk


cdef inline double prof0(int kind, double p, double s) noexcept nogil:
    if kind == 1:
        return exp(-s)
    elif kind == 2:
        return pow(1.0 + s, p)
    elif kind == 3:
        return s
    return 0.0


cdef inline double prof1(int kind, double p, double s) noexcept nogil:
    if kind == 1:
        return -exp(-s)
    elif kind == 2:
        return p * pow(1.0 + s, p - 1.0)
    elif kind == 3:
        return 1.0
    return 0.0


cdef void rhs(Model* m, double t, double* y, double* f) noexcept nogil:
    cdef int n = m.n
    cdef int i
    cdef double s = 0.0, xi2 = 0.0, mod, a, g
    for i in range(n):
        s += y[i] * y[i]
        xi2 += y[n + i] * y[n + i]
    if m.tk == 1:
        mod = 1.0 + 0.5 * sin(t)
    elif m.tk == 2:
        mod = 1.0 + 0.5 * cos(t)
    else:
        mod = 1.0
    a = 1.0 + mod * m.me * prof0(m.mk, m.mp, s)
    g = 0.5 * (mod * m.me * 2.0 * prof1(m.mk, m.mp, s)) * xi2 + mod * m.pe * 2.0 * prof1(m.pk, m.pp, s)
    for i in range(n):
        f[i] = a * y[n + i]
        f[n + i] = -g * y[i]


cdef double rms(double* v, double* sk, int dim) noexcept nogil:
    cdef double acc = 0.0, q
    cdef int i
    for i in range(dim):
        q = v[i] / sk[i]
        acc += q * q
    return sqrt(acc / dim)


cdef double initial_step(Model* m, double t0, double* y0, double* f0, double direction,
                         double span, double rtol, double atol, double* w1, double* w2,
                         double* w3) noexcept nogil:
    cdef int dim = 2 * m.n
    cdef int i
    cdef double d0, d1, d2, h0, h1, big
    for i in range(dim):
        w1[i] = atol + rtol * fabs(y0[i])
    d0 = rms(y0, w1, dim)
    d1 = rms(f0, w1, dim)
    if d0 < 1e-5 or d1 < 1e-5:
        h0 = 1e-6
    else:
        h0 = 0.01 * d0 / d1
    if span < h0:
        h0 = span
    for i in range(dim):
        w2[i] = y0[i] + direction * h0 * f0[i]
    rhs(m, t0 + direction * h0, w2, w3)
    for i in range(dim):
        w2[i] = w3[i] - f0[i]
    d2 = rms(w2, w1, dim) / h0
    big = d1 if d1 > d2 else d2
    if big <= 1e-15:
        h1 = 1e-6 if 1e-6 > h0 * 1e-3 else h0 * 1e-3
    else:
        h1 = pow(0.01 / big, 0.2)
    if 100.0 * h0 < h1:
        h1 = 100.0 * h0
    if span < h1:
        h1 = span
    return h1


cdef int integrate_c(Model* m, double t0, double* y0, double* s_eval, int nout, double* out,
                     double rtol, double atol, long max_steps, long* nsteps_out,
                     long* nfev_out, double* s_fail) noexcept nogil:
    """Core loop. ``out`` has room for ``nout * 2n`` doubles. Returns status."""
    cdef int dim = 2 * m.n
    cdef int i, i_out = 0, last, reject = 0
    cdef long nsteps = 0, nfev = 0
    cdef double t = t0, t_end, direction, h, hs, tnew, err, ei, sk, q, fac, th, th1, s, t_stop, h_free
    cdef double buf[16 * MAXDIM]
    cdef double* y = buf
    cdef double* yt = buf + dim
    cdef double* ynew = buf + 2 * dim
    cdef double* k1 = buf + 3 * dim
    cdef double* k2 = buf + 4 * dim
    cdef double* k3 = buf + 5 * dim
    cdef double* k4 = buf + 6 * dim
    cdef double* k5 = buf + 7 * dim
    cdef double* k6 = buf + 8 * dim
    cdef double* k7 = buf + 9 * dim
    cdef double* r2 = buf + 10 * dim
    cdef double* r3 = buf + 11 * dim
    cdef double* r4 = buf + 12 * dim
    cdef double* r5 = buf + 13 * dim
    cdef double* tmp
    for i in range(dim):
        y[i] = y0[i]
    if nout > 0:
        t_end = s_eval[nout - 1]
    else:
        t_end = t
    direction = 1.0 if t_end >= t else -1.0
    while i_out < nout and s_eval[i_out] == t:
        for i in range(dim):
            out[i_out * dim + i] = y[i]
        i_out += 1
    s_fail[0] = t
    nsteps_out[0] = 0
    nfev_out[0] = 0
    if i_out == nout:
        return 0
    rhs(m, t, y, k1)
    nfev += 1
    h = initial_step(m, t, y, k1, direction, fabs(t_end - t), rtol, atol, r2, r3, r4)
    nfev += 1
    while i_out < nout:
        if nsteps >= max_steps:
            s_fail[0] = t
            nsteps_out[0] = nsteps
            nfev_out[0] = nfev
            return 2
        if 0.1 * fabs(h) <= fabs(t) * EPS * 16.0 or h < 1e-300:
            s_fail[0] = t
            nsteps_out[0] = nsteps
            nfev_out[0] = nfev
            return 1
        # land exactly on the next output time
        t_stop = s_eval[i_out]
        h_free = h
        if (fabs(t_stop - t) - h) <= 0.0:
            h = fabs(t_stop - t)
            last = 1
        else:
            last = 0
        hs = direction * h
        for i in range(dim):
            yt[i] = y[i] + hs * A21 * k1[i]
        rhs(m, t + C2 * hs, yt, k2)
        for i in range(dim):
            yt[i] = y[i] + hs * (A31 * k1[i] + A32 * k2[i])
        rhs(m, t + C3 * hs, yt, k3)
        for i in range(dim):
            yt[i] = y[i] + hs * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i])
        rhs(m, t + C4 * hs, yt, k4)
        for i in range(dim):
            yt[i] = y[i] + hs * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i])
        rhs(m, t + C5 * hs, yt, k5)
        for i in range(dim):
            yt[i] = y[i] + hs * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i])
        rhs(m, t + hs, yt, k6)
        for i in range(dim):
            ynew[i] = y[i] + hs * (A71 * k1[i] + A73 * k3[i] + A74 * k4[i] + A75 * k5[i] + A76 * k6[i])
        tnew = t_stop if last else t + hs
        rhs(m, tnew, ynew, k7)
        nfev += 6
        nsteps += 1
        err = 0.0
        for i in range(dim):
            ei = hs * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i])
            sk = atol + rtol * (fabs(y[i]) if fabs(y[i]) > fabs(ynew[i]) else fabs(ynew[i]))
            q = ei / sk
            err += q * q
        err = sqrt(err / dim)
        if isnan(err):
            s_fail[0] = t
            nsteps_out[0] = nsteps
            nfev_out[0] = nfev
            return 1
        if err <= 1.0:
            if i_out < nout and (s_eval[i_out] - tnew) * direction <= 0.0:
                for i in range(dim):
                    r2[i] = ynew[i] - y[i]
                for i in range(dim):
                    r3[i] = hs * k1[i] - r2[i]
                for i in range(dim):
                    r4[i] = r2[i] - hs * k7[i] - r3[i]
                for i in range(dim):
                    r5[i] = hs * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i])
                while i_out < nout and (s_eval[i_out] - tnew) * direction <= 0.0:
                    s = s_eval[i_out]
                    if s == tnew:
                        for i in range(dim):
                            out[i_out * dim + i] = ynew[i]
                    else:
                        th = (s - t) / hs
                        th1 = 1.0 - th
                        for i in range(dim):
                            out[i_out * dim + i] = y[i] + th * (r2[i] + th1 * (r3[i] + th * (r4[i] + th1 * r5[i])))
                    i_out += 1
            t = tnew
            tmp = y
            y = ynew
            ynew = tmp
            tmp = k1
            k1 = k7
            k7 = tmp
            if err == 0.0:
                fac = 5.0
            else:
                fac = 0.9 * pow(err, -0.2)
                if fac < 0.2:
                    fac = 0.2
                if fac > 5.0:
                    fac = 5.0
            if reject and fac > 1.0:
                fac = 1.0
            reject = 0
            h = h * fac
            if last and h < h_free:
                h = h_free
        else:
            fac = 0.9 * pow(err, -0.2)
            if fac < 0.2:
                fac = 0.2
            h = h * fac
            reject = 1
    s_fail[0] = t
    nsteps_out[0] = nsteps
    nfev_out[0] = nfev
    return 0


cdef Model unpack(double[:] params):
    cdef Model m
    m.n = <int> params[0]
    m.mk = <int> params[1]
    m.me = params[2]
    m.mp = params[3]
    m.pk = <int> params[4]
    m.pe = params[5]
    m.pp = params[6]
    m.tk = <int> params[7]
    if m.n < 1 or m.n > MAXDIM // 2:
        raise ValueError("dimension out of range for the compiled kernel")
    return m


def integrate_params(params, double t0, y0, s_eval, double rtol=1e-10, double atol=1e-12,
                     long max_steps=1000000):
    """Integrate a built-in radial model; see ``_orbit_py.integrate``."""
    cdef double[:] p = np.ascontiguousarray(params, dtype=np.float64)
    cdef Model m = unpack(p)
    cdef double[:] y = np.ascontiguousarray(y0, dtype=np.float64)
    cdef double[:] se = np.ascontiguousarray(s_eval, dtype=np.float64)
    cdef int nout = se.shape[0]
    out_arr = np.full((max(nout, 1), 2 * m.n), np.nan)
    cdef double[:, ::1] out = out_arr
    cdef long nsteps = 0, nfev = 0
    cdef double s_fail = t0
    cdef int status
    if y.shape[0] != 2 * m.n:
        raise ValueError("state dimension mismatch")
    with nogil:
        status = integrate_c(&m, t0, &y[0], &se[0] if nout > 0 else NULL, nout, &out[0, 0],
                             rtol, atol, max_steps, &nsteps, &nfev, &s_fail)
    return out_arr[:nout], nsteps, nfev, status, s_fail


def integrate_batch(params, double t0, Y0, double t_end, double rtol=1e-10, double atol=1e-12,
                    long max_steps=1000000):
    """Endpoints at ``t_end`` for each row of ``Y0``."""
    cdef double[:] p = np.ascontiguousarray(params, dtype=np.float64)
    cdef Model m = unpack(p)
    cdef double[:, ::1] Y = np.ascontiguousarray(Y0, dtype=np.float64)
    cdef Py_ssize_t M = Y.shape[0], j
    ends_arr = np.full((M, 2 * m.n), np.nan)
    status_arr = np.zeros(M, dtype=np.int64)
    fail_arr = np.zeros(M)
    cdef double[:, ::1] ends = ends_arr
    cdef long[:] status = status_arr
    cdef double[:] s_fail = fail_arr
    cdef double se = t_end
    cdef long nsteps = 0, nfev = 0, total = 0
    if M and Y.shape[1] != 2 * m.n:
        raise ValueError("state dimension mismatch")
    with nogil:
        for j in range(M):
            status[j] = integrate_c(&m, t0, &Y[j, 0], &se, 1, &ends[j, 0], rtol, atol, max_steps,
                                    &nsteps, &nfev, &s_fail[j])
            total += nsteps
    return ends_arr, status_arr, fail_arr, total
