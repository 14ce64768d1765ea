"""Pure-Python Dormand-Prince 5(4) orbit kernel.

Mirrors ``_orbitcore.pyx`` step for step so both back ends produce the same
trajectories up to rounding.  The integrator works on plain lists of floats;
for the low-dimensional Hamiltonian systems here that is faster than numpy.
"""

import math

# Dormand-Prince tableau
C2, C3, C4, C5 = 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0
A21 = 1.0 / 5.0
A31, A32 = 3.0 / 40.0, 9.0 / 40.0
A41, A42, A43 = 44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0
A51, A52, A53, A54 = 19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0
A61, A62, A63, A64, A65 = 9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0
A71, A73, A74, A75, A76 = 35.0 / 384.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0
E1, E3, E4, E5, E6, E7 = (
    71.0 / 57600.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
)
D1, D3, D4, D5, D6, D7 = (
    -12715105075.0 / 11282082432.0,
    87487479700.0 / 32700410799.0,
    -10690763975.0 / 1880347072.0,
    701980252875.0 / 199316789632.0,
    -1453857185.0 / 822651844.0,
    69997945.0 / 29380423.0,
)

STATUS_OK = 0
STATUS_UNDERFLOW = 1
STATUS_MAX_STEPS = 2
EPS = 2.220446049250313e-16


def radial_rhs(params):
    """Right-hand side of the Hamilton equations for a built-in radial model."""
    n = int(params[0])
    mk, me, mp = int(params[1]), params[2], params[3]
    pk, pe, pp = int(params[4]), params[5], params[6]
    tk = int(params[7])
    exp = math.exp

    def prof0(kind, p, s):
        if kind == 1:
            return exp(-s)
        if kind == 2:
            return (1.0 + s) ** p
        if kind == 3:
            return s
        return 0.0

    def prof1(kind, p, s):
        if kind == 1:
            return -exp(-s)
        if kind == 2:
            return p * (1.0 + s) ** (p - 1.0)
        if kind == 3:
            return 1.0
        return 0.0

    def rhs(t, y):
        s = 0.0
        xi2 = 0.0
        for i in range(n):
            s += y[i] * y[i]
            xi2 += y[n + i] * y[n + i]
        if tk == 1:
            mod = 1.0 + 0.5 * math.sin(t)
        elif tk == 2:
            mod = 1.0 + 0.5 * math.cos(t)
        else:
            mod = 1.0
        a = 1.0 + mod * me * prof0(mk, mp, s)
        g = 0.5 * (mod * me * 2.0 * prof1(mk, mp, s)) * xi2 + mod * pe * 2.0 * prof1(pk, pp, s)
        return [a * y[n + i] for i in range(n)] + [-g * y[i] for i in range(n)]

    return rhs


def _rms(v, sk):
    acc = 0.0
    for a, b in zip(v, sk):
        q = a / b
        acc += q * q
    return math.sqrt(acc / len(v))


def initial_step(rhs, t0, y0, f0, direction, span, rtol, atol):
    sk = [atol + rtol * abs(v) for v in y0]
    d0 = _rms(y0, sk)
    d1 = _rms(f0, sk)
    if d0 < 1e-5 or d1 < 1e-5:
        h0 = 1e-6
    else:
        h0 = 0.01 * d0 / d1
    h0 = min(h0, span)
    y1 = [a + direction * h0 * b for a, b in zip(y0, f0)]
    f1 = rhs(t0 + direction * h0, y1)
    d2 = _rms([a - b for a, b in zip(f1, f0)], sk) / h0
    big = max(d1, d2)
    if big <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / big) ** 0.2
    return min(100.0 * h0, h1, span)


def integrate(rhs, t0, y0, s_eval, rtol=1e-10, atol=1e-12, max_steps=1_000_000):
    """Integrate ``y' = rhs(t, y)`` from ``t0`` through the sorted times ``s_eval``.

    ``s_eval`` must be monotone in the integration direction and start at or
    after ``t0``.  Returns ``(outputs, nsteps, nfev, status, s_fail)``.
    """
    dim = len(y0)
    y = [float(v) for v in y0]
    nout = len(s_eval)
    out = [None] * nout
    t = float(t0)
    t_end = float(s_eval[-1]) if nout else t
    direction = 1.0 if t_end >= t else -1.0
    i_out = 0
    while i_out < nout and s_eval[i_out] == t:
        out[i_out] = list(y)
        i_out += 1
    nsteps = nfev = 0
    if i_out == nout:
        return out, nsteps, nfev, STATUS_OK, t
    k1 = rhs(t, y)
    nfev += 1
    h = initial_step(rhs, t, y, k1, direction, abs(t_end - t), rtol, atol)
    nfev += 1
    reject = False
    while i_out < nout:
        if nsteps >= max_steps:
            return out, nsteps, nfev, STATUS_MAX_STEPS, t
        if 0.1 * abs(h) <= abs(t) * EPS * 16.0 or h < 1e-300:
            return out, nsteps, nfev, STATUS_UNDERFLOW, t
        # land exactly on the next output time
        t_stop = s_eval[i_out]
        h_free = h
        if (abs(t_stop - t) - h) <= 0.0:
            h = abs(t_stop - t)
            last = True
        else:
            last = False
        hs = direction * h
        yt = [y[i] + hs * A21 * k1[i] for i in range(dim)]
        k2 = rhs(t + C2 * hs, yt)
        yt = [y[i] + hs * (A31 * k1[i] + A32 * k2[i]) for i in range(dim)]
        k3 = rhs(t + C3 * hs, yt)
        yt = [y[i] + hs * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]) for i in range(dim)]
        k4 = rhs(t + C4 * hs, yt)
        yt = [y[i] + hs * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]) for i in range(dim)]
        k5 = rhs(t + C5 * hs, yt)
        yt = [
            y[i] + hs * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i])
            for i in range(dim)
        ]
        k6 = rhs(t + hs, yt)
        ynew = [
            y[i] + hs * (A71 * k1[i] + A73 * k3[i] + A74 * k4[i] + A75 * k5[i] + A76 * k6[i])
            for i in range(dim)
        ]
        tnew = t_stop if last else t + hs
        k7 = rhs(tnew, ynew)
        nfev += 6
        nsteps += 1
        err = 0.0
        for i in range(dim):
            ei = hs * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i])
            sk = atol + rtol * max(abs(y[i]), abs(ynew[i]))
            q = ei / sk
            err += q * q
        err = math.sqrt(err / dim)
        if err != err:
            return out, nsteps, nfev, STATUS_UNDERFLOW, t
        if err <= 1.0:
            if i_out < nout and (s_eval[i_out] - tnew) * direction <= 0.0:
                r2 = [ynew[i] - y[i] for i in range(dim)]
                r3 = [hs * k1[i] - r2[i] for i in range(dim)]
                r4 = [r2[i] - hs * k7[i] - r3[i] for i in range(dim)]
                r5 = [
                    hs * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i])
                    for i in range(dim)
                ]
                while i_out < nout and (s_eval[i_out] - tnew) * direction <= 0.0:
                    s = s_eval[i_out]
                    if s == tnew:
                        out[i_out] = list(ynew)
                    else:
                        th = (s - t) / hs
                        th1 = 1.0 - th
                        out[i_out] = [
                            y[i] + th * (r2[i] + th1 * (r3[i] + th * (r4[i] + th1 * r5[i])))
                            for i in range(dim)
                        ]
                    i_out += 1
            t = tnew
            y = ynew
            k1 = k7
            if err == 0.0:
                fac = 5.0
            else:
                fac = min(5.0, max(0.2, 0.9 * err ** -0.2))
            if reject:
                fac = min(fac, 1.0)
            reject = False
            h = max(h * fac, h_free) if last else h * fac
        else:
            h = h * max(0.2, 0.9 * err ** -0.2)
            reject = True
    return out, nsteps, nfev, STATUS_OK, t


def integrate_params(params, t0, y0, s_eval, rtol=1e-10, atol=1e-12, max_steps=1_000_000):
    return integrate(radial_rhs(params), t0, list(y0), list(s_eval), rtol, atol, max_steps)


def integrate_batch(params, t0, Y0, t_end, rtol=1e-10, atol=1e-12, max_steps=1_000_000):
    """Endpoints at ``t_end`` for many initial states (rows of ``Y0``)."""
    rhs = radial_rhs(params)
    ends, status, s_fail, total = [], [], [], 0
    for y0 in Y0:
        out, nsteps, _, st, sf = integrate(rhs, t0, list(y0), [t_end], rtol, atol, max_steps)
        ends.append(out[0] if out[0] is not None else [math.nan] * len(y0))
        status.append(st)
        s_fail.append(sf)
        total += nsteps
    return ends, status, s_fail, total
