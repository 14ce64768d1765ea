"""Hamiltonian orbits of the principal symbol.

Two boundary-value conventions are used:

* terminal data ``(x(t), xi(t)) = (x, xi)``, integrated toward ``s = 0``
  (``solve_bicharacteristics``);
* initial data ``(y(0), eta(0)) = (y - t eta, eta)``, integrated forward to
  ``s = t`` (``forward_orbit_from_shift``).

The adaptive Dormand-Prince integrator in ``_kernels`` is authoritative.  The
Picard scheme is exposed for comparison and uses Chebyshev interpolation for
its nested time integrals.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from numpy.polynomial import Chebyshev

from . import _io, _kernels, _orbit_py
from .coeffs import CoefficientModel, _as_point, hamiltonian, hamiltonian_derivatives
from .errors import DimensionError, FlowError, QuadratureError

RTOL = 1e-10
ATOL = 1e-12
MAX_STEPS = 1_000_000


@dataclass(frozen=True)
class PhasePoint:
    x: np.ndarray
    xi: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "x", np.atleast_1d(np.asarray(self.x, dtype=float)))
        object.__setattr__(self, "xi", np.atleast_1d(np.asarray(self.xi, dtype=float)))
        if self.x.shape != self.xi.shape or self.x.ndim != 1:
            raise DimensionError("x and xi must be vectors of equal length")
        if not (np.all(np.isfinite(self.x)) and np.all(np.isfinite(self.xi))):
            raise ValueError("phase point has non-finite components")

    @property
    def n(self) -> int:
        return self.x.size

    def state(self) -> np.ndarray:
        return np.concatenate([self.x, self.xi])


@dataclass
class Trajectory:
    """Time samples of an orbit with its anchoring condition.

    ``kind`` is ``"terminal"`` when ``anchor`` holds the data at
    ``anchor_time`` for the backward problem, ``"initial"`` for the forward
    problem started at ``s = 0`` and ``"picard"`` for Picard iterates.
    """

    s: np.ndarray
    x: np.ndarray
    xi: np.ndarray
    anchor_time: float
    anchor: PhasePoint
    kind: str = "terminal"
    rtol: float = RTOL
    atol: float = ATOL
    nsteps: int = 0
    nfev: int = 0
    backend: str = ""
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        self.s = np.asarray(self.s, dtype=float)
        if self.s.size > 1 and not np.all(np.diff(self.s) > 0):
            raise ValueError("trajectory samples must be strictly increasing in s")

    def __len__(self):
        return self.s.size

    @property
    def n(self) -> int:
        return self.x.shape[1]

    def point(self, i: int) -> PhasePoint:
        return PhasePoint(self.x[i], self.xi[i])

    def at(self, s: float) -> PhasePoint:
        """Sample at an existing time ``s`` (exact match)."""
        idx = np.flatnonzero(self.s == s)
        if idx.size == 0:
            raise KeyError(f"s = {s} is not a sample time")
        return self.point(int(idx[0]))

    def energy(self, model: CoefficientModel) -> np.ndarray:
        return np.array([hamiltonian(model, si, xi_, ki) for si, xi_, ki in zip(self.s, self.x, self.xi)])

    def metadata(self) -> dict:
        return {
            "kind": self.kind,
            "anchor_time": self.anchor_time,
            "anchor_x": self.anchor.x,
            "anchor_xi": self.anchor.xi,
            "rtol": self.rtol,
            "atol": self.atol,
            "nsteps": self.nsteps,
            "nfev": self.nfev,
            "backend": self.backend,
            **self.extra,
        }

    def to_csv(self, path, meta=None):
        n = self.n
        cols = ["s"] + [f"x{i + 1}" for i in range(n)] + [f"xi{i + 1}" for i in range(n)]
        rows = np.column_stack([self.s, self.x, self.xi])
        head = self.metadata()
        if meta:
            head.update(meta)
        return _io.write_table(path, cols, rows, head)

    @classmethod
    def from_csv(cls, path) -> "Trajectory":
        meta, cols, data = _io.read_table(path)
        n = (len(cols) - 1) // 2
        return cls(
            s=data[:, 0],
            x=data[:, 1 : 1 + n],
            xi=data[:, 1 + n :],
            anchor_time=float(meta["anchor_time"]),
            anchor=PhasePoint(meta["anchor_x"], meta["anchor_xi"]),
            kind=meta.get("kind", "terminal"),
            rtol=float(meta.get("rtol", RTOL)),
            atol=float(meta.get("atol", ATOL)),
            nsteps=int(meta.get("nsteps", 0)),
            nfev=int(meta.get("nfev", 0)),
            backend=meta.get("backend", ""),
        )


# -- integration plumbing --------------------------------------------------------


def _generic_rhs(model: CoefficientModel):
    n = model.n

    def rhs(t, y):
        y = np.asarray(y)
        dxi, dx = hamiltonian_derivatives(model, t, y[:n], y[n:])
        return np.concatenate([dxi, -dx]).tolist()

    return rhs


def _uses_kernel(model: CoefficientModel, backend) -> bool:
    return model.kernel_params() is not None and backend != "generic"


def _run(model, t0, y0, s_eval, rtol, atol, max_steps, backend):
    """Integrate from ``t0`` through ``s_eval`` (monotone away from ``t0``)."""
    if _uses_kernel(model, backend):
        ip, _ = _kernels.get_backend(backend)
        out, nsteps, nfev, status, s_fail = ip(model.kernel_params(), t0, y0, s_eval, rtol, atol, max_steps)
        used = backend or _kernels.backend
    else:
        rows, nsteps, nfev, status, s_fail = _orbit_py.integrate(
            _generic_rhs(model), t0, list(map(float, y0)), list(map(float, s_eval)), rtol, atol, max_steps
        )
        dim = len(y0)
        out = np.array([r if r is not None else [np.nan] * dim for r in rows], dtype=float).reshape(-1, dim)
        used = "generic"
    if status != 0:
        why = "step-size underflow" if status == 1 else "maximum step count reached"
        raise FlowError(f"orbit integration failed at s = {s_fail:.17g}: {why}", s=s_fail)
    return np.asarray(out, dtype=float), int(nsteps), int(nfev), used


def _two_sided(model, t0, state, s_eval, rtol, atol, max_steps, backend):
    """Evaluate at arbitrary ``s_eval`` by integrating each side of ``t0`` separately."""
    s_eval = np.asarray(s_eval, dtype=float)
    out = np.empty((s_eval.size, state.size))
    nsteps = nfev = 0
    used = ""
    for side in (-1.0, 1.0):
        mask = (s_eval <= t0) if side < 0 else (s_eval > t0)
        if not mask.any():
            continue
        idx = np.flatnonzero(mask)
        order = idx[np.argsort(side * s_eval[idx], kind="stable")]
        vals, ns, nf, used = _run(model, t0, state, s_eval[order], rtol, atol, max_steps, backend)
        out[order] = vals
        nsteps += ns
        nfev += nf
    return out, nsteps, nfev, used


def _check_dims(model, *vecs):
    out = []
    for v in vecs:
        v = np.atleast_1d(np.asarray(v, dtype=float))
        if v.shape != (model.n,):
            raise DimensionError(f"expected a vector of length {model.n}, got shape {v.shape}")
        out.append(v)
    return out


def solve_bicharacteristics(
    model: CoefficientModel,
    t_terminal: float,
    x,
    xi,
    s_eval: Sequence[float] | None = None,
    rtol: float = RTOL,
    atol: float = ATOL,
    max_steps: int = MAX_STEPS,
    backend: str | None = None,
) -> Trajectory:
    """Solve Hamilton's equations with terminal data ``(x, xi)`` at ``s = t_terminal``.

    Parameters
    ----------
    s_eval : sequence of float, optional
        Output times.  Defaults to 33 equispaced points between 0 and
        ``t_terminal``.  Times on both sides of ``t_terminal`` are allowed.
    backend : {"cython", "python", "generic"}, optional
        Force a specific integrator; by default the compiled kernel is used
        for built-in models when available.

    Returns
    -------
    Trajectory
        Samples ordered by increasing ``s``.
    """
    x, xi = _check_dims(model, x, xi)
    t_terminal = float(t_terminal)
    if s_eval is None:
        s_eval = np.linspace(min(0.0, t_terminal), max(0.0, t_terminal), 33)
    s_eval = np.unique(np.asarray(s_eval, dtype=float))
    if not np.all(np.isfinite(s_eval)):
        raise ValueError("output times must be finite")
    state = np.concatenate([x, xi])
    out, nsteps, nfev, used = _two_sided(model, t_terminal, state, s_eval, rtol, atol, max_steps, backend)
    n = model.n
    return Trajectory(
        s=s_eval, x=out[:, :n], xi=out[:, n:], anchor_time=t_terminal, anchor=PhasePoint(x, xi),
        kind="terminal", rtol=rtol, atol=atol, nsteps=nsteps, nfev=nfev, backend=used,
    )


def flow_points(
    model: CoefficientModel,
    t0: float,
    X,
    XI,
    s_target: float,
    rtol: float = RTOL,
    atol: float = ATOL,
    max_steps: int = MAX_STEPS,
    backend: str | None = None,
    jobs: int = 1,
):
    """Map many phase points from time ``t0`` to time ``s_target``.

    ``X`` and ``XI`` have shape ``(m, n)``.  Returns ``(X_s, XI_s)``.  Rows are
    independent; with ``jobs > 1`` and the compiled kernel they are split
    across threads (the kernel releases the GIL).
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    XI = np.atleast_2d(np.asarray(XI, dtype=float))
    if X.shape != XI.shape or X.shape[1] != model.n:
        raise DimensionError("phase point arrays must have shape (m, n)")
    Y0 = np.hstack([X, XI])
    m, n = X.shape
    if s_target == t0 or m == 0:
        return X.copy(), XI.copy()
    if _uses_kernel(model, backend):
        _, batch = _kernels.get_backend(backend)
        params = model.kernel_params()

        def work(rows):
            return batch(params, float(t0), Y0[rows], float(s_target), rtol, atol, max_steps)

        chunks = np.array_split(np.arange(m), max(1, min(int(jobs), m)))
        if len(chunks) > 1:
            with ThreadPoolExecutor(len(chunks)) as pool:
                results = list(pool.map(work, chunks))
        else:
            results = [work(chunks[0])]
        ends = np.vstack([r[0] for r in results])
        status = np.concatenate([r[1] for r in results])
        fails = np.concatenate([r[2] for r in results])
        bad = np.flatnonzero(status != 0)
        if bad.size:
            j = int(bad[0])
            raise FlowError(
                f"orbit integration failed for sample {j} at s = {fails[j]:.17g} (status {int(status[j])})",
                s=float(fails[j]),
            )
    else:
        ends = np.empty_like(Y0)
        for j in range(m):
            ends[j] = _run(model, float(t0), Y0[j], [float(s_target)], rtol, atol, max_steps, backend)[0][0]
    return ends[:, :n], ends[:, n:]


def forward_orbit_from_shift(
    model: CoefficientModel, t: float, y, eta, rtol: float = RTOL, atol: float = ATOL,
    max_steps: int = MAX_STEPS, backend: str | None = None,
) -> PhasePoint:
    """Start at ``(y - t eta, eta)`` at ``s = 0`` and return the state at ``s = t``."""
    y, eta = _check_dims(model, y, eta)
    t = float(t)
    if t == 0.0:
        return PhasePoint(y, eta)
    state = np.concatenate([y - t * eta, eta])
    out, _, _, _ = _run(model, 0.0, state, [t], rtol, atol, max_steps, backend)
    n = model.n
    return PhasePoint(out[0, :n], out[0, n:])


def forward_shift_points(model, t, Y, ETA, rtol=RTOL, atol=ATOL, backend=None, jobs=1):
    """Vectorised :func:`forward_orbit_from_shift` over rows of ``Y`` and ``ETA``."""
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    ETA = np.atleast_2d(np.asarray(ETA, dtype=float))
    return flow_points(model, 0.0, Y - t * ETA, ETA, t, rtol, atol, backend=backend, jobs=jobs)


def roundtrip_residual(
    model: CoefficientModel, t: float, y, eta, rtol: float = RTOL, atol: float = ATOL,
    backend: str | None = None,
) -> tuple[float, float]:
    """Forward solve from the shifted start, then back from ``(y(t), eta(t))`` to ``s = 0``.

    Returns ``(|x(0) - (y - t eta)|, |xi(0) - eta|)``.
    """
    y, eta = _check_dims(model, y, eta)
    end = forward_orbit_from_shift(model, t, y, eta, rtol, atol, backend=backend)
    if t == 0.0:
        return 0.0, 0.0
    state = end.state()
    out, _, _, _ = _run(model, float(t), state, [0.0], rtol, atol, MAX_STEPS, backend)
    n = model.n
    return float(np.linalg.norm(out[0, :n] - (y - t * eta))), float(np.linalg.norm(out[0, n:] - eta))


def roundtrip_residuals(model, t, Y, ETA, rtol=RTOL, atol=ATOL, backend=None, jobs=1):
    """Vectorised round trip for rows of ``Y``, ``ETA``; ``t`` may be scalar or per-row."""
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    ETA = np.atleast_2d(np.asarray(ETA, dtype=float))
    T = np.broadcast_to(np.asarray(t, dtype=float), (Y.shape[0],))
    dx = np.zeros(Y.shape[0])
    dxi = np.zeros(Y.shape[0])
    for tv in np.unique(T):
        rows = np.flatnonzero(T == tv)
        if tv == 0.0:
            continue
        y1, e1 = forward_shift_points(model, tv, Y[rows], ETA[rows], rtol, atol, backend, jobs)
        x0, k0 = flow_points(model, tv, y1, e1, 0.0, rtol, atol, backend=backend, jobs=jobs)
        dx[rows] = np.linalg.norm(x0 - (Y[rows] - tv * ETA[rows]), axis=1)
        dxi[rows] = np.linalg.norm(k0 - ETA[rows], axis=1)
    return dx, dxi


def roundtrip_reference_set(n: int = 1):
    """125 reference samples ``(t, y, eta)``: 5 positions, 5 covectors, 5 times."""
    ys = np.linspace(-1.0, 1.0, 5)
    etas = np.linspace(0.5, 2.5, 5)
    ts = np.linspace(0.25, 1.25, 5)
    rng_dir = np.zeros(n)
    rng_dir[0] = 1.0
    T, Yv, Ev = [], [], []
    for t in ts:
        for y in ys:
            for e in etas:
                T.append(t)
                Yv.append(y * rng_dir + 0.1 * (n > 1) * np.roll(rng_dir, 1))
                Ev.append(e * rng_dir)
    return np.array(T), np.array(Yv), np.array(Ev)


def shift_deviation(model, t, y, eta, lambdas, rtol=RTOL, atol=ATOL, backend=None):
    """``|y(t; t, y, lam eta) - y|`` and ``|eta(t; t, y, lam eta) - lam eta|`` per ``lam``."""
    y, eta = _check_dims(model, y, eta)
    lambdas = np.asarray(lambdas, dtype=float)
    Y = np.tile(y, (lambdas.size, 1))
    ETA = lambdas[:, None] * eta
    y1, e1 = forward_shift_points(model, t, Y, ETA, rtol, atol, backend)
    return np.linalg.norm(y1 - Y, axis=1), np.linalg.norm(e1 - ETA, axis=1)


# -- Picard iteration ------------------------------------------------------------


def _cheb_nodes(deg, domain):
    k = np.arange(deg + 1)
    u = np.cos(np.pi * (k + 0.5) / (deg + 1))
    return u, domain[0] + (u + 1.0) * 0.5 * (domain[1] - domain[0])


def _cheb_fit(values_at_nodes, u, deg, domain):
    """Component-wise Chebyshev interpolants from values at first-kind points ``u``."""
    V = np.polynomial.chebyshev.chebvander(u, deg)
    coef = V.T @ values_at_nodes * (2.0 / (deg + 1))
    coef[0] *= 0.5
    return [Chebyshev(coef[:, j], domain=domain) for j in range(values_at_nodes.shape[1])]


def _tail(series_list) -> float:
    worst = 0.0
    for c in series_list:
        coef = np.abs(c.coef)
        scale = max(coef.max(), 1e-300)
        worst = max(worst, coef[-4:].max() / scale)
    return worst


def picard_iterates(
    model: CoefficientModel,
    t0: float,
    x,
    xi,
    lam: float,
    N: int,
    s_eval: Sequence[float] | None = None,
    s_end: float | None = None,
    tol: float = 1e-13,
    max_degree: int = 4096,
) -> list[Trajectory]:
    """Picard iterates ``(x_k, xi_k)``, ``k = 0..N``, for terminal data ``(x, lam xi)`` at ``t0``.

    ``x_0(s) = x + lam (s - t0) xi`` and ``xi_0(s) = lam xi``; each further
    iterate is built from the previous one by the integral equations

        xi_k(s) = lam xi - int_{t0}^s [1/2 grad a_jk(x_{k-1}) xi_{k-1,j} xi_{k-1,k} + grad V(x_{k-1})]
        x_k(s)  = x + int_{t0}^s xi_k + int_{t0}^s (A(x_{k-1}) - I) xi_{k-1}

    The time integrals are exact integrals of Chebyshev interpolants whose
    degree is doubled until the trailing coefficients fall below ``tol``.

    Parameters
    ----------
    s_end : float, optional
        Other end of the time interval; defaults to ``t0 - |t0|``.
    s_eval : sequence of float, optional
        Output times inside the interval (33 equispaced points by default).
    """
    x, xi = _check_dims(model, x, xi)
    if N < 0:
        raise ValueError("N must be nonnegative")
    if lam < 1:
        raise ValueError("lambda must be at least 1")
    t0 = float(t0)
    s_end = t0 - abs(t0) if s_end is None else float(s_end)
    lo, hi = min(s_end, t0), max(s_end, t0)
    if s_eval is None:
        s_eval = np.linspace(lo, hi, 33)
    s_eval = np.unique(np.asarray(s_eval, dtype=float))
    if s_eval.size and (s_eval[0] < lo - 1e-15 or s_eval[-1] > hi + 1e-15):
        raise ValueError("output times must lie between s_end and t0")
    n = model.n
    p0 = lam * xi

    def traj(xv, kv, k, deg):
        return Trajectory(s=s_eval, x=xv, xi=kv, anchor_time=t0, anchor=PhasePoint(x, p0),
                          kind="picard", extra={"iterate": k, "lambda": lam, "degree": deg})

    if hi == lo:
        xs = np.tile(x, (s_eval.size, 1))
        return [traj(xs, np.tile(p0, (s_eval.size, 1)), k, 0) for k in range(N + 1)]

    # iterate 0 is a polynomial of degree one, exact in any basis
    def x_prev(s):
        return x[None, :] + lam * (np.asarray(s)[:, None] - t0) * xi[None, :]

    def xi_prev(s):
        return np.tile(p0, (np.size(s), 1))

    out = [traj(x_prev(s_eval), xi_prev(s_eval), 0, 1)]
    domain = [lo, hi]
    for k in range(1, N + 1):
        deg = 32
        while True:
            u, nodes = _cheb_nodes(deg, domain)
            xs, ks = x_prev(nodes), xi_prev(nodes)
            dA = np.stack([model.metric_gradient(s, xx) for s, xx in zip(nodes, xs)])  # (m, l, j, k)
            dV = np.stack([model.potential_gradient(s, xx) for s, xx in zip(nodes, xs)])
            A = np.stack([model.metric(s, xx) for s, xx in zip(nodes, xs)])
            force = 0.5 * np.einsum("mljk,mj,mk->ml", dA, ks, ks) + dV
            drift = np.einsum("mjk,mk->mj", A - np.eye(n), ks)
            f_series = _cheb_fit(force, u, deg, domain)
            d_series = _cheb_fit(drift, u, deg, domain)
            if max(_tail(f_series), _tail(d_series)) <= tol or deg >= max_degree:
                break
            deg *= 2
        if max(_tail(f_series), _tail(d_series)) > max(tol, 1e-9):
            raise QuadratureError(
                f"Picard iterate {k}: Chebyshev interpolation did not resolve the integrand at degree {deg}"
            )
        F = [c.integ(lbnd=t0) for c in f_series]
        D = [c.integ(lbnd=t0) for c in d_series]
        # xi_k = lam xi - int force ; int xi_k = lam (s - t0) xi - int int force
        FF = [c.integ(lbnd=t0) for c in F]

        def xi_new(s, F=F):
            s = np.asarray(s, dtype=float)
            return p0[None, :] - np.column_stack([c(s) for c in F])

        def x_new(s, FF=FF, D=D):
            s = np.asarray(s, dtype=float)
            return (x[None, :] + lam * (s[:, None] - t0) * xi[None, :]
                    - np.column_stack([c(s) for c in FF]) + np.column_stack([c(s) for c in D]))

        out.append(traj(x_new(s_eval), xi_new(s_eval), k, deg))
        x_prev, xi_prev = x_new, xi_new
    return out


# -- bound report ------------------------------------------------------------------


def cone_directions(xi0, gamma: float, count: int = 5) -> np.ndarray:
    """Unit directions inside the cone ``cos angle(xi, xi0) > 1 - gamma``.

    One direction in 1D.  In higher dimensions the axis plus tilts by
    ``theta_max * j / (m + 1)`` toward each orthogonal complement vector,
    where ``theta_max = arccos(1 - gamma)`` and ``2 m + 1 = count``.
    """
    xi0 = np.atleast_1d(np.asarray(xi0, dtype=float))
    nrm = np.linalg.norm(xi0)
    if nrm == 0:
        raise ValueError("cone axis must be nonzero")
    if not 0 < gamma < 1:
        raise ValueError("cone parameter gamma must lie in (0, 1)")
    e = xi0 / nrm
    n = e.size
    if n == 1:
        return e[None, :]
    q, _ = np.linalg.qr(np.column_stack([e, np.eye(n)]))
    complement = q[:, 1:n].T
    theta_max = math.acos(1.0 - gamma)
    m = max(1, (count - 1) // 2)
    dirs = [e]
    for v in complement:
        for j in range(1, m + 1):
            th = theta_max * j / (m + 1)
            dirs.append(math.cos(th) * e + math.sin(th) * v)
            dirs.append(math.cos(th) * e - math.sin(th) * v)
    return np.array(dirs)


def ball_points(x0, r: float, per_axis: int = 5) -> np.ndarray:
    """Interior lattice of the ball ``B_r(x0)``: ``per_axis`` points per axis, clipped to the ball."""
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    if r <= 0:
        raise ValueError("radius must be positive")
    ticks = r * np.linspace(-1.0, 1.0, per_axis + 2)[1:-1]
    grids = np.meshgrid(*([ticks] * x0.size), indexing="ij")
    pts = np.stack([g.ravel() for g in grids], axis=1)
    pts = pts[np.linalg.norm(pts, axis=1) < r]
    return x0[None, :] + pts


def phase_lattice(x0, r, xi0, gamma, a, per_axis=5, directions=5, radii=3) -> tuple[np.ndarray, np.ndarray]:
    """Sample lattice of ``K x Gamma x [1/a, a]`` as arrays ``(X, XI)`` of shape ``(m, n)``."""
    if a < 1:
        raise ValueError("annulus bound a must be at least 1")
    K = ball_points(x0, r, per_axis)
    dirs = cone_directions(xi0, gamma, directions)
    mags = np.geomspace(1.0 / a, a, radii) if radii > 1 else np.array([1.0])
    X, XI = [], []
    for x in K:
        for d in dirs:
            for m in mags:
                X.append(x)
                XI.append(m * d)
    if not X:
        raise ValueError("empty sample lattice")
    return np.array(X), np.array(XI)


@dataclass
class BoundReport:
    """Outcome of the two-sided orbit bounds over a lambda grid.

    Ratios are ``(1 + |x(s)|) / (lam w(s - t0) |xi|)`` for the position bound and
    ``|xi(s)| / (lam |xi|)`` for the momentum bound; the bounds hold iff the
    lower position ratio is ``>= 1/2``, the upper one ``<= 2`` and the
    momentum ratios lie in ``[1/2, 2]``.
    """

    lambdas: np.ndarray
    position_min: np.ndarray
    position_max: np.ndarray
    momentum_min: np.ndarray
    momentum_max: np.ndarray
    passed_at: np.ndarray
    lambda0: float | None
    violation: dict | None
    lower_weight: str
    samples: int
    times: np.ndarray

    @property
    def passed(self) -> bool:
        return self.lambda0 is not None

    def to_dict(self) -> dict:
        return {
            "lambdas": self.lambdas,
            "position_ratio_min": self.position_min,
            "position_ratio_max": self.position_max,
            "momentum_ratio_min": self.momentum_min,
            "momentum_ratio_max": self.momentum_max,
            "passed_at": self.passed_at,
            "lambda0": self.lambda0,
            "passed": self.passed,
            "violation": self.violation,
            "lower_weight": self.lower_weight,
            "samples": self.samples,
            "times": self.times,
        }


def orbit_bound_report(
    model: CoefficientModel,
    t0: float,
    x0=0.0,
    r: float = 1.0,
    xi0=1.0,
    gamma: float = 0.5,
    a: float = 1.5,
    lambdas: Sequence[float] | None = None,
    per_axis: int = 5,
    directions: int = 5,
    radii: int = 3,
    times: int = 9,
    lower_weight: str = "abs",
    rtol: float = RTOL,
    atol: float = ATOL,
    backend: str | None = None,
    jobs: int = 1,
) -> BoundReport:
    """Check the two-sided position and momentum bounds on a sample lattice.

    Parameters
    ----------
    lower_weight : {"abs", "bracket"}
        Weight in the lower position bound: ``|s - t0|`` (default) or
        ``<s - t0>``.  The bracket version cannot hold near ``s = t0`` once
        ``lam |xi|`` exceeds ``2 (1 + |x|)``, since ``x(t0) = x`` is fixed.

    Returns
    -------
    BoundReport
        ``lambda0`` is the smallest grid value from which every larger grid
        value passes, or ``None``.
    """
    if lower_weight not in ("abs", "bracket"):
        raise ValueError("lower_weight must be 'abs' or 'bracket'")
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    xi0 = np.atleast_1d(np.asarray(xi0, dtype=float))
    if x0.size != model.n or xi0.size != model.n:
        raise DimensionError("x0 and xi0 must match the model dimension")
    if lambdas is None:
        lambdas = 2.0 ** np.arange(0, 11)
    lambdas = np.asarray(sorted(lambdas), dtype=float)
    X, XI = phase_lattice(x0, r, xi0, gamma, a, per_axis, directions, radii)
    t0 = float(t0)
    svals = np.linspace(t0 - abs(t0), t0, times) if times > 1 else np.array([t0])
    svals = np.unique(svals)
    xi_norm = np.linalg.norm(XI, axis=1)

    pmin, pmax, kmin, kmax, ok = [], [], [], [], []
    first_violation = {}
    for lam in lambdas:
        lo_r, hi_r, klo, khi = np.inf, 0.0, np.inf, 0.0
        bad = None
        for s in svals:
            Xs, Ks = flow_points(model, t0, X, lam * XI, s, rtol, atol, backend=backend, jobs=jobs)
            mid = 1.0 + np.linalg.norm(Xs, axis=1)
            d = abs(s - t0)
            w_up = math.sqrt(1.0 + d * d)
            w_lo = d if lower_weight == "abs" else w_up
            with np.errstate(divide="ignore"):
                ratio_lo = mid / (lam * w_lo * xi_norm) if w_lo > 0 else np.full(mid.shape, np.inf)
            ratio_hi = mid / (lam * w_up * xi_norm)
            mom = np.linalg.norm(Ks, axis=1) / (lam * xi_norm)
            lo_r = min(lo_r, ratio_lo.min())
            hi_r = max(hi_r, ratio_hi.max())
            klo = min(klo, mom.min())
            khi = max(khi, mom.max())
            fails = (ratio_lo < 0.5) | (ratio_hi > 2.0) | (mom < 0.5) | (mom > 2.0)
            if bad is None and fails.any():
                j = int(np.flatnonzero(fails)[0])
                bad = {
                    "lambda": lam, "s": s, "x": X[j], "xi": XI[j],
                    "position_ratio_lower": ratio_lo[j], "position_ratio_upper": ratio_hi[j],
                    "momentum_ratio": mom[j],
                }
        pmin.append(lo_r)
        pmax.append(hi_r)
        kmin.append(klo)
        kmax.append(khi)
        ok.append(bad is None)
        if bad is not None:
            first_violation[lam] = bad
    ok = np.array(ok)
    lambda0 = None
    for i in range(lambdas.size):
        if ok[i:].all():
            lambda0 = float(lambdas[i])
            break
    violation = None
    if first_violation:
        # report the violation closest to lambda0 (the largest failing lambda)
        violation = first_violation[max(first_violation)]
    return BoundReport(
        lambdas=lambdas, position_min=np.array(pmin), position_max=np.array(pmax),
        momentum_min=np.array(kmin), momentum_max=np.array(kmax), passed_at=ok,
        lambda0=lambda0, violation=violation, lower_weight=lower_weight, samples=X.shape[0], times=svals,
    )
