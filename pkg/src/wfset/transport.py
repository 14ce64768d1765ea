"""Phase term along orbits and the transport identity for the wave packet transform.

With ``(x(s), xi(s))`` the orbit through ``(x, lam xi)`` at ``s = t0``,

    W_{phi_lam(t - t0)} u(t)(x(t), xi(t))
        ~ exp(i int_0^t f(s, x(s), xi(s)) ds) W_{phi_lam(-t0)} u0(x(0), xi(0)),

where ``f`` is :func:`phase_term`.  The identity is exact for the free
equation; otherwise the difference is the aggregate remainder, which
:func:`transport_residual` measures.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _io
from .coeffs import CoefficientModel
from .errors import DimensionError, QuadratureError
from .flow import RTOL, ATOL, Trajectory, _check_dims, solve_bicharacteristics
from .propagator import SolverConfig, WaveField, free_propagate, propagate
from .windows import WindowSpec, evolved
from .wpt import AnalyticSignal, wpt_point


def phase_term(model: CoefficientModel, t: float, x, xi) -> float:
    """``-1/2 sum (a_jk - x.grad a_jk) xi_j xi_k + V - x.grad V`` at ``(t, x, xi)``."""
    x, xi = _check_dims(model, x, xi)
    A = model.metric(t, x)
    dA = model.metric_gradient(t, x)  # [l, j, k]
    V = float(model.potential(t, x))
    dV = model.potential_gradient(t, x)
    xdA = np.einsum("l,ljk->jk", x, dA)
    quad = float(xi @ (A - xdA) @ xi)
    return -0.5 * quad + V - float(x @ dV)


def phase_terms(model: CoefficientModel, s, X, XI) -> np.ndarray:
    """Vectorised :func:`phase_term` over rows (``s`` may vary per row)."""
    s = np.broadcast_to(np.asarray(s, dtype=float), (len(X),))
    return np.array([phase_term(model, si, x, k) for si, x, k in zip(s, X, XI)])


@dataclass
class PhaseLog:
    """Samples of the phase integrand and its integral over ``[0, t]``."""

    anchor_time: float
    anchor_x: np.ndarray
    anchor_xi: np.ndarray
    t: float
    s: np.ndarray
    integrand: np.ndarray
    integral: float
    error_estimate: float
    panels: int

    def to_csv(self, path, meta=None):
        head = {"anchor_time": self.anchor_time, "anchor_x": self.anchor_x, "anchor_xi": self.anchor_xi,
                "t": self.t, "integral": self.integral, "error_estimate": self.error_estimate,
                "panels": self.panels}
        if meta:
            head.update(meta)
        return _io.write_table(path, ["s", "f"], np.column_stack([self.s, self.integrand]), head)


def _gl_rule(order: int):
    return np.polynomial.legendre.leggauss(order)


def phase_integral(
    model: CoefficientModel,
    orbit: Trajectory,
    t: float | None = None,
    tol: float = 1e-9,
    order: int = 8,
    max_panels: int = 4096,
    rtol: float = RTOL,
    atol: float = ATOL,
) -> PhaseLog:
    """``int_0^t f(s, x(s), xi(s)) ds`` along the orbit of ``orbit``'s anchor.

    Composite Gauss-Legendre quadrature; the number of panels is doubled until
    two successive values differ by at most ``tol``.  The orbit is re-solved
    at the quadrature nodes from its anchoring data, so the sampled
    trajectory only fixes the orbit and the interval.

    Raises
    ------
    ValueError
        If the trajectory's samples do not cover ``[0, t]``.
    QuadratureError
        If refinement stalls before ``max_panels``.
    """
    if orbit.kind != "terminal":
        raise ValueError("phase integrals need an orbit with terminal data")
    if t is None:
        t = orbit.anchor_time
    t = float(t)
    lo, hi = min(0.0, t), max(0.0, t)
    if orbit.s.size == 0 or orbit.s[0] > lo + 1e-12 or orbit.s[-1] < hi - 1e-12:
        raise ValueError(f"orbit samples [{orbit.s[0] if orbit.s.size else 'none'}, "
                         f"{orbit.s[-1] if orbit.s.size else 'none'}] do not cover [{lo}, {hi}]")
    x_a, xi_a = orbit.anchor.x, orbit.anchor.xi
    if t == 0.0:
        f0 = phase_term(model, 0.0, *_at(model, orbit, 0.0, rtol, atol))
        return PhaseLog(orbit.anchor_time, x_a, xi_a, 0.0, np.array([0.0]), np.array([f0]), 0.0, 0.0, 0)
    nodes, weights = _gl_rule(order)

    def evaluate(panels):
        edges = np.linspace(0.0, t, panels + 1)
        mids = 0.5 * (edges[1:] + edges[:-1])
        half = 0.5 * (edges[1:] - edges[:-1])
        s = (mids[:, None] + half[:, None] * nodes[None, :]).ravel()
        w = (half[:, None] * weights[None, :]).ravel()
        tr = solve_bicharacteristics(model, orbit.anchor_time, x_a, xi_a, s, rtol, atol)
        # solve_bicharacteristics sorts its output; map back
        order_idx = np.searchsorted(tr.s, s)
        f = phase_terms(model, s, tr.x[order_idx], tr.xi[order_idx])
        return float(np.sum(w * f)), s, f

    panels = 2
    prev, s, f = evaluate(panels)
    while True:
        panels *= 2
        cur, s, f = evaluate(panels)
        err = abs(cur - prev)
        if err <= tol:
            break
        if panels >= max_panels:
            raise QuadratureError(f"phase integral not converged: change {err:.3e} at {panels} panels")
        prev = cur
    order_idx = np.argsort(s)
    return PhaseLog(orbit.anchor_time, x_a, xi_a, t, s[order_idx], f[order_idx], cur, err, panels)


def _at(model, orbit, s, rtol, atol):
    tr = solve_bicharacteristics(model, orbit.anchor_time, orbit.anchor.x, orbit.anchor.xi, [s], rtol, atol)
    return tr.x[0], tr.xi[0]


@dataclass
class TransportResult:
    residual: float
    lhs: complex
    rhs: complex
    phase: float
    x_t: np.ndarray
    xi_t: np.ndarray
    x_0: np.ndarray
    xi_0: np.ndarray
    lam: float
    t: float
    t0: float
    extra: dict = field(default_factory=dict)


def evolve_field(model: CoefficientModel, u0: WaveField, t: float, cfg: SolverConfig | None = None) -> WaveField:
    """``u(t)``: exact free evolution for flat models, the RK4 solver otherwise."""
    if model.is_flat:
        return free_propagate(u0, t)
    return propagate(model, u0, 0.0, t, cfg)[0]


def transport_check(
    model: CoefficientModel,
    u0,
    base: WindowSpec,
    lam: float,
    t: float,
    x,
    xi,
    t0: float | None = None,
    u_t: WaveField | None = None,
    cfg: SolverConfig | None = None,
    rtol: float = RTOL,
    atol: float = ATOL,
) -> TransportResult:
    """Both sides of the transport identity at one phase point.

    ``u0`` is a sampled :class:`WaveField` (or an analytic signal for the
    right-hand side only, with ``u_t`` supplied).  ``t0`` defaults to ``t``.
    ``u_t`` may be passed to reuse a propagated field across calls.
    """
    x, xi = _check_dims(model, x, xi)
    t = float(t)
    t0 = t if t0 is None else float(t0)
    p = lam * xi
    s_eval = sorted({0.0, t, t0} | set(np.linspace(min(0.0, t, t0), max(0.0, t, t0), 5)))
    orbit = solve_bicharacteristics(model, t0, x, p, s_eval, rtol, atol)
    x_t, xi_t = orbit.at(t).x, orbit.at(t).xi
    x_0, xi_0 = orbit.at(0.0).x, orbit.at(0.0).xi
    if u_t is None:
        if not isinstance(u0, WaveField):
            raise TypeError("u_t must be supplied when u0 is not a sampled field")
        u_t = u0 if t == 0 else evolve_field(model, u0, t, cfg)
    lhs = wpt_point(u_t, evolved(base, lam, t - t0), x_t, xi_t)
    rhs0 = wpt_point(u0, evolved(base, lam, -t0), x_0, xi_0)
    phase = phase_integral(model, orbit, t, rtol=rtol, atol=atol).integral if t != 0 else 0.0
    rhs = np.exp(1j * phase) * rhs0
    return TransportResult(float(abs(lhs - rhs)), lhs, complex(rhs), phase, x_t, xi_t, x_0, xi_0, lam, t, t0)


def transport_residual(model, u0, base, lam, t, x, xi, **kw) -> float:
    """``|W_{phi_lam(0)} u(t)(x, lam xi) - exp(i int f) W_{phi_lam(-t)} u0(x(0), xi(0))|``."""
    return transport_check(model, u0, base, lam, t, x, xi, **kw).residual


def residual_sweep(model, u0, base, lambdas, t, points, u_t=None, cfg=None) -> np.ndarray:
    """Rows ``(lambda, t, x..., xi..., residual, |lhs|)`` for every ``lambda`` and ``(x, xi)`` in ``points``."""
    if u_t is None:
        u_t = evolve_field(model, u0, t, cfg)
    rows = []
    for lam in lambdas:
        for x, xi in points:
            x, xi = _check_dims(model, x, xi)
            r = transport_check(model, u0, base, lam, t, x, xi, u_t=u_t)
            rows.append([lam, t, *x, *xi, r.residual, abs(r.lhs)])
    return np.array(rows)


def sweep_columns(n: int) -> list[str]:
    return (["lambda", "t"] + [f"x{i + 1}" for i in range(n)] + [f"xi{i + 1}" for i in range(n)]
            + ["residual", "abs_lhs"])
