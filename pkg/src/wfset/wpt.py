"""Wave packet transform ``W f(x, xi) = int conj(phi(y - x)) f(y) exp(-i y.xi) dy``.

Signals are either sampled fields (:class:`~wfset.propagator.WaveField`) or
analytic sums of separable Gaussian-type terms (:class:`AnalyticSignal`).
Sampled signals use the trapezoidal rule on the periodic grid, which is
spectrally accurate once the modulated integrand is resolved.  Analytic
signals with closed-form windows are transformed exactly: after the shift
``y = x + z`` each axis reduces to moments

    int z^m exp(-A z^2 + B z + C) dz

over the line or a half-line, computed from ``erfcx`` and the recurrence
``M_{m+1} = (B M_m + m M_{m-1} + z0^m exp(g(z0))) / (2A)``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.special import erfc, erfcx

from . import _io
from .errors import DimensionError, NyquistError, WindowError
from .propagator import WaveField, field_from_function
from .windows import EvolvedWindow, window_samples

SUPPORTS = ("R", "+", "-")


# -- analytic signals ---------------------------------------------------------------


@dataclass(frozen=True)
class AnalyticTerm:
    """``coef * prod_a exp(-alpha_a y_a^2 + beta_a y_a) * 1[y_a in support_a]``.

    ``support_a`` is ``"R"``, ``"+"`` (``y_a > 0``) or ``"-"`` (``y_a < 0``).
    ``Re alpha_a >= 0`` is required; purely imaginary ``alpha`` gives chirps.
    """

    coef: complex
    alpha: tuple
    beta: tuple
    support: tuple

    def __post_init__(self):
        alpha = tuple(complex(a) for a in self.alpha)
        beta = tuple(complex(b) for b in self.beta)
        support = tuple(self.support)
        if not (len(alpha) == len(beta) == len(support)):
            raise DimensionError("alpha, beta and support must have one entry per axis")
        if any(a.real < 0 for a in alpha):
            raise ValueError("Re alpha must be nonnegative")
        if any(s not in SUPPORTS for s in support):
            raise ValueError(f"support entries must be one of {SUPPORTS}")
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "beta", beta)
        object.__setattr__(self, "support", support)
        object.__setattr__(self, "coef", complex(self.coef))

    @property
    def n(self) -> int:
        return len(self.alpha)


@dataclass(frozen=True)
class AnalyticSignal:
    """Finite sum of :class:`AnalyticTerm` with a descriptive label."""

    terms: tuple
    label: str = "analytic"

    def __post_init__(self):
        terms = tuple(self.terms)
        if not terms:
            raise ValueError("an analytic signal needs at least one term")
        if len({t.n for t in terms}) != 1:
            raise DimensionError("all terms must share the dimension")
        object.__setattr__(self, "terms", terms)

    @property
    def n(self) -> int:
        return self.terms[0].n

    def __add__(self, other: "AnalyticSignal") -> "AnalyticSignal":
        return AnalyticSignal(self.terms + other.terms, f"{self.label}+{other.label}")

    def scale(self, c: complex) -> "AnalyticSignal":
        return AnalyticSignal(
            tuple(AnalyticTerm(c * t.coef, t.alpha, t.beta, t.support) for t in self.terms), self.label
        )

    def modulate(self, eta) -> "AnalyticSignal":
        """Multiply by ``exp(i y.eta)``."""
        eta = np.broadcast_to(np.asarray(eta, dtype=float), (self.n,))
        return AnalyticSignal(
            tuple(AnalyticTerm(t.coef, t.alpha, tuple(np.add(t.beta, 1j * eta)), t.support) for t in self.terms),
            self.label,
        )

    def describe(self) -> dict:
        return {
            "label": self.label,
            "n": self.n,
            "terms": [
                {"coef": t.coef, "alpha": list(t.alpha), "beta": list(t.beta), "support": list(t.support)}
                for t in self.terms
            ],
        }

    def __call__(self, y, mollify: float = 0.0) -> np.ndarray:
        """Pointwise values; ``mollify > 0`` smooths each jump by an erfc of that width."""
        y = np.asarray(y, dtype=float)
        if self.n == 1 and (y.ndim == 0 or y.shape[-1] != 1):
            y = y[..., None]
        out = np.zeros(y.shape[:-1], dtype=complex)
        for t in self.terms:
            val = np.full(y.shape[:-1], t.coef, dtype=complex)
            for a in range(self.n):
                ya = y[..., a]
                val = val * np.exp(-t.alpha[a] * ya * ya + t.beta[a] * ya)
                sgn = {"+": 1.0, "-": -1.0}.get(t.support[a])
                if sgn is not None:
                    if mollify > 0:
                        val = val * 0.5 * erfc(-sgn * ya / (math.sqrt(2.0) * mollify))
                    else:
                        val = val * (sgn * ya > 0)
            out = out + val
        return out

    def sample(self, L: float, N: int, mollify: float | None = None) -> WaveField:
        """Sample on the periodic grid; jumps are smoothed at twice the grid spacing by default."""
        if mollify is None:
            mollify = 2.0 * (2.0 * L / N) if any(s != "R" for t in self.terms for s in t.support) else 0.0
        return field_from_function(lambda p: self(p, mollify), self.n, L, N)


def gaussian_signal(n: int = 1, width: float = 1.0, center=0.0, momentum=0.0) -> AnalyticSignal:
    """``exp(-|y - c|^2 / (2 w^2) + i p.y)``."""
    c = np.broadcast_to(np.asarray(center, dtype=float), (n,))
    p = np.broadcast_to(np.asarray(momentum, dtype=float), (n,))
    al = 1.0 / (2.0 * width ** 2)
    coef = math.exp(-al * float(c @ c))
    term = AnalyticTerm(coef, (al,) * n, tuple(2.0 * al * c + 1j * p), ("R",) * n)
    return AnalyticSignal((term,), "gaussian")


def heaviside_signal(n: int = 1, axis: int = 0) -> AnalyticSignal:
    """Indicator of the half-space ``y_axis > 0``."""
    support = tuple("+" if a == axis else "R" for a in range(n))
    if n > 1:
        raise DimensionError("the half-space indicator is not square integrable along the other axes; use n = 1")
    return AnalyticSignal((AnalyticTerm(1.0, (0.0,) * n, (0.0,) * n, support),), "heaviside")


def chirp_signal(n: int = 1, focus_time: float = 0.5) -> AnalyticSignal:
    """``exp(-i |y|^2 / (2 T))``, which the free flow focuses to a point at time ``T``."""
    if focus_time == 0:
        raise ValueError("focus time must be nonzero")
    a = 1j / (2.0 * focus_time)
    return AnalyticSignal((AnalyticTerm(1.0, (a,) * n, (0.0,) * n, ("R",) * n),), "chirp")


def signal_from_config(section: dict, n: int) -> AnalyticSignal:
    kind = section.get("kind", "gaussian")
    if kind == "gaussian":
        return gaussian_signal(n, section.get("width", 1.0), section.get("center", 0.0), section.get("momentum", 0.0))
    if kind == "heaviside":
        return heaviside_signal(n)
    if kind == "chirp":
        return chirp_signal(n, section.get("focus_time", 0.5))
    raise ValueError(f"unknown signal kind {kind!r}")


# -- closed-form moments -----------------------------------------------------------


def gaussian_moments(A, B, C, mmax: int, support: str, z0=0.0):
    """``int z^m exp(-A z^2 + B z + C) dz`` for ``m = 0..mmax``.

    ``support`` is ``"R"``, ``"+"`` (over ``z > z0``) or ``"-"`` (over ``z < z0``).
    Arrays broadcast; ``Re A > 0`` is required.
    """
    A = np.asarray(A, dtype=complex)
    B = np.asarray(B, dtype=complex)
    C = np.asarray(C, dtype=complex)
    z0 = np.asarray(z0, dtype=float)
    if support == "-":
        M = gaussian_moments(A, -B, C, mmax, "+", -z0)
        return [(-1) ** m * M[m] for m in range(mmax + 1)]
    sA = np.sqrt(A)
    full = 0.5 * np.log(np.pi / A) + C + B * B / (4.0 * A)
    if support == "R":
        M = [np.exp(full)]
        for m in range(mmax):
            prev = M[m - 1] if m >= 1 else 0.0
            M.append((B * M[m] + m * prev) / (2.0 * A))
        return M
    g0 = -A * z0 * z0 + B * z0 + C
    w = sA * z0 - B / (2.0 * sA)
    pre = 0.5 * np.sqrt(np.pi / A)
    neg = np.real(w) < 0
    wpos = np.where(neg, -w, w)
    ex = erfcx(wpos)
    with np.errstate(over="ignore", invalid="ignore"):
        m0_pos = pre * ex * np.exp(g0)
        m0_neg = np.exp(full) - pre * ex * np.exp(g0)
    M0 = np.where(neg, m0_neg, m0_pos)
    M = [M0]
    eg = np.exp(g0)
    for m in range(mmax):
        prev = M[m - 1] if m >= 1 else 0.0
        boundary = (z0 ** m) * eg
        M.append((B * M[m] + m * prev + boundary) / (2.0 * A))
    return M


def analytic_wpt(signal: AnalyticSignal, w: EvolvedWindow, X, XI) -> np.ndarray:
    """Exact transform of an analytic signal with a closed-form window.

    ``X`` and ``XI`` broadcast against each other with trailing axis ``n``
    (in 1D plain scalars or arrays of scalars are accepted).
    """
    if w.strategy != "closed":
        return _quadrature_wpt(signal, w, X, XI)
    n = signal.n
    if w.n != n:
        raise DimensionError("signal and window dimensions differ")
    X, XI, shape = _pairs(n, X, XI)
    qbar = np.conj(w.q)
    total = np.zeros(shape, dtype=complex)
    for term in signal.terms:
        val = np.full(shape, term.coef, dtype=complex)
        for a in range(n):
            x = X[..., a]
            xi = XI[..., a]
            al, be = term.alpha[a], term.beta[a]
            A = qbar + al
            B = be - 2.0 * al * x - 1j * xi
            C = -al * x * x + be * x - 1j * x * xi
            p = np.conj(w.polys[a])
            M = gaussian_moments(A, B, C, p.size - 1, term.support[a], -x)
            acc = np.zeros(shape, dtype=complex)
            for m, c in enumerate(p):
                if c != 0:
                    acc = acc + c * M[m]
            val = val * acc
        total = total + val
    return total


def _pairs(n, X, XI):
    X = np.asarray(X, dtype=float)
    XI = np.asarray(XI, dtype=float)
    if n == 1:
        if X.ndim == 0 or X.shape[-1] != 1:
            X = X[..., None]
        if XI.ndim == 0 or XI.shape[-1] != 1:
            XI = XI[..., None]
    if X.shape[-1] != n or XI.shape[-1] != n:
        raise DimensionError(f"points and covectors must have trailing dimension {n}")
    X, XI = np.broadcast_arrays(X, XI)
    return X, XI, X.shape[:-1]


def _quadrature_wpt(signal, w, X, XI):
    """Trapezoidal rule on the spectral window's own grid (analytic signal, sampled window)."""
    n = signal.n
    X, XI, shape = _pairs(n, X, XI)
    L = w.half_width
    N = w.table.shape[0]
    z = -L + (2.0 * L / N) * np.arange(N)
    pts = np.stack(np.meshgrid(*([z] * n), indexing="ij"), axis=-1)
    cw = np.conj(w.table)
    dv = (2.0 * L / N) ** n
    out = np.empty(shape, dtype=complex)
    for idx in np.ndindex(*shape):
        x, xi = X[idx], XI[idx]
        y = pts + x
        out[idx] = np.sum(cw * signal(y) * np.exp(-1j * (y @ xi))) * dv
    return out


# -- sampled signals ------------------------------------------------------------------


def signal_bandwidth(f: WaveField, tol: float = 1e-13) -> float:
    """Largest |k| (per axis) where the sampled spectrum exceeds ``tol`` relative to its peak."""
    c = np.abs(np.fft.fftn(f.values))
    peak = c.max()
    if peak == 0:
        return 0.0
    k = np.abs(f.wavenumbers())
    big = c > tol * peak
    out = 0.0
    for ax in range(f.n):
        mask = np.any(big, axis=tuple(a for a in range(f.n) if a != ax)) if f.n > 1 else big
        out = max(out, float(k[mask].max()))
    return out


def nyquist_margin(f: WaveField, w: EvolvedWindow, xi, k_f: float | None = None) -> float:
    """``2 pi/dx - (|xi|_max + K_f + B_phi)``; negative means the trapezoidal sum aliases.

    The sum over the grid equals ``sum_k g^(xi + 2 pi k / dx)`` where ``g`` is
    the windowed signal, whose spectrum lies within ``K_f + B_phi`` of the
    origin (signal and window bandwidths).
    """
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    k_f = signal_bandwidth(f) if k_f is None else k_f
    return 2.0 * math.pi / f.dx - (float(np.max(np.abs(xi))) + k_f + w.bandwidth())


def check_nyquist(f: WaveField, w: EvolvedWindow, xi, k_f: float | None = None):
    margin = nyquist_margin(f, w, xi, k_f)
    if margin <= 0:
        raise NyquistError(
            f"grid cannot resolve the modulated window: |xi|_max + K_f + B_phi exceeds 2 pi/dx = "
            f"{2.0 * math.pi / f.dx:.6g} by {-margin:.6g}"
        )


def wpt_point(f, w: EvolvedWindow, x, xi) -> complex:
    """``W f(x, xi)`` for a sampled or analytic signal.

    Raises
    ------
    NyquistError
        If a sampled signal's grid cannot resolve the modulated window.
    """
    if isinstance(f, AnalyticSignal):
        return complex(analytic_wpt(f, w, np.atleast_1d(x), np.atleast_1d(xi)))
    return complex(wpt_points(f, w, np.atleast_1d(x)[None, :], np.atleast_1d(xi)[None, :])[0])


def wpt_points(f, w: EvolvedWindow, X, XI) -> np.ndarray:
    """Vectorised transform at paired rows of ``X`` and ``XI`` (shape ``(m, n)``)."""
    if isinstance(f, AnalyticSignal):
        return analytic_wpt(f, w, X, XI)
    if not isinstance(f, WaveField):
        raise TypeError("signal must be a WaveField or AnalyticSignal")
    if f.values.size == 0:
        raise ValueError("empty signal")
    n = f.n
    if w.n != n:
        raise DimensionError("signal and window dimensions differ")
    X = np.asarray(X, dtype=float).reshape(-1, n)
    XI = np.asarray(XI, dtype=float).reshape(-1, n)
    check_nyquist(f, w, XI)
    pts = f.points().reshape(-1, n)
    vals = f.values.reshape(-1)
    dv = f.dx ** n
    out = np.empty(X.shape[0], dtype=complex)
    for i in range(X.shape[0]):
        off = pts - X[i]
        if w.strategy == "spectral":
            inside = np.all(np.abs(off) <= w.half_width, axis=1)
            phi = np.zeros(off.shape[0], dtype=complex)
            phi[inside] = window_samples(w, off[inside] if n > 1 else off[inside, 0])
        else:
            phi = window_samples(w, off if n > 1 else off[:, 0])
        out[i] = np.sum(np.conj(phi) * vals * np.exp(-1j * (pts @ XI[i]))) * dv
    return out


@dataclass
class WptSlice:
    """Transform values on ``x_set x (xi_axes[0] x ... x xi_axes[n-1])``.

    ``values`` has shape ``(m,) + tuple(len(ax) for ax in xi_axes)``.
    """

    x: np.ndarray
    xi_axes: list
    values: np.ndarray
    window: dict
    signal: dict
    x_axes: list | None = None
    method: str = "fft"
    warning: str | None = None

    @property
    def n(self) -> int:
        return self.x.shape[1]

    @property
    def fallback(self) -> bool:
        return self.method == "direct" and self.warning is not None

    def energy(self) -> float:
        """``sum |W|^2`` times the cell measure; needs tensor x and xi grids."""
        if self.x_axes is None:
            raise ValueError("cell measure needs a tensor-product x grid")
        cell = 1.0
        for ax in list(self.x_axes) + list(self.xi_axes):
            ax = np.asarray(ax)
            cell *= float(ax[1] - ax[0]) if ax.size > 1 else 1.0
        return float(np.sum(np.abs(self.values) ** 2) * cell)

    def metadata(self) -> dict:
        desc = []
        for ax in self.xi_axes:
            ax = np.asarray(ax)
            desc.append({"start": float(ax[0]), "step": float(ax[1] - ax[0]) if ax.size > 1 else 0.0,
                         "count": int(ax.size)})
        head = {"xi_grid": desc, "x_count": int(self.x.shape[0]), "window": self.window,
                "signal": self.signal, "method": self.method, "warning": self.warning}
        if self.x_axes is not None:
            head["x_grid"] = [{"start": float(a[0]), "step": float(a[1] - a[0]) if len(a) > 1 else 0.0,
                               "count": len(a)} for a in map(np.asarray, self.x_axes)]
        return head

    def rows(self) -> np.ndarray:
        n = self.n
        grids = np.meshgrid(*[np.asarray(a) for a in self.xi_axes], indexing="ij")
        XI = np.stack([g.ravel() for g in grids], axis=1)
        m = self.x.shape[0]
        Xr = np.repeat(self.x, XI.shape[0], axis=0)
        XIr = np.tile(XI, (m, 1))
        v = self.values.reshape(-1)
        return np.column_stack([Xr, XIr, v.real, v.imag])

    def to_csv(self, path, meta=None):
        n = self.n
        cols = [f"x{i + 1}" for i in range(n)] + [f"xi{i + 1}" for i in range(n)] + ["re", "im"]
        head = self.metadata()
        if meta:
            head.update(meta)
        return _io.write_table(path, cols, self.rows(), head)

    @classmethod
    def from_csv(cls, path) -> "WptSlice":
        meta, cols, data = _io.read_table(path)
        n = (len(cols) - 2) // 2
        xi_axes = [g["start"] + g["step"] * np.arange(g["count"]) for g in meta["xi_grid"]]
        per_x = int(np.prod([g["count"] for g in meta["xi_grid"]]))
        m = meta["x_count"]
        x = data[::per_x, :n]
        vals = (data[:, 2 * n] + 1j * data[:, 2 * n + 1]).reshape((m,) + tuple(a.size for a in xi_axes))
        x_axes = None
        if "x_grid" in meta:
            x_axes = [g["start"] + g["step"] * np.arange(g["count"]) for g in meta["x_grid"]]
        return cls(x, xi_axes, vals, meta["window"], meta["signal"], x_axes, meta["method"], meta["warning"])


def _uniform(ax, rtol=1e-10):
    ax = np.asarray(ax, dtype=float)
    if ax.size < 2:
        return ax.size == 1
    d = np.diff(ax)
    return bool(np.all(np.abs(d - d[0]) <= rtol * abs(d[0])) and d[0] > 0)


def _commensurate(ax, dx, N):
    """FFT length ``M`` with ``step = 2 pi / (M dx)``, or ``None``."""
    ax = np.asarray(ax, dtype=float)
    if ax.size == 1:
        return N
    M = 2.0 * math.pi / (dx * (ax[1] - ax[0]))
    Mi = int(round(M))
    if Mi >= N and abs(M - Mi) <= 1e-9 * M:
        return Mi
    return None


def fft_xi_axis(f: WaveField, center: float = 0.0, count: int | None = None, refine: int = 1) -> np.ndarray:
    """ξ-axis commensurate with the grid: step ``2 pi / (refine N dx)`` centred near ``center``."""
    M = refine * f.N
    step = 2.0 * math.pi / (M * f.dx)
    count = M if count is None else count
    start = center - step * (count // 2)
    return start + step * np.arange(count)


def wpt_grid(f, w: EvolvedWindow, x_set, xi_set, jobs: int = 1) -> WptSlice:
    """Transform on ``x_set x xi_set``.

    Parameters
    ----------
    x_set : array (m, n) or list of n 1-D arrays
        Points, or axes of a tensor grid (then the slice can report its energy).
    xi_set : 1-D array (n = 1) or list of n 1-D arrays
        Tensor ξ-grid.  If every axis is uniform with step ``2 pi / (M dx)``
        for an integer ``M >= N`` one zero-padded FFT per x is used, after
        shifting the integrand to baseband.  Otherwise the direct sum is used
        and ``warning`` is set.
    """
    n = f.n if isinstance(f, WaveField) else f.n
    if isinstance(xi_set, np.ndarray) and xi_set.ndim == 1 and n == 1:
        xi_axes = [xi_set]
    else:
        xi_axes = [np.asarray(a, dtype=float) for a in xi_set]
    if len(xi_axes) != n:
        raise DimensionError("need one ξ axis per dimension")
    x_axes = None
    if isinstance(x_set, (list, tuple)) and len(x_set) == n and all(np.ndim(a) == 1 for a in x_set):
        x_axes = [np.asarray(a, dtype=float) for a in x_set]
        grids = np.meshgrid(*x_axes, indexing="ij")
        X = np.stack([g.ravel() for g in grids], axis=1)
    else:
        X = np.asarray(x_set, dtype=float).reshape(-1, n)
    shape = (X.shape[0],) + tuple(a.size for a in xi_axes)
    sig_desc = f.describe()
    grids = np.meshgrid(*xi_axes, indexing="ij")
    XI = np.stack([g.ravel() for g in grids], axis=1)

    if isinstance(f, AnalyticSignal):
        vals = analytic_wpt(f, w, X[:, None, :], XI[None, :, :]).reshape(shape)
        return WptSlice(X, xi_axes, vals, w.describe(), sig_desc, x_axes, "analytic")

    check_nyquist(f, w, np.array([[a.min() for a in xi_axes], [a.max() for a in xi_axes]]))
    Ms = [(_commensurate(a, f.dx, f.N) if _uniform(a) else None) for a in xi_axes]
    if any(M is None for M in Ms):
        msg = "ξ-set is not a uniform grid commensurate with the signal grid; used the direct sum"
        warnings.warn(msg, RuntimeWarning, stacklevel=2)
        vals = np.empty((X.shape[0], XI.shape[0]), dtype=complex)
        for i in range(X.shape[0]):
            vals[i] = wpt_points(f, w, np.repeat(X[i : i + 1], XI.shape[0], axis=0), XI)
        return WptSlice(X, xi_axes, vals.reshape(shape), w.describe(), sig_desc, x_axes, "direct", msg)

    y = f.axis()
    pts = f.points()
    dv = f.dx ** n
    centre = np.array([a[0] for a in xi_axes])
    base = f.values * np.exp(-1j * (pts @ centre))
    idx = [np.arange(a.size) % M for a, M in zip(xi_axes, Ms)]
    phase = 1.0
    for ax, (a, M) in enumerate(zip(xi_axes, Ms)):
        step = 2.0 * math.pi / (M * f.dx)
        sh = [1] * n
        sh[ax] = a.size
        phase = phase * np.exp(-1j * y[0] * step * np.arange(a.size)).reshape(sh)

    def one(x):
        off = pts - x
        if w.strategy == "spectral":
            inside = np.all(np.abs(off) <= w.half_width, axis=-1)
            phi = np.zeros(off.shape[:-1], dtype=complex)
            phi[inside] = window_samples(w, off[inside] if n > 1 else off[inside][:, 0])
        else:
            phi = window_samples(w, off if n > 1 else off[..., 0])
        F = np.fft.fftn(np.conj(phi) * base, s=Ms, axes=tuple(range(n)))
        return F[np.ix_(*idx)] * phase * dv

    if n == 1 and w.strategy == "closed":
        # batch all x at once: rows are x, columns are grid points
        off = y[None, :] - X[:, 0][:, None]
        G = np.conj(window_samples(w, off)) * base[None, :]
        F = np.fft.fft(G, n=Ms[0], axis=1)
        vals = F[:, idx[0]] * phase[None, :] * dv
    else:
        if jobs > 1:
            from concurrent.futures import ThreadPoolExecutor

            with ThreadPoolExecutor(jobs) as pool:
                vals = np.stack(list(pool.map(one, X)))
        else:
            vals = np.stack([one(x) for x in X])
    return WptSlice(X, xi_axes, vals.reshape(shape), w.describe(), sig_desc, x_axes, "fft")
