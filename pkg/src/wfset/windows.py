"""Scaled, freely evolved windows ``phi_lam(t) = exp(i t Lap / 2) lam^(n/4) phi0(lam^(1/2) .)``.

Gaussian and polynomial-times-Gaussian bases evolve in closed form.  Along
each axis the scaled base is expanded in Hermite functions, and

    exp(i s d^2/2) [H_k(sqrt(lam) y) exp(-lam y^2/2)]
        = (1 + i tau)^(-1/2) exp(-i k arctan tau) H_k(sqrt(lam) y / sqrt(1 + tau^2))
          exp(-lam y^2 / (2 (1 + i tau))),          tau = lam s,

so every evolved window is ``prod_a P_a(y_a) exp(-q |y|^2)`` with complex
polynomials ``P_a`` and ``q = lam / (2 (1 + i tau))``.  Sampled bases, and any
base on request, use the spectral route: FFT, multiply by
``exp(-i s |k|^2 / 2)``, inverse FFT, with off-grid values from the
trigonometric interpolant.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from numpy.polynomial import hermite as H
from numpy.polynomial import polynomial as P

from .errors import DimensionError, WindowError

KINDS = ("gaussian", "polygauss", "sampled")
# exp(-k^2 / 2) drops below 1e-17 for |k| > 8.9
_GAUSS_CUTOFF = math.sqrt(2.0 * math.log(1e17))


@dataclass(frozen=True, eq=False)
class WindowSpec:
    """Base window, scale and evolution time.

    Parameters
    ----------
    n : int
        Dimension.
    kind : {"gaussian", "polygauss", "sampled"}
        ``gaussian`` is ``exp(-|x|^2/2)``; ``polygauss`` is
        ``prod_a p_a(x_a) exp(-|x|^2/2)`` with monomial coefficients ``poly[a]``
        (ascending powers); ``sampled`` holds ``samples`` of the base on the
        periodic grid ``[-half_width, half_width)`` with ``samples.shape[a]``
        points per axis.
    lam : float
        Scale, at least 1.
    t : float
        Free evolution time already applied.
    """

    n: int = 1
    kind: str = "gaussian"
    poly: tuple = ()
    samples: np.ndarray | None = None
    half_width: float = 0.0
    lam: float = 1.0
    t: float = 0.0
    label: str = ""

    def __post_init__(self):
        if self.n < 1:
            raise WindowError("dimension must be positive")
        if self.kind not in KINDS:
            raise WindowError(f"unknown window kind {self.kind!r}")
        if not self.lam >= 1.0:
            raise WindowError(f"window scale must be >= 1, got {self.lam}")
        if self.kind == "polygauss":
            if len(self.poly) != self.n:
                raise WindowError("polygauss windows need one polynomial per axis")
            poly = tuple(tuple(complex(c) for c in p) for p in self.poly)
            if any(not any(c != 0 for c in p) for p in poly):
                raise WindowError("window polynomial is identically zero")
            object.__setattr__(self, "poly", poly)
        if self.kind == "sampled":
            arr = np.asarray(self.samples, dtype=complex)
            if arr.ndim != self.n:
                raise WindowError("sampled window array must have one axis per dimension")
            if not np.any(arr != 0):
                raise WindowError("window is identically zero")
            if self.half_width <= 0:
                raise WindowError("sampled window needs a positive half_width")
            object.__setattr__(self, "samples", arr)

    def describe(self) -> dict:
        d = {"n": self.n, "kind": self.kind, "lambda": self.lam, "time": self.t}
        if self.kind == "polygauss":
            d["poly"] = [[[c.real, c.imag] for c in p] for p in self.poly]
        if self.kind == "sampled":
            d["shape"] = list(self.samples.shape)
            d["half_width"] = self.half_width
        if self.label:
            d["label"] = self.label
        return d

    def axis_polys(self) -> list[np.ndarray]:
        """Monomial coefficients of the per-axis polynomial factors (closed-form kinds)."""
        if self.kind == "gaussian":
            return [np.array([1.0 + 0j]) for _ in range(self.n)]
        if self.kind == "polygauss":
            return [np.array(p, dtype=complex) for p in self.poly]
        raise WindowError("sampled windows have no polynomial form")

    @property
    def degree(self) -> int:
        if self.kind == "sampled":
            return 0
        return max(len(p) - 1 for p in self.axis_polys())


def gaussian_window(n: int = 1) -> WindowSpec:
    """Canonical window ``exp(-|x|^2/2)``."""
    return WindowSpec(n=n, kind="gaussian", label="gaussian")


def polygauss_window(poly, label: str = "") -> WindowSpec:
    """``prod_a p_a(x_a) exp(-|x|^2/2)`` from per-axis monomial coefficients."""
    poly = [np.atleast_1d(np.asarray(p)) for p in poly]
    return WindowSpec(n=len(poly), kind="polygauss", poly=tuple(tuple(p) for p in poly), label=label)


def hermite_window(orders) -> WindowSpec:
    """Hermite function window ``prod_a H_{k_a}(x_a) exp(-x_a^2/2)``."""
    orders = [int(k) for k in np.atleast_1d(orders)]
    polys = [H.herm2poly([0] * k + [1]) for k in orders]
    return polygauss_window(polys, label="hermite" + "-".join(map(str, orders)))


def sampled_window(samples, half_width: float) -> WindowSpec:
    """Base window given by samples on ``[-half_width, half_width)^n``."""
    arr = np.asarray(samples, dtype=complex)
    return WindowSpec(n=arr.ndim, kind="sampled", samples=arr, half_width=float(half_width), label="sampled")


def window_from_config(section: dict, n: int) -> WindowSpec:
    """Build a base window from ``{"kind": ..., "orders": [...], "poly": [[...]]}``."""
    kind = section.get("kind", "gaussian")
    if kind == "gaussian":
        return gaussian_window(n)
    if kind == "hermite":
        orders = section.get("orders", [0] * n)
        if len(orders) != n:
            raise WindowError("hermite orders must list one order per axis")
        return hermite_window(orders)
    if kind == "polygauss":
        poly = section.get("poly")
        if poly is None or len(poly) != n:
            raise WindowError("polygauss windows need one coefficient list per axis")
        return polygauss_window(poly)
    raise WindowError(f"unknown window kind {kind!r}")


def scaled_window(base: WindowSpec, lam: float) -> WindowSpec:
    """L2-normalised dilation ``lam^(n/4) phi0(lam^(1/2) x)`` of the base window."""
    if not lam >= 1.0:
        raise WindowError(f"window scale must be >= 1, got {lam}")
    return replace(base, lam=float(lam))


def base_norm(spec: WindowSpec) -> float:
    """``||phi0||_2`` (equal to the norm of every scaled, evolved version)."""
    if spec.kind == "sampled":
        dx = 2.0 * spec.half_width / np.array(spec.samples.shape)
        return float(math.sqrt(np.sum(np.abs(spec.samples) ** 2) * np.prod(dx)))
    nodes, weights = H.hermgauss(spec.degree + 2)
    total = 1.0
    for p in spec.axis_polys():
        total *= float(np.sum(weights * np.abs(P.polyval(nodes, p)) ** 2))
    return math.sqrt(total)


# -- evolved windows -------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class EvolvedWindow:
    """A window ready for sampling.

    ``strategy`` is ``"closed"`` (fields ``q`` and ``polys``) or
    ``"spectral"`` (fields ``half_width``, ``table`` and ``coef``: grid values
    on ``[-half_width, half_width)^n`` and their normalised FFT).
    """

    spec: WindowSpec
    strategy: str
    q: complex = 0j
    polys: tuple = ()
    half_width: float = 0.0
    table: np.ndarray | None = None
    coef: np.ndarray | None = None

    @property
    def n(self) -> int:
        return self.spec.n

    @property
    def lam(self) -> float:
        return self.spec.lam

    @property
    def t(self) -> float:
        return self.spec.t

    def describe(self) -> dict:
        d = self.spec.describe()
        d["strategy"] = self.strategy
        if self.strategy == "spectral":
            d["grid"] = {"half_width": self.half_width, "shape": list(self.table.shape)}
        return d

    def bandwidth(self, tol: float = 1e-16) -> float:
        """Frequency radius per axis beyond which the window spectrum is below ``tol`` (relative)."""
        if self.spec.kind != "sampled":
            cut = math.sqrt(2.0 * math.log(1.0 / tol))
            return math.sqrt(self.lam) * (cut + math.sqrt(2.0 * self.spec.degree + 1.0))
        c = np.abs(self.coef)
        big = c > max(tol, 1e-15) * c.max()
        out = 0.0
        for ax in range(self.n):
            N = c.shape[ax]
            dx = 2.0 * self.half_width / N
            k = np.abs(2.0 * np.pi * np.fft.fftfreq(N, dx))
            mask = np.any(big, axis=tuple(a for a in range(self.n) if a != ax))
            out = max(out, float(k[mask].max()) if mask.any() else 0.0)
        return out

    def __call__(self, offsets):
        return window_samples(self, offsets)


def _closed_axis(poly: np.ndarray, lam: float, s: float) -> np.ndarray:
    """Monomial coefficients in ``y`` of one axis factor of the evolved window."""
    tau = lam * s
    z = 1.0 + 1j * tau
    herm = H.poly2herm(poly).astype(complex)
    k = np.arange(herm.size)
    herm = herm * np.exp(-1j * k * math.atan(tau))
    mono = H.herm2poly(herm).astype(complex)
    kappa = math.sqrt(lam) / math.sqrt(1.0 + tau * tau)
    mono = mono * kappa ** np.arange(mono.size)
    return mono * lam ** 0.25 / np.sqrt(z)


def default_box(lam: float, t: float, degree: int = 0) -> tuple[float, int]:
    """Periodic box half-width and grid size for the spectral route."""
    L = 16.0 * lam ** -0.5 * max(1.0, abs(t) * lam) * (1.0 + 0.25 * math.sqrt(degree))
    kmax = math.sqrt(lam) * (_GAUSS_CUTOFF + math.sqrt(2.0 * degree + 1.0))
    N = int(2 ** math.ceil(math.log2(max(16.0, 2.0 * L * kmax / math.pi))))
    return L, N


def _grid(half_width, N):
    return -half_width + (2.0 * half_width / N) * np.arange(N)


def _spectral(spec: WindowSpec, t_total: float, half_width=None, N=None) -> EvolvedWindow:
    n = spec.n
    if spec.kind == "sampled":
        base = spec.samples
        # samples of lam^(n/4) phi0(sqrt(lam) y) live on the shrunken grid
        L = spec.half_width / math.sqrt(spec.lam)
        vals = base * spec.lam ** (n / 4.0)
        want, _ = default_box(spec.lam, t_total)
        if half_width is not None:
            want = half_width
        if want > L * (1 + 1e-12):
            # zero-pad to a box at least as wide as requested, keeping the spacing
            N0 = base.shape[0]
            dx = 2.0 * L / N0
            extra = int(math.ceil((want - L) / dx))
            vals = np.pad(vals, [(extra, extra)] * n)
            L = L + extra * dx
        _check_resolved(vals, "sampled base window")
    else:
        L, Nd = default_box(spec.lam, t_total, spec.degree)
        if half_width is not None:
            L = float(half_width)
        N = Nd if N is None else int(N)
        y = _grid(L, N)
        unevolved = replace(spec, t=0.0)
        closed = _closed(unevolved, 0.0)
        grids = np.meshgrid(*([y] * n), indexing="ij")
        vals = window_samples(closed, np.stack(grids, axis=-1) if n > 1 else grids[0])
    shape = vals.shape
    coef = np.fft.fftn(vals) / vals.size
    if t_total != 0.0:
        k2 = np.zeros(shape)
        for ax, Nax in enumerate(shape):
            k = 2.0 * np.pi * np.fft.fftfreq(Nax, 2.0 * L / Nax)
            sh = [1] * n
            sh[ax] = Nax
            k2 = k2 + (k ** 2).reshape(sh)
        coef = coef * np.exp(-0.5j * t_total * k2)
    table = np.fft.ifftn(coef * vals.size)
    _check_resolved(table, "evolved window")
    return EvolvedWindow(spec=replace(spec, t=t_total), strategy="spectral", half_width=L, table=table, coef=coef)


def _check_resolved(vals: np.ndarray, what: str, tol: float = 1e-12):
    """Aliasing check: negligible spectrum near Nyquist and negligible mass at the box edge."""
    coef = np.abs(np.fft.fftn(vals))
    peak = coef.max()
    mag = np.abs(vals)
    vmax = mag.max()
    for ax, N in enumerate(vals.shape):
        m = max(1, N // 16)
        idx = np.r_[N // 2 - m : N // 2 + m]
        if np.take(coef, idx, axis=ax).max() > tol * peak:
            raise WindowError(f"{what}: grid does not resolve the window (spectral tail too large)")
        edge = np.r_[0:m, N - m : N]
        if np.take(mag, edge, axis=ax).max() > 1e-6 * vmax:
            raise WindowError(f"{what}: window mass reaches the periodic box boundary")


def _closed(spec: WindowSpec, t_total: float) -> EvolvedWindow:
    lam = spec.lam
    polys = tuple(_closed_axis(p, lam, t_total) for p in spec.axis_polys())
    q = lam / (2.0 * (1.0 + 1j * lam * t_total))
    return EvolvedWindow(spec=replace(spec, t=t_total), strategy="closed", q=complex(q), polys=polys)


def free_evolve_window(spec: WindowSpec, t: float, strategy: str = "auto", half_width=None, N=None) -> EvolvedWindow:
    """Apply ``exp(i t Lap / 2)`` to a (scaled) window.

    Parameters
    ----------
    spec : WindowSpec
        Window to evolve; its own ``t`` is added to ``t``.
    strategy : {"auto", "closed", "spectral"}
        ``auto`` picks the closed form whenever the base allows it.
    half_width, N : optional
        Spectral box overrides (half-width and points per axis).

    Raises
    ------
    WindowError
        If the spectral grid fails the aliasing check.
    """
    t_total = float(spec.t) + float(t)
    if strategy == "auto":
        strategy = "spectral" if spec.kind == "sampled" else "closed"
    if strategy == "closed":
        if spec.kind == "sampled":
            raise WindowError("sampled windows have no closed-form evolution")
        return _closed(spec, t_total)
    if strategy == "spectral":
        return _spectral(spec, t_total, half_width, N)
    raise WindowError(f"unknown strategy {strategy!r}")


def evolved(base: WindowSpec, lam: float, t: float, strategy: str = "auto") -> EvolvedWindow:
    """Shorthand for ``free_evolve_window(scaled_window(base, lam), t)``."""
    return free_evolve_window(scaled_window(replace(base, t=0.0), lam), t, strategy)


def _offsets(w, offsets):
    y = np.asarray(offsets, dtype=float)
    if w.n == 1:
        if y.ndim >= 1 and y.shape[-1:] == (1,) and y.ndim > 1:
            y = y[..., 0]
        return y[..., None], y.shape
    if y.shape[-1] != w.n:
        raise DimensionError(f"offsets must have trailing dimension {w.n}")
    return y, y.shape[:-1]


def window_samples(w: EvolvedWindow, offsets) -> np.ndarray:
    """Values ``phi_lam(t, y)`` at the given offsets.

    In 1D ``offsets`` may be any array of scalars; otherwise its last axis has
    length ``n``.
    """
    y, shape = _offsets(w, offsets)
    if not np.all(np.isfinite(y)):
        raise ValueError("offsets must be finite")
    if w.strategy == "closed":
        r2 = np.sum(y * y, axis=-1)
        val = np.exp(-w.q * r2).astype(complex)
        for a, p in enumerate(w.polys):
            val = val * P.polyval(y[..., a], p)
        return val.reshape(shape)
    L = w.half_width
    if np.any(np.abs(y) > L):
        raise WindowError("offsets outside the sampled window table")
    flat = y.reshape(-1, w.n)
    coef = w.coef
    # trigonometric interpolation, one axis at a time
    N0 = coef.shape[0]
    k0 = 2.0 * np.pi * np.fft.fftfreq(N0, 2.0 * L / N0)
    E = np.exp(1j * np.outer(flat[:, 0] + L, k0))
    acc = E @ coef.reshape(N0, -1)
    for ax in range(1, w.n):
        Nax = coef.shape[ax]
        k = 2.0 * np.pi * np.fft.fftfreq(Nax, 2.0 * L / Nax)
        E = np.exp(1j * np.outer(flat[:, ax] + L, k))
        acc = acc.reshape(flat.shape[0], Nax, -1)
        acc = np.einsum("mj,mj...->m...", E, acc)
    return acc.reshape(shape)


def window_norm(w: EvolvedWindow, half_width: float | None = None, N: int | None = None) -> float:
    """L2 norm by grid quadrature (closed form) or from the spectral table."""
    if w.strategy == "spectral":
        dx = 2.0 * w.half_width / np.array(w.table.shape)
        return float(math.sqrt(np.sum(np.abs(w.table) ** 2) * np.prod(dx)))
    L, Nd = default_box(w.lam, w.t, w.spec.degree)
    L = L if half_width is None else half_width
    N = Nd if N is None else N
    y = _grid(L, N)
    grids = np.meshgrid(*([y] * w.n), indexing="ij")
    vals = window_samples(w, np.stack(grids, axis=-1) if w.n > 1 else grids[0])
    return float(math.sqrt(np.sum(np.abs(vals) ** 2) * (2.0 * L / N) ** w.n))
