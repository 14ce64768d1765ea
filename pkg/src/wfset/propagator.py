"""Reference solver for ``i u_t + 1/2 sum d_j a_jk d_k u - V u = 0`` on a periodic box.

The spatial operator is applied spectrally (gradient by FFT, multiply by
``a_jk``, divergence by FFT) and time is advanced by classical RK4.  The free
propagator ``exp(i t Lap / 2)`` is applied exactly as a Fourier multiplier.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
from scipy import fft as sfft

from . import _io
from .coeffs import CoefficientModel, radial_samples, validate_decay
from .errors import DimensionError, NormDriftError


@dataclass(frozen=True, eq=False)
class WaveField:
    """Samples of ``u(t, .)`` on ``[-L, L)^n`` with ``N`` points per axis."""

    values: np.ndarray
    L: float
    t: float = 0.0

    def __post_init__(self):
        v = np.asarray(self.values, dtype=complex)
        if v.ndim < 1 or len(set(v.shape)) != 1:
            raise DimensionError("field values must be a square array with N points per axis")
        if not self.L > 0:
            raise ValueError("half-width L must be positive")
        if not np.all(np.isfinite(v)):
            raise ValueError("field contains non-finite values")
        object.__setattr__(self, "values", v)

    @property
    def n(self) -> int:
        return self.values.ndim

    @property
    def N(self) -> int:
        return self.values.shape[0]

    @property
    def dx(self) -> float:
        return 2.0 * self.L / self.N

    def axis(self) -> np.ndarray:
        return -self.L + self.dx * np.arange(self.N)

    def points(self) -> np.ndarray:
        """Grid points with shape ``(N,)*n + (n,)``."""
        ax = self.axis()
        return np.stack(np.meshgrid(*([ax] * self.n), indexing="ij"), axis=-1)

    def wavenumbers(self) -> np.ndarray:
        return 2.0 * np.pi * np.fft.fftfreq(self.N, self.dx)

    def norm(self) -> float:
        return float(math.sqrt(np.sum(np.abs(self.values) ** 2) * self.dx ** self.n))

    def with_values(self, values, t=None) -> "WaveField":
        return WaveField(values, self.L, self.t if t is None else t)

    def describe(self) -> dict:
        return {"n": self.n, "L": self.L, "N": self.N, "t": self.t}

    # -- serialisation ---------------------------------------------------------
    def save(self, stem) -> tuple[Path, Path]:
        """Write ``<stem>.bin`` (little-endian complex128) and ``<stem>.json``."""
        stem = Path(stem)
        binp = stem.with_suffix(".bin")
        jsp = stem.with_suffix(".json")
        np.ascontiguousarray(self.values, dtype="<c16").tofile(binp)
        meta = {**self.describe(), "dtype": "complex128", "byte_order": "little", "layout": "C",
                "units": _io.UNITS}
        jsp.write_text(_io.dumps(meta, indent=2) + "\n")
        return binp, jsp

    @classmethod
    def load(cls, stem) -> "WaveField":
        stem = Path(stem)
        meta = json.loads(stem.with_suffix(".json").read_text())
        dtype = {"complex128": "<c16", "complex64": "<c8"}[meta.get("dtype", "complex128")]
        vals = np.fromfile(stem.with_suffix(".bin"), dtype=dtype).astype(complex)
        vals = vals.reshape((int(meta["N"]),) * int(meta["n"]))
        return cls(vals, float(meta["L"]), float(meta["t"]))

    def to_csv(self, path, meta=None):
        if self.n != 1:
            raise DimensionError("CSV export is available for 1D fields only")
        rows = np.column_stack([self.axis(), self.values.real, self.values.imag])
        head = self.describe()
        if meta:
            head.update(meta)
        return _io.write_table(path, ["x", "re", "im"], rows, head)


def field_from_function(func, n: int, L: float, N: int, t: float = 0.0) -> WaveField:
    """Sample ``func`` (taking points with trailing axis ``n``) on the periodic grid."""
    ax = -L + (2.0 * L / N) * np.arange(N)
    pts = np.stack(np.meshgrid(*([ax] * n), indexing="ij"), axis=-1)
    return WaveField(np.asarray(func(pts), dtype=complex).reshape((N,) * n), L, t)


def gaussian_field(n: int = 1, L: float = 40.0, N: int = 1024, center=0.0, momentum=0.0, width: float = 1.0):
    """``exp(-|x - c|^2 / (2 w^2) + i p.x)`` sampled on the grid."""
    c = np.broadcast_to(np.asarray(center, dtype=float), (n,))
    p = np.broadcast_to(np.asarray(momentum, dtype=float), (n,))

    def f(x):
        d = x - c
        return np.exp(-np.sum(d * d, axis=-1) / (2.0 * width ** 2) + 1j * (x @ p))

    return field_from_function(f, n, L, N)


def _k2(field: WaveField) -> np.ndarray:
    k = field.wavenumbers()
    grids = np.meshgrid(*([k] * field.n), indexing="ij")
    return sum(g * g for g in grids)


def free_propagate(field: WaveField, t: float) -> WaveField:
    """Exact ``exp(i t Lap / 2)``: multiply the spectrum by ``exp(-i t |k|^2 / 2)``."""
    if t == 0:
        return field.with_values(field.values.copy())
    spec = np.fft.fftn(field.values) * np.exp(-0.5j * t * _k2(field))
    return field.with_values(np.fft.ifftn(spec), field.t + t)


@dataclass(frozen=True)
class SolverConfig:
    """Time stepping parameters.

    ``dt`` defaults to ``stability * (L / N)^2``; ``drift_tol`` bounds the
    relative change of the L2 norm over the whole run.
    """

    dt: float | None = None
    scheme: str = "rk4"
    drift_tol: float = 1e-6
    stability: float = 0.5
    check_model: bool = True

    def __post_init__(self):
        if self.scheme != "rk4":
            raise ValueError(f"unknown scheme {self.scheme!r}")
        if self.dt is not None and not self.dt > 0:
            raise ValueError("dt must be positive")
        if not self.drift_tol > 0:
            raise ValueError("drift tolerance must be positive")

    def step_for(self, field: WaveField) -> float:
        limit = self.stability * (field.L / field.N) ** 2
        if self.dt is None:
            return limit
        if self.dt > limit * (1 + 1e-12):
            raise ValueError(f"dt = {self.dt} exceeds the stability guidance {limit:.3e} = c (L/N)^2")
        return self.dt


@dataclass
class NormLog:
    times: np.ndarray
    norms: np.ndarray

    @property
    def drift(self) -> float:
        return float(np.max(np.abs(self.norms / self.norms[0] - 1.0)))

    def to_csv(self, path, meta=None):
        return _io.write_table(path, ["t", "norm"], np.column_stack([self.times, self.norms]), meta)


class _Operator:
    """Applies ``L u = i (1/2 sum d_j a_jk d_k u - V u)`` at a given time."""

    def __init__(self, model: CoefficientModel, field: WaveField):
        self.model = model
        self.n = field.n
        self.pts = field.points()
        k = field.wavenumbers()
        self.ik = []
        for ax in range(self.n):
            sh = [1] * self.n
            sh[ax] = field.N
            self.ik.append((1j * k).reshape(sh))
        self._cache_t = None
        self.static = model.time_independent
        self._load(0.0)

    def _load(self, t):
        if self._cache_t is not None and (self.static or t == self._cache_t):
            return
        A = self.model.metric(t, self.pts)  # (..., n, n)
        self.diag = bool(np.all(A == A[..., :1, :1] * np.eye(self.n)))
        self.A = A[..., 0, 0] if self.diag else A
        self.V = self.model.potential(t, self.pts)
        self._cache_t = t

    def __call__(self, t, u):
        self._load(t)
        uh = sfft.fftn(u)
        div = 0.0
        if self.diag:
            for j in range(self.n):
                flux = self.A * sfft.ifftn(self.ik[j] * uh)
                div = div + self.ik[j] * sfft.fftn(flux)
        else:
            grads = [sfft.ifftn(ik * uh) for ik in self.ik]
            for j in range(self.n):
                flux = sum(self.A[..., j, k] * grads[k] for k in range(self.n))
                div = div + self.ik[j] * sfft.fftn(flux)
        return 1j * (0.5 * sfft.ifftn(div) - self.V * u)


def propagate(model: CoefficientModel, field: WaveField, t0: float, t1: float, cfg: SolverConfig | None = None):
    """Advance ``field`` (taken as ``u(t0)``) to ``t1`` with RK4.

    Returns
    -------
    (WaveField, NormLog)

    Raises
    ------
    NormDriftError
        When the relative norm change exceeds ``cfg.drift_tol`` or NaNs appear;
        ``err.step`` is the offending step index.
    """
    cfg = cfg or SolverConfig()
    if field.n != model.n:
        raise DimensionError("field and model dimensions differ")
    if cfg.check_model:
        samples = radial_samples(model.n, r_max=field.L * math.sqrt(model.n), count=200)
        report = validate_decay(model, 1, samples, times=(t0, t1))
        if not report.passed:
            raise ValueError("model fails the decay conditions at the grid scale")
    span = float(t1) - float(t0)
    h_max = cfg.step_for(field)
    steps = int(math.ceil(abs(span) / h_max - 1e-9)) if span != 0 else 0
    h = span / steps if steps else 0.0
    op = _Operator(model, field)
    u = field.values.copy()
    norms = np.empty(steps + 1)
    times = t0 + h * np.arange(steps + 1)
    dvol = field.dx ** field.n
    norms[0] = math.sqrt(np.sum(np.abs(u) ** 2) * dvol)
    for i in range(steps):
        t = times[i]
        k1 = op(t, u)
        k2 = op(t + 0.5 * h, u + 0.5 * h * k1)
        k3 = op(t + 0.5 * h, u + 0.5 * h * k2)
        k4 = op(t + h, u + h * k3)
        u = u + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        nrm = math.sqrt(np.sum(np.abs(u) ** 2) * dvol)
        norms[i + 1] = nrm
        if not math.isfinite(nrm):
            raise NormDriftError(f"non-finite field at step {i + 1}", step=i + 1)
        if abs(nrm / norms[0] - 1.0) > cfg.drift_tol:
            raise NormDriftError(
                f"norm drift {abs(nrm / norms[0] - 1.0):.3e} exceeds {cfg.drift_tol:.1e} at step {i + 1}",
                step=i + 1,
            )
    out = WaveField(u, field.L, float(t1))
    return out, NormLog(times, norms)
