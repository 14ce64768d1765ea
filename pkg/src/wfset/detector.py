"""Wave front set detection by lambda-sweeps of the wave packet transform.

For a query ``(t, x0, xi0)`` the detector samples ``K x Gamma x [1/a, a]`` and
evaluates

    S(lam) = sup |W_{phi_lam(-t)} u0(y, eta)|

where ``(y, eta)`` is either the back-propagated point
``(x(0; t, x, lam xi), xi(0; t, x, lam xi))`` (``full-flow``) or the free
shift ``(x - t lam xi, lam xi)`` (``free-shift``).  Rapid decay of ``S`` means
``(x0, xi0)`` is not in the wave front set of ``u(t)``; the decay is
measured as a log-log slope and compared with a target order ``N``.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import _io
from .coeffs import CoefficientModel
from .errors import DimensionError, NyquistError
from .flow import ATOL, RTOL, flow_points, phase_lattice
from .propagator import WaveField
from .windows import WindowSpec, evolved, gaussian_window, hermite_window
from .wpt import AnalyticSignal, wpt_points

MODES = ("full-flow", "free-shift")
NOT_IN_WF = "not-in-WF-up-to-order-N"
IN_WF = "in-WF-at-order"
INCONCLUSIVE = "inconclusive"


def default_lambdas(lam_min: float = 8.0, lam_max: float = 1024.0, count: int = 16) -> np.ndarray:
    return np.geomspace(lam_min, lam_max, count)


@dataclass(frozen=True, eq=False)
class DetectionQuery:
    """Candidate point, neighborhoods, lambda grid and sampling densities.

    ``K = B_r(x0)``, ``Gamma = {xi : cos angle(xi, xi0) > 1 - gamma}`` and
    covector lengths in ``[1/a, a]``.  ``per_axis``, ``directions`` and
    ``radii`` set the lattice density (see :func:`wfset.flow.phase_lattice`).
    """

    t: float
    x0: np.ndarray
    xi0: np.ndarray
    r: float = 1.0
    gamma: float = 0.5
    a: float = 1.5
    lambdas: np.ndarray = field(default_factory=default_lambdas)
    order: int = 4
    window: WindowSpec | None = None
    mode: str = "full-flow"
    per_axis: int = 5
    directions: int = 5
    radii: int = 3
    margin: float = 0.5
    residual_threshold: float = 0.25
    seed: int | None = None

    def __post_init__(self):
        x0 = np.atleast_1d(np.asarray(self.x0, dtype=float))
        xi0 = np.atleast_1d(np.asarray(self.xi0, dtype=float))
        if x0.shape != xi0.shape:
            raise DimensionError("x0 and xi0 must have the same dimension")
        if not np.any(xi0 != 0):
            raise ValueError("xi0 must be nonzero")
        if not self.r > 0:
            raise ValueError("radius r must be positive")
        if not 0 < self.gamma < 1:
            raise ValueError("cone parameter gamma must lie in (0, 1)")
        if not self.a >= 1:
            raise ValueError("annulus bound a must be at least 1")
        lam = np.asarray(self.lambdas, dtype=float).ravel()
        if lam.size == 0 or np.any(np.diff(lam) <= 0) or lam[0] < 1:
            raise ValueError("lambda grid must be strictly increasing with minimum >= 1")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        if not self.margin > 0:
            raise ValueError("margin must be positive")
        object.__setattr__(self, "x0", x0)
        object.__setattr__(self, "xi0", xi0)
        object.__setattr__(self, "lambdas", lam)
        if self.window is None:
            object.__setattr__(self, "window", gaussian_window(x0.size))
        elif self.window.n != x0.size:
            raise DimensionError("window dimension differs from the query")

    @property
    def n(self) -> int:
        return self.x0.size

    def lattice(self):
        """Sample lattice ``(X, XI)``; with a ``seed`` the base points are jittered reproducibly."""
        X, XI = phase_lattice(self.x0, self.r, self.xi0, self.gamma, self.a,
                              self.per_axis, self.directions, self.radii)
        if self.seed is not None:
            h = 2.0 * self.r / (self.per_axis + 1)
            rng = np.random.default_rng(self.seed)
            base, inv = np.unique(X, axis=0, return_inverse=True)
            shifted = base + rng.uniform(-0.25 * h, 0.25 * h, base.shape)
            far = np.linalg.norm(shifted - self.x0, axis=1) >= self.r
            shifted[far] = base[far]
            X = shifted[inv.ravel()]
        return X, XI

    def with_(self, **kw) -> "DetectionQuery":
        return replace(self, **kw)

    def describe(self) -> dict:
        X, _ = self.lattice()
        return {
            "t": self.t, "x0": self.x0, "xi0": self.xi0, "r": self.r, "gamma": self.gamma,
            "a": self.a, "lambdas": self.lambdas, "order": self.order, "mode": self.mode,
            "window": self.window.describe(), "per_axis": self.per_axis,
            "directions": self.directions, "radii": self.radii, "lattice_size": len(X),
            "margin": self.margin, "residual_threshold": self.residual_threshold, "seed": self.seed,
        }


# -- evaluation points ----------------------------------------------------------------


def evaluation_points(model: CoefficientModel | None, q: DetectionQuery, lam: float, X=None, XI=None, jobs: int = 1):
    """Points ``(y, eta)`` where the transform of ``u0`` is read for lattice ``(X, XI)``."""
    if X is None:
        X, XI = q.lattice()
    P = lam * XI
    if q.mode == "free-shift" or q.t == 0:
        return X - q.t * P, P
    if model is None:
        raise ValueError("full-flow mode needs a coefficient model")
    if model.n != q.n:
        raise DimensionError("model and query dimensions differ")
    return flow_points(model, q.t, X, P, 0.0, RTOL, ATOL, jobs=jobs)


def nyquist_budget(u0: WaveField, q: DetectionQuery, lam: float):
    """Require ``2 a lam <= pi N / L`` for a sampled datum."""
    bound = math.pi * u0.N / u0.L
    if 2.0 * q.a * lam > bound:
        raise NyquistError(f"Nyquist budget exceeded: 2 a lambda = {2.0 * q.a * lam:.6g} > pi N / L = {bound:.6g}")


def _values(u0, model, q, lam, jobs=1):
    X, XI = q.lattice()
    if isinstance(u0, WaveField):
        nyquist_budget(u0, q, lam)
    elif not isinstance(u0, AnalyticSignal):
        raise TypeError("u0 must be a WaveField or an AnalyticSignal")
    Y, ETA = evaluation_points(model, q, lam, X, XI, jobs)
    w = evolved(q.window, lam, -q.t)
    vals = np.abs(wpt_points(u0, w, Y, ETA))
    return X, XI, Y, ETA, vals


def criterion_sup(u0, model: CoefficientModel | None, q: DetectionQuery, lam: float, jobs: int = 1) -> float:
    """Lattice supremum of ``|W_{phi_lam(-t)} u0|`` at the mode's evaluation points.

    Raises
    ------
    NyquistError
        For a sampled ``u0`` whose grid cannot carry frequencies up to ``2 a lam``.
    FlowError
        If an orbit fails in full-flow mode.
    """
    return float(np.max(_values(u0, model, q, lam, jobs)[-1]))


@dataclass
class SweepResult:
    lambdas: np.ndarray
    sup: np.ndarray
    worst: list
    mode: str

    def rows(self) -> np.ndarray:
        return np.column_stack([self.lambdas, self.sup])

    def to_csv(self, path, meta=None):
        head = {"mode": self.mode}
        if meta:
            head.update(meta)
        cols = ["lambda", "sup", "mode"]
        rows = [[_io.format_row([lam, s]), self.mode] for lam, s in zip(self.lambdas, self.sup)]
        path = Path(path)
        with path.open("w") as fh:
            fh.write("# " + _io.dumps({**head, "units": _io.UNITS}) + "\n")
            fh.write(",".join(cols) + "\n")
            for body, mode in rows:
                fh.write(f"{body},{mode}\n")
        return path


def sweep(u0, model, q: DetectionQuery, jobs: int = 1) -> SweepResult:
    """``S(lam)`` over the query grid, with the maximising lattice point per lambda.

    Lambdas are evaluated independently (in a thread pool when ``jobs > 1``)
    and reduced in grid order.  A sampled ``u0`` is checked against the
    Nyquist budget at the largest lambda before any work is done.
    """
    if isinstance(u0, WaveField):
        nyquist_budget(u0, q, q.lambdas[-1])

    def one(lam):
        X, XI, Y, ETA, vals = _values(u0, model, q, lam)
        j = int(np.argmax(vals))
        return float(vals[j]), {"lambda": float(lam), "x": X[j], "xi": XI[j], "y": Y[j], "eta": ETA[j],
                                "value": float(vals[j])}

    if jobs > 1 and q.lambdas.size > 1:
        with ThreadPoolExecutor(min(int(jobs), q.lambdas.size)) as pool:
            out = list(pool.map(one, q.lambdas))
    else:
        out = [one(lam) for lam in q.lambdas]
    return SweepResult(q.lambdas.copy(), np.array([o[0] for o in out]), [o[1] for o in out], q.mode)


# -- fitting and classification ------------------------------------------------------


@dataclass
class DecayFit:
    """Least-squares line through ``(log lam, log S)``.

    ``residual`` is the RMS deviation of ``log S`` from the line and
    ``curvature`` the quadratic coefficient of a parabola fit (negative when
    the decay accelerates).  ``exact_zero`` marks sweeps where ``S`` vanished
    (to double precision) at some lambda; the slope is then ``-inf``.
    """

    lambdas: np.ndarray
    sup: np.ndarray
    slope: float
    intercept: float
    residual: float
    curvature: float = 0.0
    exact_zero: bool = False

    def to_dict(self) -> dict:
        return {"lambdas": self.lambdas, "sup": self.sup, "slope": self.slope, "intercept": self.intercept,
                "residual": self.residual, "curvature": self.curvature, "exact_zero": self.exact_zero}


def fit_decay(pairs) -> DecayFit:
    """Fit ``log S = slope log lam + intercept`` by ordinary least squares.

    ``pairs`` is a sequence of ``(lam, S)`` or a :class:`SweepResult`.
    """
    if isinstance(pairs, SweepResult):
        lam, S = pairs.lambdas, pairs.sup
    else:
        arr = np.asarray(pairs, dtype=float).reshape(-1, 2)
        lam, S = arr[:, 0], arr[:, 1]
    if lam.size < 4:
        raise ValueError("decay fits need at least 4 (lambda, S) pairs")
    if np.any(lam <= 0):
        raise ValueError("lambda values must be positive")
    if np.any(S < 0) or not np.all(np.isfinite(S)):
        raise ValueError("sup values must be finite and nonnegative")
    if np.any(S == 0):
        return DecayFit(lam, S, -math.inf, math.nan, 0.0, 0.0, True)
    u, v = np.log(lam), np.log(S)
    slope, intercept = np.polyfit(u, v, 1)
    res = v - (slope * u + intercept)
    curv = float(np.polyfit(u, v, 2)[0]) if lam.size >= 4 else 0.0
    return DecayFit(lam, S, float(slope), float(intercept), float(math.sqrt(np.mean(res * res))), curv)


@dataclass
class Verdict:
    """Order-qualified outcome of a sweep."""

    classification: str
    slope: float
    order: int
    margin: float
    residual: float
    residual_threshold: float
    fit: DecayFit | None = None
    worst: list = field(default_factory=list)
    delta1: np.ndarray | None = None
    delta2: np.ndarray | None = None
    mode: str = ""
    reason: str = ""

    @property
    def label(self) -> str:
        return self.classification.replace("order-N", f"order-{self.order}")

    def to_dict(self) -> dict:
        d = {"classification": self.classification, "label": self.label, "slope": self.slope,
             "order": self.order, "margin": self.margin, "residual": self.residual,
             "residual_threshold": self.residual_threshold, "mode": self.mode, "reason": self.reason,
             "worst_points": self.worst}
        if self.fit is not None:
            d["fit"] = self.fit.to_dict()
        if self.delta1 is not None:
            d["delta1"] = self.delta1
            d["delta2"] = self.delta2
        return d


def classify(fit: DecayFit, N: int, margin: float = 0.5, residual_threshold: float = 0.25) -> Verdict:
    """Compare the fitted slope with ``-N``.

    * not in WF up to order ``N``: ``S`` vanished, or ``slope <= -N - margin``
      with the fit residual below ``residual_threshold`` (a large residual is
      accepted when ``log S`` is concave in ``log lam``, i.e. faster than any
      power);
    * in WF at this order: ``slope >= -N + margin`` with a small residual;
    * inconclusive otherwise.
    """
    if not margin > 0:
        raise ValueError("margin must be positive")
    base = dict(order=int(N), margin=float(margin), residual=fit.residual,
                residual_threshold=float(residual_threshold), fit=fit)
    if fit.exact_zero:
        return Verdict(NOT_IN_WF, fit.slope, reason="sup vanished at some lambda", **base)
    s = fit.slope
    if s <= -N - margin:
        if fit.residual <= residual_threshold:
            return Verdict(NOT_IN_WF, s, reason="slope below -N - margin", **base)
        if fit.curvature < 0:
            return Verdict(NOT_IN_WF, s, reason="slope below -N - margin, concave (super-polynomial) decay", **base)
        return Verdict(INCONCLUSIVE, s, reason="fit residual too large", **base)
    if s >= -N + margin:
        if fit.residual <= residual_threshold:
            return Verdict(IN_WF, s, reason="slope above -N + margin", **base)
        return Verdict(INCONCLUSIVE, s, reason="fit residual too large", **base)
    return Verdict(INCONCLUSIVE, s, reason="slope within margin of -N", **base)


# -- shrunken neighborhoods and flow diagnostics ---------------------------------------


@dataclass(frozen=True)
class Ball:
    center: np.ndarray
    radius: float

    def contains(self, x) -> bool:
        return bool(np.linalg.norm(np.asarray(x, dtype=float) - self.center) < self.radius)


@dataclass(frozen=True)
class Cone:
    """``{xi : xi . axis / (|xi| |axis|) > threshold}``."""

    axis: np.ndarray
    threshold: float

    def cosine(self, xi) -> float:
        xi = np.asarray(xi, dtype=float)
        return float(xi @ self.axis / (np.linalg.norm(xi) * np.linalg.norm(self.axis)))

    def contains(self, xi) -> bool:
        return np.linalg.norm(xi) > 0 and self.cosine(xi) > self.threshold


def cone_threshold_inner(gamma: float) -> float:
    return math.sqrt((2.0 - gamma) / 2.0)


def shrink_neighborhoods(r: float, gamma: float, x0, xi0) -> tuple[Ball, Cone]:
    """``K1 = B_{r/2}(x0)`` and the cone with cosine threshold ``sqrt((2 - gamma)/2)``."""
    if not 0 < gamma < 1:
        raise ValueError("cone parameter gamma must lie in (0, 1)")
    if not r > 0:
        raise ValueError("radius r must be positive")
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    xi0 = np.atleast_1d(np.asarray(xi0, dtype=float))
    return Ball(x0, 0.5 * r), Cone(xi0, cone_threshold_inner(gamma))


@dataclass
class DeltaReport:
    """Flow versus free-shift discrepancies on the query lattice.

    ``delta1 = sup |x(0; t, x, lam xi) - (x - t lam xi)|`` and
    ``delta2 = sup |xi(0; t, x, lam xi) - lam xi|``.  ``lambda1`` is the
    smallest grid value from which both stay below ``r/2`` and
    ``|xi0| sqrt(gamma/2)`` respectively.
    """

    lambdas: np.ndarray
    delta1: np.ndarray
    delta2: np.ndarray
    bound1: float
    bound2: float
    lambda1: float | None

    def slopes(self) -> tuple[float, float]:
        u = np.log(self.lambdas)
        return (float(np.polyfit(u, np.log(self.delta1), 1)[0]),
                float(np.polyfit(u, np.log(self.delta2), 1)[0]))

    def to_dict(self) -> dict:
        d = {"lambdas": self.lambdas, "delta1": self.delta1, "delta2": self.delta2,
             "bound1": self.bound1, "bound2": self.bound2, "lambda1": self.lambda1}
        if np.all(self.delta1 > 0) and np.all(self.delta2 > 0) and self.lambdas.size >= 2:
            d["slope1"], d["slope2"] = self.slopes()
        return d


def delta_diagnostics(model: CoefficientModel, q: DetectionQuery, lambdas=None, jobs: int = 1) -> DeltaReport:
    lambdas = q.lambdas if lambdas is None else np.asarray(lambdas, dtype=float)
    X, XI = q.lattice()
    d1, d2 = [], []
    for lam in lambdas:
        P = lam * XI
        X0, P0 = flow_points(model, q.t, X, P, 0.0, RTOL, ATOL, jobs=jobs)
        d1.append(float(np.max(np.linalg.norm(X0 - (X - q.t * P), axis=1))))
        d2.append(float(np.max(np.linalg.norm(P0 - P, axis=1))))
    d1, d2 = np.array(d1), np.array(d2)
    b1 = 0.5 * q.r
    b2 = float(np.linalg.norm(q.xi0)) * math.sqrt(q.gamma / 2.0)
    ok = (d1 <= b1) & (d2 <= b2)
    lam1 = None
    for i in range(lambdas.size):
        if ok[i:].all():
            lam1 = float(lambdas[i])
            break
    return DeltaReport(np.asarray(lambdas, dtype=float), d1, d2, b1, b2, lam1)


# -- pipeline -------------------------------------------------------------------------


def detect(u0, model, q: DetectionQuery, jobs: int = 1, diagnostics: bool = True) -> tuple[Verdict, SweepResult]:
    """Sweep, fit and classify one query with its own window."""
    res = sweep(u0, model, q, jobs)
    fit = fit_decay(res)
    v = classify(fit, q.order, q.margin, q.residual_threshold)
    v.worst = res.worst
    v.mode = q.mode
    if diagnostics and model is not None and q.t != 0:
        dr = delta_diagnostics(model, q, jobs=jobs)
        v.delta1, v.delta2 = dr.delta1, dr.delta2
    return v, res


def window_family(n: int, orders=(0, 1, 2)) -> list[WindowSpec]:
    """Gaussian plus Hermite windows ``H_k`` (``k >= 1``) in every axis."""
    out = [gaussian_window(n)]
    for k in orders:
        if k > 0:
            out.append(hermite_window([k] * n))
    return out


@dataclass
class DetectionReport:
    query: DetectionQuery
    verdicts: list
    sweeps: list
    deltas: DeltaReport | None = None

    @property
    def verdict(self) -> Verdict:
        return self.verdicts[0]

    def to_dict(self) -> dict:
        d = {"query": self.query.describe(), "units": _io.UNITS,
             "windows": [{"window": s_q.window.describe(), **v.to_dict()}
                         for s_q, v in zip(self._window_queries(), self.verdicts)]}
        if self.deltas is not None:
            d["delta"] = self.deltas.to_dict()
        return d

    def _window_queries(self):
        return [self.query.with_(window=s["window"]) for s in self.sweeps]

    def write(self, out_dir, stem: str = "detect"):
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        jp = _io.write_json(out / f"{stem}.json", self.to_dict())
        paths = [jp]
        for i, s in enumerate(self.sweeps):
            label = s["window"].label or f"w{i}"
            paths.append(s["result"].to_csv(out / f"{stem}_{label}.csv", {"window": s["window"].describe()}))
        return paths


def detect_family(u0, model, q: DetectionQuery, windows=None, jobs: int = 1) -> DetectionReport:
    """Run :func:`detect` for each window of a finite family; one verdict per window."""
    windows = windows or [q.window]
    verdicts, sweeps = [], []
    for w in windows:
        v, res = detect(u0, model, q.with_(window=w), jobs, diagnostics=False)
        verdicts.append(v)
        sweeps.append({"window": w, "result": res})
    deltas = None
    if model is not None and q.t != 0:
        deltas = delta_diagnostics(model, q, jobs=jobs)
        for v in verdicts:
            v.delta1, v.delta2 = deltas.delta1, deltas.delta2
    return DetectionReport(q, verdicts, sweeps, deltas)
