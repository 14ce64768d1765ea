"""Time-dependent coefficient models for the variable-coefficient Schrödinger operator.

A model supplies the metric ``a_jk(t, x)``, the potential ``V(t, x)`` and their
spatial derivatives in closed form.  The Hamiltonian used throughout the package is

    h(t, x, xi) = 1/2 * sum_jk a_jk(t, x) xi_j xi_k + V(t, x),

which is the principal symbol of ``-1/2 sum d_j a_jk d_k + V``.

Built-in models are isotropic radial perturbations of the flat metric,
``a_jk = delta_jk (1 + m(t) eps_a G(|x|^2))`` and ``V = m(t) eps_V P(|x|^2)``,
where ``G`` and ``P`` are one of a few profiles and ``m(t)`` is an optional
bounded time modulation.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import ConfigError, DerivativeOrderError, DimensionError

PROFILE_CODES = {"none": 0, "gaussian": 1, "algebraic": 2, "quadratic": 3}
MODULATION_CODES = {"none": 0, "sin": 1, "cos": 2}
MAX_ORDER = 4


def _as_point(x, n: int) -> np.ndarray:
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.shape[-1] != n:
        raise DimensionError(f"expected a point of dimension {n}, got shape {x.shape}")
    return x


def multi_indices(n: int, order: int) -> list[tuple[int, ...]]:
    """All multi-indices ``alpha`` in ``Z_+^n`` with ``|alpha| == order``."""
    out = []
    for combo in itertools.combinations_with_replacement(range(n), order):
        alpha = [0] * n
        for i in combo:
            alpha[i] += 1
        out.append(tuple(alpha))
    return out


def _alpha_to_indices(alpha: Sequence[int]) -> tuple[int, ...]:
    idx = []
    for axis, count in enumerate(alpha):
        idx.extend([axis] * int(count))
    return tuple(idx)


def radial_chain_terms(indices: Sequence[int]) -> list[tuple[float, int, tuple[int, ...]]]:
    """Chain-rule expansion of ``d_{i1} ... d_{im} F(|x|^2)``.

    Returns terms ``(coef, k, xs)`` meaning ``coef * F^(k)(s) * prod(x[i] for i in xs)``.
    """
    terms: dict[tuple[int, tuple[int, ...]], float] = {(0, ()): 1.0}
    for m in indices:
        new: dict[tuple[int, tuple[int, ...]], float] = {}
        for (k, xs), c in terms.items():
            # d_m F^(k)(s) = 2 x_m F^(k+1)(s)
            key = (k + 1, tuple(sorted(xs + (m,))))
            new[key] = new.get(key, 0.0) + 2.0 * c
            # d_m of the monomial
            hits = xs.count(m)
            if hits:
                rest = list(xs)
                rest.remove(m)
                key = (k, tuple(rest))
                new[key] = new.get(key, 0.0) + hits * c
        terms = {key: c for key, c in new.items() if c != 0.0}
    return [(c, k, xs) for (k, xs), c in sorted(terms.items())]


def _falling(p: float, k: int) -> float:
    out = 1.0
    for i in range(k):
        out *= p - i
    return out


@dataclass(frozen=True)
class RadialProfile:
    """A scalar function ``F(s)`` of ``s = |x|^2`` with closed-form derivatives.

    ``kind`` is one of ``none``, ``gaussian`` (``exp(-s)``), ``algebraic``
    (``(1+s)^(power/2)``, i.e. ``<x>^power``) or ``quadratic`` (``s``).
    """

    kind: str = "none"
    power: float = 0.0

    def __post_init__(self):
        if self.kind not in PROFILE_CODES:
            raise ValueError(f"unknown profile kind {self.kind!r}")

    def deriv(self, s: np.ndarray, k: int) -> np.ndarray:
        s = np.asarray(s, dtype=float)
        if self.kind == "none":
            return np.zeros_like(s)
        if self.kind == "gaussian":
            return (-1.0) ** k * np.exp(-s)
        if self.kind == "algebraic":
            p = 0.5 * self.power
            return _falling(p, k) * (1.0 + s) ** (p - k)
        # quadratic
        if k == 0:
            return s.copy()
        if k == 1:
            return np.ones_like(s)
        return np.zeros_like(s)

    def weighted_sup_bound(self, k: int, degree: int, weight: float) -> float:
        """Upper bound of ``sup_x |x|^degree |F^(k)(|x|^2)| (1+|x|)^weight``.

        Returns ``inf`` when the quantity is unbounded.
        """
        if self.kind == "none":
            return 0.0
        if self.kind == "gaussian":
            # |x|^d <= (1+|x|)^d; maximise (1+r)^E exp(-r^2)
            e = degree + weight
            if e <= 0:
                return 1.0
            r = 0.5 * (-1.0 + math.sqrt(1.0 + 2.0 * e))
            return (1.0 + r) ** e * math.exp(-r * r)
        if self.kind == "algebraic":
            c = abs(_falling(0.5 * self.power, k))
            if c == 0.0:
                return 0.0
            # |x|^d <= <x>^d and <x> <= 1+|x| <= sqrt(2) <x>
            e = self.power - 2 * k + degree
            if weight >= 0:
                if e + weight > 1e-12:
                    return math.inf
                return c * 2.0 ** (0.5 * weight)
            if e + weight > 1e-12:
                return math.inf
            return c
        # quadratic: F = s, F' = 1
        if k >= 2:
            return 0.0
        e = degree + 2 * (1 - k)
        if e + weight > 0:
            return math.inf
        return 1.0

    @property
    def code(self) -> int:
        return PROFILE_CODES[self.kind]


class CoefficientModel:
    """Base class for coefficient models.

    Subclasses provide ``metric_derivative`` and ``potential_derivative`` for
    multi-indices up to ``max_order``; gradients, Hamiltonian derivatives and
    declared decay constants are derived from those.
    """

    n: int
    rho: float
    max_order: int = 1

    def metric_derivative(self, t: float, x, alpha) -> np.ndarray:
        """``d_x^alpha a_jk(t, x)`` with shape ``x.shape[:-1] + (n, n)``."""
        raise NotImplementedError

    def potential_derivative(self, t: float, x, alpha) -> np.ndarray:
        """``d_x^alpha V(t, x)`` with shape ``x.shape[:-1]``."""
        raise NotImplementedError

    def declared_constants(self, order: int) -> tuple[float, float]:
        """Nominal ``C_alpha`` for metric and potential at derivative order ``order``."""
        raise NotImplementedError

    # -- derived quantities -------------------------------------------------
    def _check_order(self, alpha):
        if sum(alpha) > self.max_order:
            raise DerivativeOrderError(
                f"derivative order {sum(alpha)} exceeds declared order {self.max_order}"
            )

    def metric(self, t: float, x) -> np.ndarray:
        return self.metric_derivative(t, x, (0,) * self.n)

    def potential(self, t: float, x) -> np.ndarray:
        return self.potential_derivative(t, x, (0,) * self.n)

    def metric_gradient(self, t: float, x) -> np.ndarray:
        """Array ``g[..., l, j, k] = d_{x_l} a_jk``."""
        x = _as_point(x, self.n)
        grads = []
        for l in range(self.n):
            alpha = tuple(int(i == l) for i in range(self.n))
            grads.append(self.metric_derivative(t, x, alpha))
        return np.stack(grads, axis=-3)

    def potential_gradient(self, t: float, x) -> np.ndarray:
        x = _as_point(x, self.n)
        grads = []
        for l in range(self.n):
            alpha = tuple(int(i == l) for i in range(self.n))
            grads.append(self.potential_derivative(t, x, alpha))
        return np.stack(grads, axis=-1)

    @property
    def is_flat(self) -> bool:
        return False

    @property
    def time_independent(self) -> bool:
        return False

    def kernel_params(self):
        """Parameter vector understood by the compiled orbit kernel, or ``None``."""
        return None


@dataclass(frozen=True)
class RadialModel(CoefficientModel):
    """Isotropic radial perturbation of the flat metric plus a radial potential."""

    n: int = 1
    rho: float = 1.5
    metric_profile: RadialProfile = field(default_factory=RadialProfile)
    metric_eps: float = 0.0
    potential_profile: RadialProfile = field(default_factory=RadialProfile)
    potential_eps: float = 0.0
    time_modulation: str = "none"
    name: str = "custom"
    max_order: int = MAX_ORDER

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("dimension must be positive")
        if not self.rho > 1:
            raise ValueError("decay exponent rho must exceed 1")
        if self.time_modulation not in MODULATION_CODES:
            raise ValueError(f"unknown time modulation {self.time_modulation!r}")
        if self.metric_profile.kind == "quadratic":
            raise ValueError("quadratic profile is only available for the potential")
        # keep A(t, x) >= identity / 2
        if self.metric_profile.kind != "none" and self.metric_eps < 0:
            dip = -self.metric_eps * self.modulation_max * self.metric_profile.weighted_sup_bound(0, 0, 0.0)
            if dip > 0.5:
                raise ValueError("metric perturbation would break ellipticity")

    # -- time modulation ------------------------------------------------------
    def modulation(self, t: float) -> float:
        if self.time_modulation == "sin":
            return 1.0 + 0.5 * math.sin(t)
        if self.time_modulation == "cos":
            return 1.0 + 0.5 * math.cos(t)
        return 1.0

    @property
    def modulation_max(self) -> float:
        return 1.0 if self.time_modulation == "none" else 1.5

    @property
    def is_flat(self) -> bool:
        no_metric = self.metric_profile.kind == "none" or self.metric_eps == 0.0
        no_potential = self.potential_profile.kind == "none" or self.potential_eps == 0.0
        return no_metric and no_potential

    @property
    def time_independent(self) -> bool:
        return self.time_modulation == "none"

    # -- evaluators -----------------------------------------------------------
    def _radial_derivative(self, profile: RadialProfile, x: np.ndarray, alpha) -> np.ndarray:
        s = np.sum(x * x, axis=-1)
        out = np.zeros(x.shape[:-1])
        for coef, k, xs in radial_chain_terms(_alpha_to_indices(alpha)):
            mono = np.ones_like(s)
            for i in xs:
                mono = mono * x[..., i]
            out = out + coef * profile.deriv(s, k) * mono
        return out

    def metric_derivative(self, t, x, alpha):
        x = _as_point(x, self.n)
        alpha = tuple(int(a) for a in alpha)
        if len(alpha) != self.n:
            raise DimensionError("multi-index length must equal the dimension")
        self._check_order(alpha)
        pert = self.modulation(t) * self.metric_eps * self._radial_derivative(self.metric_profile, x, alpha)
        eye = np.eye(self.n)
        base = 1.0 if sum(alpha) == 0 else 0.0
        return (base + pert)[..., None, None] * eye

    def potential_derivative(self, t, x, alpha):
        x = _as_point(x, self.n)
        alpha = tuple(int(a) for a in alpha)
        if len(alpha) != self.n:
            raise DimensionError("multi-index length must equal the dimension")
        self._check_order(alpha)
        return self.modulation(t) * self.potential_eps * self._radial_derivative(
            self.potential_profile, x, alpha
        )

    def metric_gradient(self, t, x):
        x = _as_point(x, self.n)
        s = np.sum(x * x, axis=-1)
        g = self.modulation(t) * self.metric_eps * 2.0 * self.metric_profile.deriv(s, 1)
        grad_scalar = g[..., None] * x
        return grad_scalar[..., :, None, None] * np.eye(self.n)

    def potential_gradient(self, t, x):
        x = _as_point(x, self.n)
        s = np.sum(x * x, axis=-1)
        g = self.modulation(t) * self.potential_eps * 2.0 * self.potential_profile.deriv(s, 1)
        return g[..., None] * x

    def declared_constants(self, order: int) -> tuple[float, float]:
        """Rigorous per-order bounds for the weighted suprema in the decay conditions."""
        cm = cp = 0.0
        indices = _alpha_to_indices(multi_indices(self.n, order)[0])
        # the bound only depends on the term structure, which is worst for repeated indices
        for coef, k, xs in radial_chain_terms(indices):
            deg = len(xs)
            cm += abs(coef) * self.metric_profile.weighted_sup_bound(k, deg, self.rho + order)
            cp += abs(coef) * self.potential_profile.weighted_sup_bound(k, deg, self.rho - 2 + order)
        cm *= abs(self.metric_eps) * self.modulation_max
        cp *= abs(self.potential_eps) * self.modulation_max
        if self.potential_profile.kind == "quadratic" and not math.isfinite(cp):
            # no finite constant exists; declare the value the bound takes on the unit ball
            cp = abs(self.potential_eps) * self.modulation_max * 2.0 ** max(0.0, self.rho - 2 + order) * 2.0
        return (cm if cm > 0 else 0.0), (cp if cp > 0 else 0.0)

    def kernel_params(self) -> np.ndarray:
        mp = self.metric_profile
        pp = self.potential_profile
        return np.array(
            [
                float(self.n),
                float(mp.code),
                float(self.metric_eps),
                0.5 * mp.power,
                float(pp.code),
                float(self.potential_eps),
                0.5 * pp.power,
                float(MODULATION_CODES[self.time_modulation]),
            ],
            dtype=float,
        )


# -- built-in families ---------------------------------------------------------


def flat(n: int = 1, rho: float = 2.0) -> RadialModel:
    """Flat metric, zero potential."""
    return RadialModel(n=n, rho=rho, name="flat")


def bump(
    n: int = 1,
    epsilon: float = 0.1,
    potential_epsilon: float = 0.0,
    rho: float = 1.5,
    time_modulation: str = "none",
) -> RadialModel:
    """Gaussian bump: ``a = 1 + eps exp(-|x|^2)``, ``V = eps_V exp(-|x|^2)``."""
    return RadialModel(
        n=n,
        rho=rho,
        metric_profile=RadialProfile("gaussian"),
        metric_eps=epsilon,
        potential_profile=RadialProfile("gaussian"),
        potential_eps=potential_epsilon,
        time_modulation=time_modulation,
        name="bump",
    )


def longrange(
    n: int = 1,
    epsilon: float = 0.1,
    potential_epsilon: float = 0.0,
    rho: float = 1.5,
    potential_power: float | None = None,
    time_modulation: str = "none",
) -> RadialModel:
    """Algebraic long-range model.

    ``a = 1 + eps <x>^(-rho)`` and ``V = eps_V <x>^q`` with ``q <= 2 - rho``
    (default ``q = 2 - rho``).
    """
    q = 2.0 - rho if potential_power is None else float(potential_power)
    if q > 2.0 - rho + 1e-12:
        raise ValueError(f"potential power {q} exceeds 2 - rho = {2.0 - rho}")
    return RadialModel(
        n=n,
        rho=rho,
        metric_profile=RadialProfile("algebraic", -rho),
        metric_eps=epsilon,
        potential_profile=RadialProfile("algebraic", q),
        potential_eps=potential_epsilon,
        time_modulation=time_modulation,
        name="longrange",
    )


def quadratic(n: int = 1, epsilon: float = 1.0, rho: float = 1.5) -> RadialModel:
    """``V = eps |x|^2``; violates the sub-quadratic condition (negative fixture)."""
    return RadialModel(
        n=n,
        rho=rho,
        potential_profile=RadialProfile("quadratic"),
        potential_eps=epsilon,
        name="quadratic",
    )


MODEL_KEYS = {"family", "n", "rho", "epsilon", "potential_epsilon", "potential_power", "time_modulation"}


def model_from_config(section: dict) -> RadialModel:
    """Build a model from a ``[model]`` config table."""
    unknown = set(section) - MODEL_KEYS
    if unknown:
        raise ConfigError(f"unknown model key(s): {', '.join(sorted(unknown))}")
    family = section.get("family", "flat")
    n = int(section.get("n", 1))
    rho = float(section.get("rho", 1.5))
    tm = section.get("time_modulation", "none")
    try:
        if family == "flat":
            return flat(n, rho=rho if rho > 1 else 2.0)
        if family == "bump":
            return bump(
                n,
                float(section.get("epsilon", 0.1)),
                float(section.get("potential_epsilon", 0.0)),
                rho,
                tm,
            )
        if family == "longrange":
            power = section.get("potential_power")
            return longrange(
                n,
                float(section.get("epsilon", 0.1)),
                float(section.get("potential_epsilon", 0.0)),
                rho,
                None if power is None else float(power),
                tm,
            )
        if family == "quadratic":
            return quadratic(n, float(section.get("epsilon", 1.0)), rho)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    raise ConfigError(f"unknown model family {family!r}")


# -- operations -----------------------------------------------------------------


def metric_at(model: CoefficientModel, t: float, x) -> np.ndarray:
    """Metric matrix ``(a_jk(t, x))`` at a single point."""
    x = _as_point(x, model.n)
    if x.ndim != 1:
        raise DimensionError("metric_at expects a single point")
    return model.metric(t, x)


def hamiltonian(model: CoefficientModel, t: float, x, xi) -> float:
    x = _as_point(x, model.n)
    xi = _as_point(xi, model.n)
    A = model.metric(t, x)
    return float(0.5 * xi @ A @ xi + model.potential(t, x))


def hamiltonian_derivatives(model: CoefficientModel, t: float, x, xi) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(grad_xi h, grad_x h)`` at one phase-space point."""
    x = _as_point(x, model.n)
    xi = _as_point(xi, model.n)
    if x.ndim != 1 or xi.ndim != 1:
        raise DimensionError("hamiltonian_derivatives expects single points")
    A = model.metric(t, x)
    dA = model.metric_gradient(t, x)
    grad_xi = A @ xi
    grad_x = 0.5 * np.einsum("ljk,j,k->l", dA, xi, xi) + model.potential_gradient(t, x)
    return grad_xi, grad_x


@dataclass
class DecayEntry:
    alpha: tuple[int, ...]
    metric_sup: float
    potential_sup: float
    metric_bound: float
    potential_bound: float

    @property
    def passed(self) -> bool:
        ok_m = self.metric_sup <= self.metric_bound * (1 + 1e-12) + 1e-300
        ok_p = self.potential_sup <= self.potential_bound * (1 + 1e-12) + 1e-300
        return bool(ok_m and ok_p and np.isfinite(self.metric_sup) and np.isfinite(self.potential_sup))


@dataclass
class DecayReport:
    entries: list[DecayEntry]
    n_samples: int
    radius_range: tuple[float, float]
    times: tuple[float, ...]

    @property
    def passed(self) -> bool:
        return all(e.passed for e in self.entries)

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "samples": {
                "count": self.n_samples,
                "radius_min": self.radius_range[0],
                "radius_max": self.radius_range[1],
                "times": list(self.times),
            },
            "entries": [
                {
                    "alpha": list(e.alpha),
                    "metric_sup": e.metric_sup,
                    "potential_sup": e.potential_sup,
                    "metric_bound": e.metric_bound,
                    "potential_bound": e.potential_bound,
                    "passed": e.passed,
                }
                for e in self.entries
            ],
        }


def radial_samples(n: int, r_max: float = 1e3, count: int = 400, r_min: float = 1e-3) -> np.ndarray:
    """Log-spaced radial sample set along coordinate and diagonal directions, plus the origin."""
    radii = np.geomspace(r_min, r_max, count)
    dirs = [np.eye(n)[0], -np.eye(n)[0]]
    if n > 1:
        dirs.append(np.ones(n) / math.sqrt(n))
        dirs.append(np.eye(n)[n - 1])
    pts = [np.zeros((1, n))] + [radii[:, None] * d[None, :] for d in dirs]
    return np.concatenate(pts, axis=0)


def validate_decay(
    model: CoefficientModel,
    alpha_max: int,
    samples=None,
    times: Sequence[float] = (0.0,),
) -> DecayReport:
    """Check the weighted decay conditions on a sample set for all ``|alpha| <= alpha_max``."""
    if alpha_max > model.max_order:
        raise DerivativeOrderError(
            f"alpha_max={alpha_max} exceeds the model's declared order {model.max_order}"
        )
    if samples is None:
        samples = radial_samples(model.n)
    x = _as_point(samples, model.n).reshape(-1, model.n)
    if x.shape[0] == 0:
        raise ValueError("empty sample set")
    r = np.linalg.norm(x, axis=-1)
    eye = np.eye(model.n)
    entries = []
    for order in range(alpha_max + 1):
        cm, cp = model.declared_constants(order)
        wm = (1.0 + r) ** (model.rho + order)
        wp = (1.0 + r) ** (model.rho - 2 + order)
        for alpha in multi_indices(model.n, order):
            msup = psup = 0.0
            for t in times:
                dA = model.metric_derivative(t, x, alpha)
                if order == 0:
                    dA = dA - eye
                msup = max(msup, float(np.max(np.max(np.abs(dA), axis=(-1, -2)) * wm)))
                dV = model.potential_derivative(t, x, alpha)
                psup = max(psup, float(np.max(np.abs(dV) * wp)))
            entries.append(DecayEntry(alpha, msup, psup, cm, cp))
    return DecayReport(entries, x.shape[0], (float(r.min()), float(r.max())), tuple(float(t) for t in times))
