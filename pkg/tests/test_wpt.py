import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad

from wfset import wpt
from wfset.errors import NyquistError
from wfset.propagator import WaveField, gaussian_field
from wfset.windows import evolved, gaussian_window, hermite_window, window_samples


def gg(x, xi):
    """Gaussian signal and Gaussian window in closed form."""
    return math.sqrt(math.pi) * np.exp(-x ** 2 / 4 - xi ** 2 / 4 - 0.5j * x * xi)


def quad_wpt(f, w, x, xi, lim=30.0):
    def g(y):
        return np.conj(window_samples(w, [y - x])[0]) * f(y) * np.exp(-1j * y * xi)

    re = quad(lambda y: g(y).real, -lim, lim, epsabs=1e-14, epsrel=1e-13, limit=400)[0]
    im = quad(lambda y: g(y).imag, -lim, lim, epsabs=1e-14, epsrel=1e-13, limit=400)[0]
    return re + 1j * im


@pytest.fixture
def w1():
    return evolved(gaussian_window(1), 1.0, 0.0)


def test_zero_signal(w1):
    f = WaveField(np.zeros(256), 10.0)
    assert wpt.wpt_point(f, w1, [0.3], [1.0]) == 0


def test_gaussian_origin_value(w1):
    f = gaussian_field(1, 20.0, 1024)
    oracle = quad_wpt(lambda y: np.exp(-y * y / 2), w1, 0.0, 0.0)
    assert abs(oracle - math.sqrt(math.pi)) < 1e-12
    assert abs(wpt.wpt_point(f, w1, [0.0], [0.0]) - math.sqrt(math.pi)) < 1e-12


def test_sampled_matches_closed_form(w1, rng):
    f = gaussian_field(1, 20.0, 1024)
    X = rng.uniform(-3, 3, (40, 1))
    XI = rng.uniform(-5, 5, (40, 1))
    np.testing.assert_allclose(wpt.wpt_points(f, w1, X, XI), gg(X[:, 0], XI[:, 0]), atol=1e-12)


def test_modulation_covariance(w1):
    f = gaussian_field(1, 20.0, 1024)
    eta = 1.7
    g = f.with_values(f.values * np.exp(1j * eta * f.axis()))
    for x, xi in [(0.1, 0.5), (-1.0, 3.0), (2.0, -1.0)]:
        assert abs(wpt.wpt_point(g, w1, [x], [xi]) - wpt.wpt_point(f, w1, [x], [xi - eta])) < 1e-12


def test_translation_covariance(w1):
    h = 0.75
    f = gaussian_field(1, 20.0, 1024)
    g = gaussian_field(1, 20.0, 1024, center=h)
    for x, xi in [(0.2, 0.5), (-1.0, 2.0)]:
        lhs = wpt.wpt_point(g, w1, [x], [xi])
        rhs = np.exp(-1j * h * xi) * wpt.wpt_point(f, w1, [x - h], [xi])
        assert abs(lhs - rhs) < 1e-12


def test_even_signal_gives_even_modulus(w1):
    f = gaussian_field(1, 20.0, 1024, width=0.7)
    for x, xi in [(0.5, 1.0), (1.3, -2.0)]:
        assert abs(abs(wpt.wpt_point(f, w1, [x], [xi])) - abs(wpt.wpt_point(f, w1, [-x], [xi]))) < 1e-13


def test_nyquist_violation_raises(w1):
    f = gaussian_field(1, 20.0, 128)
    with pytest.raises(NyquistError):
        wpt.wpt_point(f, w1, [0.0], [30.0])


def test_empty_signal(w1):
    with pytest.raises((ValueError, Exception)):
        wpt.wpt_points(WaveField(np.zeros(0), 1.0), w1, [[0.0]], [[0.0]])


def test_grid_agrees_with_points(rng):
    f = gaussian_field(1, 20.0, 1024, momentum=2.0)
    w = evolved(hermite_window([1]), 4.0, 0.3)
    xi = wpt.fft_xi_axis(f, center=2.0, count=64, refine=2)
    x = np.linspace(-2, 2, 9)
    sl = wpt.wpt_grid(f, w, [x], [xi])
    assert sl.method == "fft" and sl.warning is None
    idx = rng.integers(0, sl.values.size, 100)
    i, j = np.unravel_index(idx, sl.values.shape)
    direct = wpt.wpt_points(f, w, x[i, None], xi[j, None])
    assert np.max(np.abs(direct - sl.values[i, j])) <= 1e-8


def test_grid_linearity():
    f = gaussian_field(1, 20.0, 1024)
    g = gaussian_field(1, 20.0, 1024, center=1.0, momentum=-1.0)
    w = evolved(gaussian_window(1), 2.0, 0.0)
    xi = wpt.fft_xi_axis(f, count=128)
    x = np.linspace(-3, 3, 7)
    s = wpt.wpt_grid(f.with_values(2 * f.values + 1j * g.values), w, [x], [xi]).values
    parts = 2 * wpt.wpt_grid(f, w, [x], [xi]).values + 1j * wpt.wpt_grid(g, w, [x], [xi]).values
    assert np.max(np.abs(s - parts)) <= 1e-10


def test_norm_identity_2d():
    from wfset.propagator import gaussian_field as gf

    f = gf(2, 12.0, 128)
    w = evolved(gaussian_window(2), 1.0, 0.0)
    xi = wpt.fft_xi_axis(f, count=64)
    xs = np.linspace(-7, 7, 29)
    sl = wpt.wpt_grid(f, w, [xs, xs], [xi, xi])
    expect = (2 * math.pi) ** 2 * math.pi * f.norm() ** 2
    assert sl.energy() == pytest.approx(expect, rel=1e-6)


def test_noncommensurate_xi_falls_back_with_warning(w1):
    f = gaussian_field(1, 20.0, 512)
    xi = np.array([0.0, 0.3, 1.1])
    with pytest.warns(RuntimeWarning):
        sl = wpt.wpt_grid(f, w1, [np.array([0.0, 1.0])], [xi])
    assert sl.fallback
    np.testing.assert_allclose(sl.values, gg(np.array([0.0, 1.0])[:, None], xi[None, :]), atol=1e-12)


def test_slice_csv_roundtrip(tmp_path, w1):
    f = gaussian_field(1, 20.0, 512)
    sl = wpt.wpt_grid(f, w1, [np.linspace(-1, 1, 3)], [wpt.fft_xi_axis(f, count=8)])
    p = sl.to_csv(tmp_path / "s.csv")
    back = wpt.WptSlice.from_csv(p)
    np.testing.assert_array_equal(back.values, sl.values)
    assert back.metadata() == sl.metadata()


# -- analytic signals ------------------------------------------------------------------


@settings(max_examples=30, deadline=None)
@given(st.floats(-3, 3), st.floats(-6, 6), st.sampled_from([1.0, 3.0, 10.0]), st.floats(-1.0, 1.0),
       st.sampled_from(["gaussian", "heaviside", "chirp"]), st.integers(0, 2))
def test_analytic_transform_matches_quadrature(x, xi, lam, t, kind, order):
    sig = {"gaussian": wpt.gaussian_signal(1, 0.8, 0.3, 1.0),
           "heaviside": wpt.heaviside_signal(1),
           "chirp": wpt.chirp_signal(1, 0.5)}[kind]
    base = gaussian_window(1) if order == 0 else hermite_window([order])
    w = evolved(base, lam, t)
    got = complex(wpt.analytic_wpt(sig, w, x, xi))
    lim = 12.0 * math.sqrt(1 + (lam * t) ** 2) / math.sqrt(lam) + 1
    if kind == "heaviside":
        def g(y):
            return np.conj(window_samples(w, [y - x])[0]) * np.exp(-1j * y * xi)

        a, b = 0.0, x + lim
        if b <= 0:
            assert abs(got) < 1e-12
            return
        re = quad(lambda y: g(y).real, a, b, epsabs=1e-13, limit=600)[0]
        im = quad(lambda y: g(y).imag, a, b, epsabs=1e-13, limit=600)[0]
        ref = re + 1j * im
    else:
        def g(y):
            return np.conj(window_samples(w, [y])[0]) * complex(sig(np.array(y + x))) * np.exp(-1j * (y + x) * xi)

        re = quad(lambda y: g(y).real, -lim, lim, epsabs=1e-13, limit=800)[0]
        im = quad(lambda y: g(y).imag, -lim, lim, epsabs=1e-13, limit=800)[0]
        ref = re + 1j * im
    assert abs(got - ref) <= 1e-8 * max(1.0, abs(ref))


def test_gaussian_moments_half_lines_sum_to_full_line():
    A, B, C = 0.7 + 0.2j, 1.0 - 3.0j, 0.1j
    full = wpt.gaussian_moments(A, B, C, 4, "R")
    for z0 in (-2.0, 0.0, 1.5):
        plus = wpt.gaussian_moments(A, B, C, 4, "+", z0)
        minus = wpt.gaussian_moments(A, B, C, 4, "-", z0)
        for m in range(5):
            assert abs(plus[m] + minus[m] - full[m]) < 1e-12 * max(1, abs(full[m]))


def test_analytic_signal_sampling_and_mollifier():
    sig = wpt.heaviside_signal(1)
    f = sig.sample(10.0, 200)
    assert f.values[0] == 0 and f.values[-1] == 1
    g = sig.sample(10.0, 200, mollify=0.1)
    assert 0.4 < g.values[100].real < 0.6


def test_signal_from_config():
    s = wpt.signal_from_config({"kind": "chirp", "focus_time": 0.25}, 1)
    assert s.label == "chirp"
    with pytest.raises(ValueError):
        wpt.signal_from_config({"kind": "sawtooth"}, 1)
