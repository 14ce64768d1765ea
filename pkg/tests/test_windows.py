import math

import numpy as np
import pytest

from wfset import windows as W
from wfset.errors import WindowError


def test_scale_one_is_identity():
    base = W.gaussian_window(1)
    w = W.free_evolve_window(W.scaled_window(base, 1.0), 0.0)
    y = np.linspace(-3, 3, 11)
    np.testing.assert_allclose(W.window_samples(w, y), np.exp(-y ** 2 / 2), atol=1e-15)


def test_scaled_gaussian_value_at_origin():
    w = W.evolved(W.gaussian_window(1), 4.0, 0.0)
    assert abs(W.window_samples(w, [0.0])[0] - math.sqrt(2.0)) < 1e-14


def test_scale_below_one_rejected():
    with pytest.raises(WindowError):
        W.scaled_window(W.gaussian_window(1), 0.5)


@pytest.mark.parametrize("lam", [1.0, 4.0, 64.0])
def test_scaling_preserves_norm(lam):
    base = W.gaussian_window(1)
    w = W.evolved(base, lam, 0.0)
    assert W.window_norm(w) == pytest.approx(W.base_norm(base), rel=1e-12)


def test_gaussian_evolution_closed_form():
    w = W.evolved(W.gaussian_window(1), 1.0, 1.0)
    y = np.linspace(-5, 5, 41)
    expect = (1 + 1j) ** -0.5 * np.exp(-y ** 2 / (2 * (1 + 1j)))
    np.testing.assert_allclose(W.window_samples(w, y), expect, atol=1e-14)
    assert abs(W.window_samples(w, [0.0])[0]) == pytest.approx(2 ** -0.25, abs=1e-14)


def test_spectral_cross_checks_closed_form_at_origin():
    w = W.evolved(W.gaussian_window(1), 1.0, 1.0, strategy="spectral")
    assert abs(W.window_samples(w, [0.0])[0]) == pytest.approx(2 ** -0.25, abs=1e-10)


def test_zero_time_is_identity():
    base = W.hermite_window([2])
    a = W.evolved(base, 3.0, 0.0)
    y = np.linspace(-2, 2, 9)
    s = math.sqrt(3.0)
    expect = 3.0 ** 0.25 * (4 * (s * y) ** 2 - 2) * np.exp(-3.0 * y ** 2 / 2)
    np.testing.assert_allclose(W.window_samples(a, y), expect, atol=1e-12)


@pytest.mark.parametrize("t", [0.5, 1.0, 2.0])
@pytest.mark.parametrize("base", [W.gaussian_window(1), W.hermite_window([3])])
def test_evolution_is_unitary(t, base):
    for strategy in ("closed", "spectral"):
        w = W.evolved(base, 2.0, t, strategy=strategy)
        assert W.window_norm(w) == pytest.approx(W.base_norm(base), rel=1e-8)


def test_even_symmetry():
    w = W.evolved(W.gaussian_window(1), 8.0, 0.3)
    y = np.linspace(0, 3, 17)
    np.testing.assert_allclose(W.window_samples(w, y), W.window_samples(w, -y), atol=1e-15)


@pytest.mark.parametrize("base", [W.gaussian_window(1), W.hermite_window([2]), W.polygauss_window([[1, 0.5, 0.25]])])
@pytest.mark.parametrize("lam,t", [(1.0, 0.0), (1.0, 1.0), (4.0, -0.5), (16.0, 0.25)])
def test_strategies_agree(base, lam, t):
    a = W.evolved(base, lam, t, "closed")
    b = W.evolved(base, lam, t, "spectral")
    y = np.linspace(-8, 8, 401)
    y = y[np.abs(y) <= b.half_width]
    assert np.max(np.abs(W.window_samples(a, y) - W.window_samples(b, y))) <= 1e-8


def test_strategies_agree_2d():
    base = W.hermite_window([1, 2])
    a = W.evolved(base, 2.0, 0.4, "closed")
    b = W.evolved(base, 2.0, 0.4, "spectral")
    pts = np.random.default_rng(1).uniform(-3, 3, (50, 2))
    assert np.max(np.abs(W.window_samples(a, pts) - W.window_samples(b, pts))) <= 1e-8


def test_spectral_semigroup():
    spec = W.scaled_window(W.gaussian_window(1), 2.0)
    L, N = W.default_box(2.0, 1.5)
    one = W.free_evolve_window(W.free_evolve_window(spec, 0.7, "spectral", L, N).spec, 0.8, "spectral", L, N)
    both = W.free_evolve_window(spec, 1.5, "spectral", L, N)
    assert np.max(np.abs(one.table - both.table)) <= 1e-8


def test_sampled_base_window_roundtrip():
    L, N = 12.0, 256
    y = -L + 2 * L / N * np.arange(N)
    spec = W.sampled_window(np.exp(-y ** 2 / 2), L)
    w = W.free_evolve_window(W.scaled_window(spec, 1.0), 0.5)
    ref = W.evolved(W.gaussian_window(1), 1.0, 0.5)
    z = np.linspace(-4, 4, 33)
    np.testing.assert_allclose(W.window_samples(w, z), W.window_samples(ref, z), atol=1e-10)


def test_undersampled_window_rejected():
    y = np.linspace(-1, 1, 16, endpoint=False)
    spec = W.sampled_window(np.exp(-y ** 2 / 2), 1.0)
    with pytest.raises(WindowError):
        W.free_evolve_window(spec, 0.0)


def test_offsets_outside_table_rejected():
    w = W.evolved(W.gaussian_window(1), 4.0, 0.0, strategy="spectral")
    with pytest.raises(WindowError):
        W.window_samples(w, [w.half_width * 2])


def test_invalid_specs():
    with pytest.raises(WindowError):
        W.polygauss_window([[0, 0]])
    with pytest.raises(WindowError):
        W.window_from_config({"kind": "triangle"}, 1)
    with pytest.raises(WindowError):
        W.window_from_config({"kind": "hermite", "orders": [1, 2]}, 1)
