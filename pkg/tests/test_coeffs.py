import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from wfset import coeffs
from wfset.errors import ConfigError, DerivativeOrderError, DimensionError


def test_flat_metric_is_identity():
    m = coeffs.flat(3)
    for t, x in [(0.0, [0, 0, 0]), (2.5, [1.0, -3.0, 7.0])]:
        np.testing.assert_array_equal(coeffs.metric_at(m, t, x), np.eye(3))


def test_bump_metric_at_origin():
    m = coeffs.bump(1, epsilon=0.1)
    assert coeffs.metric_at(m, 3.7, [0.0])[0, 0] == pytest.approx(1.1, abs=1e-15)


@pytest.mark.parametrize("factory", [coeffs.bump, coeffs.longrange])
def test_metric_symmetric(factory, rng):
    m = factory(3, epsilon=0.2, potential_epsilon=0.1)
    for _ in range(20):
        A = coeffs.metric_at(m, rng.uniform(-1, 1), rng.normal(size=3) * 3)
        np.testing.assert_array_equal(A, A.T)


def test_metric_dimension_mismatch():
    with pytest.raises(DimensionError):
        coeffs.metric_at(coeffs.flat(2), 0.0, [1.0, 2.0, 3.0])


def test_free_hamiltonian_derivatives():
    gxi, gx = coeffs.hamiltonian_derivatives(coeffs.flat(2), 0.0, [0.3, -1.0], [1.5, 2.0])
    np.testing.assert_allclose(gxi, [1.5, 2.0])
    np.testing.assert_allclose(gx, [0.0, 0.0])


def test_zero_covector_gives_potential_gradient():
    m = coeffs.longrange(2, epsilon=0.2, potential_epsilon=0.4, rho=1.5)
    x = np.array([0.7, -0.2])
    gxi, gx = coeffs.hamiltonian_derivatives(m, 0.0, x, [0.0, 0.0])
    np.testing.assert_allclose(gxi, 0.0)
    np.testing.assert_allclose(gx, m.potential_gradient(0.0, x), rtol=1e-14)


def _fd_grad(f, z, h=1e-5):
    g = np.zeros_like(z)
    for i in range(z.size):
        e = np.zeros_like(z)
        e[i] = h
        g[i] = (f(z + e) - f(z - e)) / (2 * h)
    return g


def test_bump_hamiltonian_matches_finite_differences(bump1):
    x, xi = np.array([0.5]), np.array([1.0])
    gxi, gx = coeffs.hamiltonian_derivatives(bump1, 0.0, x, xi)
    fd_x = _fd_grad(lambda z: coeffs.hamiltonian(bump1, 0.0, z, xi), x)
    fd_xi = _fd_grad(lambda z: coeffs.hamiltonian(bump1, 0.0, x, z), xi)
    np.testing.assert_allclose(gx, fd_x, rtol=1e-6)
    np.testing.assert_allclose(gxi, fd_xi, rtol=1e-6)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(-4, 4), min_size=2, max_size=2),
       st.sampled_from(["bump", "longrange"]), st.floats(0.0, 2.0))
def test_derivative_evaluators_match_finite_differences(x, family, t):
    factory = getattr(coeffs, family)
    m = factory(2, epsilon=0.3, potential_epsilon=0.2, rho=1.5, time_modulation="cos")
    x = np.array(x)
    dA = m.metric_gradient(t, x)
    dV = m.potential_gradient(t, x)
    fd_A = np.stack([(m.metric(t, x + h) - m.metric(t, x - h)) / 2e-5 for h in np.eye(2) * 1e-5])
    fd_V = _fd_grad(lambda z: float(m.potential(t, z)), x)
    np.testing.assert_allclose(dA, fd_A, rtol=1e-6, atol=1e-9)
    np.testing.assert_allclose(dV, fd_V, rtol=1e-6, atol=1e-9)


def test_validate_flat_passes_with_zero_suprema():
    rep = coeffs.validate_decay(coeffs.flat(1), 2)
    assert rep.passed
    assert all(e.metric_sup == 0 and e.potential_sup == 0 for e in rep.entries)


def test_validate_longrange_mixed_model_passes():
    # a = 1 + 0.1 <x>^-rho with a Gaussian potential bump
    m = coeffs.RadialModel(
        n=1, rho=1.5,
        metric_profile=coeffs.RadialProfile("algebraic", -1.5), metric_eps=0.1,
        potential_profile=coeffs.RadialProfile("gaussian"), potential_eps=0.1,
    )
    samples = np.linspace(-50, 50, 2001)[:, None]
    assert coeffs.validate_decay(m, 2, samples).passed


def test_validate_quadratic_fails_and_grows():
    m = coeffs.quadratic(1)
    rep = coeffs.validate_decay(m, 1)
    assert not rep.passed
    sups = [coeffs.validate_decay(m, 0, coeffs.radial_samples(1, r_max=R)).entries[0].potential_sup
            for R in (10, 100, 1000)]
    assert sups[0] < sups[1] < sups[2]


def test_validate_monotone_in_samples():
    m = coeffs.quadratic(1)
    small = coeffs.validate_decay(m, 1, np.linspace(-0.01, 0.01, 5)[:, None])
    big = coeffs.validate_decay(m, 1, np.vstack([np.linspace(-0.01, 0.01, 5)[:, None], [[500.0]]]))
    assert small.passed is True or not big.passed
    assert not big.passed


def test_validate_order_too_high():
    with pytest.raises(DerivativeOrderError):
        coeffs.validate_decay(coeffs.flat(1), 99)


@pytest.mark.parametrize("factory", [coeffs.bump, coeffs.longrange])
@pytest.mark.parametrize("n", [1, 2])
def test_builtin_models_satisfy_decay_conditions(factory, n):
    m = factory(n, epsilon=0.2, potential_epsilon=0.3, rho=1.5)
    assert coeffs.validate_decay(m, 2, times=(0.0, 1.0)).passed


def test_model_from_config_rejects_unknown_key():
    with pytest.raises(ConfigError, match="colour"):
        coeffs.model_from_config({"family": "flat", "colour": "red"})


def test_model_from_config_families():
    m = coeffs.model_from_config({"family": "longrange", "n": 2, "rho": 2.0, "potential_epsilon": 0.5,
                                  "potential_power": -0.125})
    assert m.n == 2 and m.name == "longrange"
    with pytest.raises(ConfigError):
        coeffs.model_from_config({"family": "nope"})
