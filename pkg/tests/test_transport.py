import numpy as np
import pytest

from wfset import coeffs, transport
from wfset.flow import solve_bicharacteristics
from wfset.propagator import gaussian_field, propagate
from wfset.windows import gaussian_window


def test_phase_term_flat():
    assert transport.phase_term(coeffs.flat(2), 0.0, [0.3, 1.0], [1.0, 2.0]) == pytest.approx(-2.5)


def test_phase_term_zero_covector():
    m = coeffs.longrange(1, 0.2, 0.5, rho=1.5)
    x = np.array([0.7])
    expect = float(m.potential(0.0, x)) - float(x @ m.potential_gradient(0.0, x))
    assert transport.phase_term(m, 0.0, x, [0.0]) == pytest.approx(expect, rel=1e-14)


def test_phase_term_finite_difference_reconstruction(bump1):
    x, xi, h = 0.5, 1.0, 1e-5
    a = lambda z: float(bump1.metric(0.0, np.array([z]))[0, 0])
    V = lambda z: float(bump1.potential(0.0, np.array([z])))
    da = (a(x + h) - a(x - h)) / (2 * h)
    dV = (V(x + h) - V(x - h)) / (2 * h)
    fd = -0.5 * (a(x) - x * da) * xi ** 2 + V(x) - x * dV
    assert transport.phase_term(bump1, 0.0, [x], [xi]) == pytest.approx(fd, rel=1e-6)


def test_phase_integral_zero_time(bump1):
    orbit = solve_bicharacteristics(bump1, 0.0, [0.2], [1.0], [0.0])
    assert transport.phase_integral(bump1, orbit).integral == 0.0


def test_phase_integral_flat():
    m = coeffs.flat(1)
    orbit = solve_bicharacteristics(m, 0.8, [0.2], [3.0])
    log = transport.phase_integral(m, orbit)
    assert log.integral == pytest.approx(-0.8 * 9.0 / 2, abs=1e-12)
    assert isinstance(log.integral, float)


def test_phase_integral_refinement(bump1):
    orbit = solve_bicharacteristics(bump1, 1.0, [0.0], [8.0])
    log = transport.phase_integral(bump1, orbit)
    assert log.error_estimate <= 1e-9
    finer = transport.phase_integral(bump1, orbit, tol=1e-12)
    assert abs(finer.integral - log.integral) <= 1e-9


def test_phase_integral_coverage_gap(bump1):
    orbit = solve_bicharacteristics(bump1, 1.0, [0.0], [1.0], [0.5, 1.0])
    with pytest.raises(ValueError):
        transport.phase_integral(bump1, orbit)


def test_free_identity_exact_at_zero_time():
    u0 = gaussian_field(1, 20.0, 1024)
    r = transport.transport_residual(coeffs.flat(1), u0, gaussian_window(1), 16.0, 0.0, [0.3], [0.5])
    assert r <= 1e-13


def test_free_identity():
    m = coeffs.flat(1)
    u0 = gaussian_field(1, 40.0, 8192)
    rows = transport.residual_sweep(m, u0, gaussian_window(1), [16.0, 64.0], 0.5,
                                    [([0.5], [0.05]), ([0.0], [0.3])])
    assert rows[:, -2].max() <= 1e-6


def test_bump_residual_decreases_with_lambda(bump1):
    u0 = gaussian_field(1, 8.0, 1024)
    u_t, _ = propagate(bump1, u0, 0.0, 0.25)
    rs = [transport.transport_residual(bump1, u0, gaussian_window(1), lam, 0.25, [0.3], [0.1], u_t=u_t)
          for lam in (16.0, 64.0, 256.0)]
    assert rs[0] > rs[1] > rs[2], rs


def test_magnitude_transport(bump1):
    u0 = gaussian_field(1, 8.0, 1024)
    u_t, _ = propagate(bump1, u0, 0.0, 0.25)
    r = transport.transport_check(bump1, u0, gaussian_window(1), 64.0, 0.25, [0.3], [0.1], u_t=u_t)
    assert abs(abs(r.lhs) - abs(r.rhs)) <= r.residual + 1e-12


def test_sweep_csv_columns(tmp_path):
    from wfset._io import read_table, write_table

    cols = transport.sweep_columns(2)
    assert cols == ["lambda", "t", "x1", "x2", "xi1", "xi2", "residual", "abs_lhs"]
    p = write_table(tmp_path / "r.csv", cols, np.zeros((2, len(cols))))
    assert read_table(p)[1] == cols
