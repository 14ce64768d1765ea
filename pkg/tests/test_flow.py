import math

import numpy as np
import pytest
from scipy.integrate import quad

from wfset import coeffs, flow
from wfset.errors import DimensionError


def test_free_flow_is_exact(flat1):
    s = np.linspace(0, 1, 21)
    tr = flow.solve_bicharacteristics(flat1, 1.0, [0.3], [-2.0], s)
    np.testing.assert_allclose(tr.x[:, 0], 0.3 + (s - 1.0) * -2.0, atol=1e-12, rtol=0)
    np.testing.assert_allclose(tr.xi[:, 0], -2.0, atol=1e-12, rtol=0)


def test_energy_conserved_on_bump(bump1):
    tr = flow.solve_bicharacteristics(bump1, 1.0, [0.2], [1.5])
    e = tr.energy(bump1)
    assert abs(e[0] - e[-1]) <= 1e-9
    assert np.max(np.abs(e / e[-1] - 1)) <= 10 * flow.RTOL


def test_bump_endpoint_matches_step_halving(bump1):
    a = flow.solve_bicharacteristics(bump1, 1.0, [0.0], [1.0], [0.0]).point(0)
    b = flow.solve_bicharacteristics(bump1, 1.0, [0.0], [1.0], [0.0], rtol=1e-13, atol=1e-15).point(0)
    assert np.max(np.abs(a.state() - b.state())) <= 1e-8


def test_two_sided_output_and_ordering(bump1):
    tr = flow.solve_bicharacteristics(bump1, 0.5, [0.0], [1.0], [1.0, 0.0, 0.5, 0.25])
    assert np.all(np.diff(tr.s) > 0)
    np.testing.assert_allclose(tr.at(0.5).x, [0.0])


def test_dimension_mismatch(bump1):
    with pytest.raises(DimensionError):
        flow.solve_bicharacteristics(bump1, 1.0, [0.0, 1.0], [1.0, 0.0])


@pytest.mark.parametrize("backend", ["cython", "python", "generic"])
def test_backends_agree(bump1, backend):
    from wfset import _kernels

    if backend == "cython" and not _kernels.HAVE_EXTENSION:
        pytest.skip("compiled extension not built")
    ref = flow.solve_bicharacteristics(bump1, 1.0, [0.3], [2.0], [0.0], backend="python").point(0)
    got = flow.solve_bicharacteristics(bump1, 1.0, [0.3], [2.0], [0.0], backend=backend).point(0)
    tol = 0.0 if backend != "generic" else 1e-8
    assert np.max(np.abs(ref.state() - got.state())) <= tol


def test_flow_points_parallel_matches_serial():
    m = coeffs.longrange(2, epsilon=0.2, potential_epsilon=0.3)
    X, XI = flow.phase_lattice([0.0, 0.0], 1.0, [1.0, 0.5], 0.5, 1.5)
    a = flow.flow_points(m, 1.0, X, 16 * XI, 0.0)
    b = flow.flow_points(m, 1.0, X, 16 * XI, 0.0, jobs=4)
    np.testing.assert_array_equal(a[0], b[0])
    np.testing.assert_array_equal(a[1], b[1])


def test_trajectory_csv_roundtrip(tmp_path, bump1):
    tr = flow.solve_bicharacteristics(bump1, 1.0, [0.3], [2.0])
    back = flow.Trajectory.from_csv(tr.to_csv(tmp_path / "t.csv"))
    np.testing.assert_array_equal(back.x, tr.x)
    np.testing.assert_array_equal(back.xi, tr.xi)
    assert back.anchor_time == tr.anchor_time


# -- Picard ----------------------------------------------------------------------------


def test_picard_zeroth_iterate(bump1):
    its = flow.picard_iterates(bump1, 1.0, [0.2], [0.7], 4.0, 0)
    s = its[0].s
    np.testing.assert_allclose(its[0].x[:, 0], 0.2 + 4.0 * (s - 1.0) * 0.7, atol=1e-15)
    np.testing.assert_allclose(its[0].xi[:, 0], 2.8)


def test_picard_flat_fixed_point(flat1):
    its = flow.picard_iterates(flat1, 1.0, [0.2], [0.7], 4.0, 2)
    np.testing.assert_allclose(its[1].x, its[0].x, atol=1e-13)
    np.testing.assert_allclose(its[1].xi, its[0].xi, atol=1e-13)


def test_picard_converges_monotonically(bump1):
    its = flow.picard_iterates(bump1, 1.0, [0.0], [1.0], 2.0, 4)
    ref = flow.solve_bicharacteristics(bump1, 1.0, [0.0], [2.0], its[0].s, rtol=1e-12, atol=1e-14)
    d = [max(np.max(np.abs(it.x - ref.x)), np.max(np.abs(it.xi - ref.xi))) for it in its]
    assert all(b < a for a, b in zip(d, d[1:])), d


# -- forward problem and round trip ----------------------------------------------------


def test_forward_shift_flat_closes_loop(flat1):
    p = flow.forward_orbit_from_shift(flat1, 0.8, [0.4], [1.3])
    np.testing.assert_allclose(p.x, [0.4], atol=1e-13)
    np.testing.assert_allclose(p.xi, [1.3], atol=1e-13)


def test_forward_shift_zero_time(bump1):
    p = flow.forward_orbit_from_shift(bump1, 0.0, [0.4], [1.3])
    assert p.x[0] == 0.4 and p.xi[0] == 1.3


def test_roundtrip_flat(flat1):
    assert max(flow.roundtrip_residual(flat1, 1.0, [0.3], [2.0])) <= 1e-12


def test_roundtrip_bump(bump1):
    dx, dxi = flow.roundtrip_residual(bump1, 1.0, [0.3], [2.0])
    assert dx <= 1e-8 and dxi <= 1e-8


def test_roundtrip_shrinks_with_rtol(bump1):
    T, Y, E = flow.roundtrip_reference_set(1)
    loose = flow.roundtrip_residuals(bump1, T, Y, E, rtol=1e-6, atol=1e-8)
    tight = flow.roundtrip_residuals(bump1, T, Y, E, rtol=1e-7, atol=1e-9)
    assert np.max(tight[0]) < np.max(loose[0])
    assert np.max(tight[0]) <= 0.5 * np.max(loose[0])


@pytest.mark.parametrize("model", [coeffs.bump(1, 0.1, 0.1), coeffs.longrange(1, 0.1, 0.1),
                                   coeffs.bump(2, 0.2, 0.1), coeffs.longrange(2, 0.2, 0.3, rho=1.25)])
def test_roundtrip_reference_set_all_models(model):
    T, Y, E = flow.roundtrip_reference_set(model.n)
    dx, dxi = flow.roundtrip_residuals(model, T, Y, E)
    assert max(dx.max(), dxi.max()) <= 100 * flow.RTOL


def test_metric_bump_shift_tends_to_travel_time_constant():
    # for a = 1 + eps exp(-x^2) and V = 0 the orbit speed is lam |eta| sqrt(a); as lam grows the
    # end point overshoots by the d solving d = int_{-inf}^{d} (1 - a^{-1/2}) dx: no decay in lam
    eps = 0.1
    m = coeffs.bump(1, eps, 0.0)

    def g(d):
        return quad(lambda x: 1 - (1 + eps * math.exp(-x * x)) ** -0.5, -np.inf, d, epsabs=1e-14)[0]

    d = 0.0
    for _ in range(30):
        d = g(d)
    dy, _ = flow.shift_deviation(m, 1.0, [0.0], [1.0], [64.0, 1024.0])
    assert dy[1] == pytest.approx(d, rel=1e-3)
    assert abs(dy[1] - dy[0]) < 0.05 * d


# -- bound report ----------------------------------------------------------------------


def test_flat_bounds_hold_from_two(flat1):
    rep = flow.orbit_bound_report(flat1, 1.0, lambdas=[2.0, 4.0, 16.0, 64.0])
    assert rep.passed and rep.lambda0 == 2.0


def test_bound_pass_condition_is_ratio_band(flat1):
    rep = flow.orbit_bound_report(flat1, 1.0, lambdas=[1.0, 2.0, 8.0])
    for i, lam in enumerate(rep.lambdas):
        ok = (rep.position_min[i] >= 0.5 and rep.position_max[i] <= 2.0
              and rep.momentum_min[i] >= 0.5 and rep.momentum_max[i] <= 2.0)
        assert ok == bool(rep.passed_at[i])


def test_strong_bump_fails_below_lambda0():
    m = coeffs.bump(1, epsilon=0.9, potential_epsilon=3.0)
    rep = flow.orbit_bound_report(m, 1.0, lambdas=[1.0, 2.0, 4.0, 8.0, 16.0, 64.0])
    assert rep.passed
    assert not rep.passed_at[0]
    assert rep.violation is not None and rep.violation["lambda"] < rep.lambda0


def test_literal_bracket_lower_bound_fails(flat1):
    # with <s - t0> the lower bound fails for every lambda: at s = t0 the middle term is 1 + |x|
    rep = flow.orbit_bound_report(flat1, 1.0, lambdas=[2.0, 16.0, 256.0], lower_weight="bracket")
    assert not rep.passed
    assert not np.any(rep.passed_at)
    assert rep.violation["position_ratio_lower"] < 0.5


def test_lattice_shapes():
    X, XI = flow.phase_lattice([0.0, 0.0], 1.0, [1.0, 0.0], 0.5, 1.5)
    assert X.shape == XI.shape and X.shape[1] == 2
    cos = XI @ np.array([1.0, 0.0]) / np.linalg.norm(XI, axis=1)
    assert np.all(cos > 0.5)
    assert np.all(np.linalg.norm(X, axis=1) < 1.0)
    norms = np.linalg.norm(XI, axis=1)
    assert norms.min() == pytest.approx(1 / 1.5) and norms.max() == pytest.approx(1.5)
