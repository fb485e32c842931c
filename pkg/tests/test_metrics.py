import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from compfw.metrics import (
    TheoryConstants,
    compute_theory_constants,
    curvature_probe,
    fit_rate,
    generalized_fw_gap,
    theory_constants_from,
)
from compfw.numerics import ConfigurationError, NoiseSpec
from compfw.problems import box, l1_ball, linear_first_component, make_quadratic_problem, max_of_components


def scalar_problem(curv, lin=0.0, noise=None):
    """``f(x) = curv/2 x^2 + lin x`` on [-1, 1] with a linear outer function."""
    return make_quadratic_problem([[[curv]]], [[lin]], [0.0], linear_first_component(), box([-1.0], [1.0]), noise, noise)


def test_gap_of_identity_at_half():
    assert generalized_fw_gap(scalar_problem(0.0, 1.0), [0.5]) == pytest.approx(1.5)


def test_gap_vanishes_at_the_minimizer():
    assert abs(generalized_fw_gap(scalar_problem(2.0), [0.0])) <= 1e-6
    assert abs(generalized_fw_gap(scalar_problem(0.0, 1.0), [-1.0])) <= 1e-6


@settings(max_examples=50, deadline=None)
@given(st.floats(-1.0, 1.0))
def test_gap_dominates_suboptimality_on_convex_problem(y):
    # f(x) = x^2, minimum 0 at the origin
    assert generalized_fw_gap(scalar_problem(2.0), [y]) >= y * y - 1e-12


def test_gap_dominates_suboptimality_for_max_of_convex_quadratics():
    rng = np.random.default_rng(0)
    M = rng.standard_normal((3, 2, 2))
    A = M @ M.transpose(0, 2, 1)
    prob = make_quadratic_problem(A, rng.standard_normal((3, 2)), rng.standard_normal(3), max_of_components(), l1_ball(2, 1.0))
    grid = np.linspace(-1, 1, 401)
    pts = [np.array([a, b]) for a in grid for b in grid if abs(a) + abs(b) <= 1]
    phi_star = min(prob.objective(p) for p in pts)
    for y in pts[::97]:
        assert generalized_fw_gap(prob, y) >= prob.objective(y) - phi_star - 1e-9


def test_curvature_probe_examples():
    assert curvature_probe(scalar_problem(0.0, 1.0), num_pairs=200) <= 1e-10
    est = curvature_probe(scalar_problem(2.0), num_pairs=500)
    assert 0 < est <= 8.0 + 1e-9
    # both endpoints are vertices, so the sup 2 (y - x)^2 = 8 is hit exactly
    assert est == pytest.approx(8.0)


def test_curvature_probe_stays_below_the_bound():
    prob = scalar_problem(2.0)
    assert curvature_probe(prob, num_pairs=300) <= theory_constants_from(prob).S_bound + 1e-9


def base_constants(**kw):
    args = dict(L_F=1.0, L=2.0, G=1.0, D_X=2.0, n=4, sigma_f=0.0, sigma_g=0.0, r=2.0)
    args.update(kw)
    return TheoryConstants(**args)


def test_curvature_bound_and_moment_constant():
    c = base_constants()
    assert c.S_bound == pytest.approx(16.0)
    assert c.C_r == pytest.approx(1.0)


def test_zero_noise_collapse():
    c = base_constants(L=0.0, G=0.0, phi0=0.7)
    assert c.U_g == 0 and c.U_f_I == 0 and c.U_f_II == 0
    assert c.M_I == pytest.approx(0.7) and c.M_II == pytest.approx(0.7)
    assert c.E_g0 == 0 and c.E_f0 == 0


def test_variant_one_constants_need_G():
    c = base_constants(G=None)
    with pytest.raises(ConfigurationError):
        c.M_I
    with pytest.raises(ConfigurationError):
        c.Q_f("variant1")
    assert c.M_II > 0


@settings(max_examples=40, deadline=None)
@given(st.floats(0.0, 5.0), st.floats(0.0, 5.0), st.floats(1.1, 2.0))
def test_constants_increase_with_noise(s1, s2, r):
    lo, hi = sorted((s1, s2))
    a = base_constants(sigma_f=lo, sigma_g=lo, r=r)
    b = base_constants(sigma_f=hi, sigma_g=hi, r=r)
    assert a.M_I <= b.M_I + 1e-12
    assert a.M_II <= b.M_II + 1e-12
    assert a.A_cvx() <= b.A_cvx() + 1e-9


def test_convex_schedule_exponents():
    c = base_constants(r=2.0)
    assert c.q == pytest.approx(2 / 3) and c.p == pytest.approx(1 / 3)
    assert c.k0 == 21


def test_init_moments_from_draws():
    prob = scalar_problem(2.0, noise=NoiseSpec("gaussian", 0.5))
    c = compute_theory_constants(prob, phi0=1.0, init_moment_draws=4000, rng=np.random.default_rng(1))
    # E|noise|^2 = 0.25 for a scalar Gaussian with scale 0.5
    assert c.init_moment_f == pytest.approx(0.25, rel=0.1)
    assert c.init_moment_g == pytest.approx(0.25, rel=0.1)


def test_fit_rate_examples():
    fit = fit_rate([(K, K**-0.25) for K in (64, 128, 256, 512)])
    assert fit.slope == pytest.approx(-0.25) and fit.r_squared == pytest.approx(1.0)
    flat = fit_rate([(K, 2.0) for K in (10, 20, 40)])
    assert flat.slope == pytest.approx(0.0, abs=1e-12)
    fit = fit_rate([(K, 3 * K ** (-1 / 3)) for K in (8, 27, 64, 125)])
    assert fit.slope == pytest.approx(-1 / 3) and fit.intercept == pytest.approx(math.log(3))


def test_fit_rate_drops_nonpositive_gaps():
    with warnings.catch_warnings(record=True) as w:
        warnings.simplefilter("always")
        fit = fit_rate([(16, 0.0), (32, 0.5), (64, 0.25), (128, 0.125)])
    assert any("dropping" in str(x.message) for x in w)
    assert fit.slope == pytest.approx(-1.0)
    assert len(fit.points) == 3


def test_fit_rate_needs_three_points():
    with pytest.raises(ConfigurationError):
        fit_rate([(16, 1.0), (32, 0.5)])
    with pytest.warns(RuntimeWarning), pytest.raises(ConfigurationError):
        fit_rate([(16, 1.0), (32, 0.5), (64, -1.0)])


def test_gap_needs_exact_oracle():
    prob = scalar_problem(1.0)
    object.__setattr__(prob.inner, "exact", None)
    with pytest.raises(ConfigurationError):
        generalized_fw_gap(prob, [0.0])
