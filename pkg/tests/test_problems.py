import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from compfw.numerics import ConfigurationError, NoiseSpec, substream
from compfw.problems import (
    LibsvmParseError,
    OuterFunction,
    Regularizer,
    additive_composite,
    box,
    cvar,
    cvar_lipschitz,
    dump_libsvm,
    gaussian_abs_moment,
    l1_ball,
    l1_norm_mean,
    linear_first_component,
    load_libsvm,
    make_cubic_problem,
    make_cvar_portfolio,
    make_matrix_completion,
    make_minimax_regression,
    make_minimax_regression_from_data,
    make_quadratic_problem,
    max_of_components,
    nuclear_ball,
    outer_eval,
    simplex_cross_interval,
    stacked_op_norm,
)


# --------------------------------------------------------------------------
# outer functions
# --------------------------------------------------------------------------


def test_outer_definitions():
    assert outer_eval(max_of_components(), [1.0, 3.0, 2.0]) == 3.0
    assert outer_eval(l1_norm_mean(3), [1.0, -1.0, 2.0]) == pytest.approx(4.0 / 3.0)
    assert outer_eval(cvar(0.5, 4), np.zeros(4)) == 0.0
    assert outer_eval(linear_first_component(), [2.0, -7.0]) == 2.0
    comp = additive_composite(Regularizer("l1_penalty", 0.5))
    assert outer_eval(comp, [1.0], np.array([1.0, -2.0])) == pytest.approx(2.5)


def test_cvar_closed_form_matches_level_grid():
    rng = np.random.default_rng(0)
    for alpha in (0.5, 0.8, 0.95):
        u = rng.standard_normal(20)
        w = 1.0 / ((1.0 - alpha) * u.size)
        t = np.linspace(-4, 4, 80_001)
        grid = (t + w * np.maximum(u[None, :] - t[:, None], 0.0).sum(1)).min()
        assert outer_eval(cvar(alpha, 20), u) == pytest.approx(grid, abs=1e-3)
        assert outer_eval(cvar(alpha, 20), u) <= grid + 1e-12


def test_cvar_lipschitz_arithmetic():
    assert cvar_lipschitz(0.95, 100) == pytest.approx(0.10526, abs=1e-5)
    # the portfolio weights the tail mass 1 - alpha
    assert cvar(0.95, 100).lipschitz_LF == pytest.approx(1.0 / (0.05 * 10.0))


def test_invalid_outer_functions():
    with pytest.raises(ConfigurationError):
        OuterFunction("l2_norm", 1.0)
    with pytest.raises(ConfigurationError):
        OuterFunction("max_of_components", 0.0)
    with pytest.raises(ConfigurationError):
        OuterFunction("cvar", 1.0, alpha=1.0)
    with pytest.raises(ConfigurationError):
        Regularizer("l1_penalty", -1.0)


def _outers(n):
    return [
        (max_of_components(), None),
        (linear_first_component(), None),
        (l1_norm_mean(n), None),
        (cvar(0.7, n), None),
        (cvar(0.7, n, tau_index=0), "tau"),
    ]


vec = st.lists(st.floats(-10, 10, allow_nan=False), min_size=4, max_size=4)


@settings(max_examples=100, deadline=None)
@given(vec, st.lists(st.floats(0, 5), min_size=4, max_size=4), st.floats(1.0, 10.0), st.floats(0.0, 1.0), vec)
def test_outer_monotone_subhomogeneous_lipschitz(u, bump, gamma, level, v):
    u, v = np.array(u), np.array(v)
    x = np.array([level, 0.0, 0.0, 0.0])
    for F, _ in _outers(4):
        if F.kind == "l1_norm_mean":
            # l1 is monotone only on the nonnegative orthant
            uu = np.abs(u)
        else:
            uu = u
        assert outer_eval(F, uu, x) <= outer_eval(F, uu + np.array(bump), x) + 1e-9
        assert outer_eval(F, gamma * u, x) <= gamma * outer_eval(F, u, x) + 1e-9 * (1 + gamma * np.abs(u).sum())
        assert abs(outer_eval(F, u, x) - outer_eval(F, v, x)) <= F.lipschitz_LF * np.linalg.norm(u - v) + 1e-9


# --------------------------------------------------------------------------
# domains
# --------------------------------------------------------------------------


def test_domain_diameters():
    assert l1_ball(5, 2.0).diameter == 4.0
    assert nuclear_ball(3, 2, 1.5).diameter == 3.0
    assert simplex_cross_interval(3, -1.0, 1.0).diameter == pytest.approx(math.sqrt(6.0))
    assert box([0.0, 0.0], [3.0, 4.0]).diameter == pytest.approx(5.0)


@pytest.mark.parametrize(
    "dom",
    [l1_ball(4, 2.0), box([-1.0, 0.0, 2.0], [1.0, 0.5, 3.0]), simplex_cross_interval(3), nuclear_ball(3, 2, 1.0)],
)
def test_random_points_and_vertices_are_feasible(dom):
    rng = np.random.default_rng(0)
    assert dom.contains(dom.default_point())
    for _ in range(50):
        assert dom.contains(dom.random_point(rng), 1e-9)
        assert dom.contains(dom.random_vertex(rng), 1e-9)
    assert not dom.contains(np.full(dom.dim, 10.0))


def test_invalid_domains():
    with pytest.raises(ConfigurationError):
        l1_ball(3, 0.0)
    with pytest.raises(ConfigurationError):
        box([1.0], [0.0])
    with pytest.raises(ConfigurationError):
        simplex_cross_interval(2, 1.0, -1.0)


# --------------------------------------------------------------------------
# tasks
# --------------------------------------------------------------------------


def _small_tasks():
    return [
        make_minimax_regression(m=3, d=2, tau=1.0, samples_per_group=50, rng=np.random.default_rng(3)),
        make_cvar_portfolio(d=3, horizon=6, rng=np.random.default_rng(1)),
        make_matrix_completion(rows=3, cols=2, rank=1, density=1.0, rng=np.random.default_rng(2)),
    ]


@pytest.mark.parametrize("idx", [0, 1, 2])
def test_oracles_are_unbiased(idx):
    prob = _small_tasks()[idx]
    rng = np.random.default_rng(10 + idx)
    draws = 10_000
    for _ in range(5):
        x = prob.domain.random_point(rng)
        f, J = prob.inner.exact(x)
        F = np.empty((draws, f.size))
        G = np.empty((draws,) + J.shape)
        for t in range(draws):
            F[t], G[t] = prob.inner.query(x, rng)
        for samples, truth in ((F, f), (G, J)):
            se = samples.std(0, ddof=1) / math.sqrt(draws)
            err = np.abs(samples.mean(0) - truth)
            assert np.all(err <= 3 * se + 1e-12)


@pytest.mark.parametrize("idx", [0, 1, 2])
def test_jacobians_match_finite_differences(idx):
    prob = _small_tasks()[idx]
    rng = np.random.default_rng(20 + idx)
    h = 1e-6
    for _ in range(5):
        x = prob.domain.random_point(rng)
        _, J = prob.inner.exact(x)
        fd = np.empty_like(J)
        for j in range(x.size):
            e = np.zeros(x.size)
            e[j] = h
            fd[:, j] = (prob.inner.exact(x + e)[0] - prob.inner.exact(x - e)[0]) / (2 * h)
        assert np.allclose(J, fd, rtol=1e-5, atol=1e-7)


def test_minimax_defaults_and_constants():
    prob = make_minimax_regression(rng=np.random.default_rng(0))
    assert (prob.inner.dim_u, prob.inner.dim_x) == (10, 100)
    assert prob.domain.kind == "l1_ball" and prob.domain.tau == 5.0
    assert prob.outer.kind == "max_of_components" and prob.outer.lipschitz_LF == 1.0


def test_minimax_with_duplicate_groups_is_least_squares():
    rng = np.random.default_rng(4)
    A = rng.standard_normal((30, 1))
    b = rng.standard_normal(30)
    prob = make_minimax_regression_from_data([(A, b), (A, b)], tau=1.0)
    for x in np.linspace(-1, 1, 11):
        f, _ = prob.inner.exact(np.array([x]))
        assert f[0] == f[1]
        assert prob.objective(np.array([x])) == pytest.approx(0.5 * np.mean((A[:, 0] * x - b) ** 2))


def test_minimax_lipschitz_constant_is_largest_group_curvature():
    prob = make_minimax_regression(m=3, d=4, tau=1.0, samples_per_group=20, rng=np.random.default_rng(5))
    x = prob.domain.random_point(np.random.default_rng(1))
    H = prob.inner.hessian_query(x, np.random.default_rng(2))
    assert H.shape == (3, 4, 4)
    # exact Jacobians differ linearly with group Hessians bounded by L
    y = prob.domain.random_point(np.random.default_rng(3))
    dJ = prob.inner.exact(x)[1] - prob.inner.exact(y)[1]
    assert np.abs(dJ).max() <= np.sqrt(3) * prob.inner.constants.L * np.linalg.norm(x - y) + 1e-12


def test_portfolio_structure():
    prob = make_cvar_portfolio(rng=np.random.default_rng(0))
    assert prob.domain.kind == "simplex_cross_interval" and prob.domain.dim == 51
    assert prob.inner.dim_u == 100
    x = prob.domain.default_point()
    returns = prob.info["returns"]
    f, J = prob.inner.exact(x)
    assert np.allclose(f, -returns @ x[:-1] - x[-1])
    assert prob.objective(x) == pytest.approx(x[-1] + np.maximum(f, 0).sum() / (0.05 * 100))


def test_single_asset_portfolio_reduces_to_one_dimensional_cvar():
    prob = make_cvar_portfolio(d=1, horizon=40, rng=np.random.default_rng(6))
    assert prob.domain.contains(np.array([1.0, 0.3]))
    assert not prob.domain.contains(np.array([0.5, 0.3]))
    levels = np.arange(-1.0, 1.0 + 5e-5, 1e-4)
    grid = min(prob.objective(np.array([1.0, t])) for t in levels)
    losses = -prob.info["returns"][:, 0]
    assert grid == pytest.approx(outer_eval(cvar(0.95, 40), losses), abs=1e-4)


def test_matrix_completion_defaults_and_exact_recovery():
    prob = make_matrix_completion(rng=np.random.default_rng(0))
    assert prob.domain.kind == "nuclear_ball" and (prob.domain.rows, prob.domain.cols) == (30, 20)
    assert prob.inner.dim_u == 180
    clean = make_matrix_completion(noise=NoiseSpec("none"), rng=np.random.default_rng(0))
    M = clean.info["M"].ravel()
    assert np.array_equal(clean.inner.query(M, substream(0))[0], np.zeros(180))
    assert clean.objective(M) == 0.0


def test_matrix_completion_rank_one_full_density():
    prob = make_matrix_completion(rows=3, cols=3, rank=1, density=1.0, rng=np.random.default_rng(1))
    assert prob.objective(np.zeros(9)) == pytest.approx(np.abs(prob.info["M"]).sum() / 9)


def test_matrix_completion_jacobian_is_constant():
    prob = make_matrix_completion(rows=4, cols=3, rank=2, density=0.5, rng=np.random.default_rng(1))
    rng = np.random.default_rng(2)
    J0 = prob.inner.query(np.zeros(12), rng)[1]
    for _ in range(10):
        assert np.array_equal(prob.inner.query(prob.domain.random_point(rng), rng)[1], J0)
    assert prob.inner.constants.sigma_g == 0.0 and prob.inner.constants.L == 0.0


def test_matrix_completion_rejects_bad_parameters():
    with pytest.raises(ConfigurationError):
        make_matrix_completion(rows=3, cols=3, rank=1, density=0.01)
    with pytest.raises(ConfigurationError):
        make_matrix_completion(rows=3, cols=3, rank=4)


# --------------------------------------------------------------------------
# controlled problems
# --------------------------------------------------------------------------


def test_quadratic_noise_free_query_is_exact():
    rng = np.random.default_rng(0)
    A = rng.standard_normal((2, 3, 3))
    prob = make_quadratic_problem(A, rng.standard_normal((2, 3)), np.zeros(2), max_of_components(), l1_ball(3, 1.0))
    x = prob.domain.random_point(rng)
    f, J = prob.inner.query(x, rng)
    fe, Je = prob.inner.exact(x)
    assert np.array_equal(f, fe) and np.array_equal(J, Je)
    assert prob.inner.constants.L == pytest.approx(stacked_op_norm(0.5 * (A + A.transpose(0, 2, 1))))


def test_quadratic_hessian_noise_query_is_a_random_quadratic():
    rng = np.random.default_rng(1)
    A = rng.standard_normal((2, 3, 3))
    B = rng.standard_normal((2, 3, 3))
    prob = make_quadratic_problem(A, np.zeros((2, 3)), np.zeros(2), max_of_components(), l1_ball(3, 1.0),
                                  hessian_noise=0.5, hessian_noise_direction=B)
    x, y = rng.standard_normal(3), rng.standard_normal(3)
    _, Jx = prob.inner.query(x, substream(4, 1))
    _, Jy = prob.inner.query(y, substream(4, 1))
    H = prob.inner.hessian_query(x, substream(4, 1))
    assert np.allclose(Jx - Jy, H @ (x - y))
    assert prob.inner.constants.sigma_H == pytest.approx(0.5 * stacked_op_norm(0.5 * (B + B.transpose(0, 2, 1))))


def test_cubic_hessian_is_derivative_of_jacobian():
    rng = np.random.default_rng(2)
    prob = make_cubic_problem(rng.standard_normal((2, 3)), rng.standard_normal((2, 3, 3)), box(-np.ones(3), np.ones(3)))
    x = rng.uniform(-1, 1, 3)
    H = prob.inner.hessian_query(x, rng)
    h = 1e-6
    for j in range(3):
        e = np.zeros(3)
        e[j] = h
        fd = (prob.inner.exact(x + e)[1] - prob.inner.exact(x - e)[1]) / (2 * h)
        assert np.allclose(H[:, :, j], fd, atol=1e-6)


def test_gaussian_abs_moment():
    assert gaussian_abs_moment(2.0) == pytest.approx(1.0)
    assert gaussian_abs_moment(1.0) == pytest.approx(math.sqrt(2 / math.pi))


def test_dimension_mismatch_is_rejected():
    with pytest.raises(ConfigurationError):
        make_quadratic_problem(np.zeros((1, 2, 2)), np.zeros((1, 2)), np.zeros(1), max_of_components(), l1_ball(3, 1.0))
    with pytest.raises(ConfigurationError):
        make_quadratic_problem(np.zeros((2, 2, 2)), np.zeros((2, 2)), np.zeros(2), additive_composite(), l1_ball(2, 1.0))


# --------------------------------------------------------------------------
# LIBSVM
# --------------------------------------------------------------------------


def test_libsvm_lines(tmp_path):
    p = tmp_path / "a.txt"
    p.write_text("1 1:0.5 3:2\n-1 2:1  # comment\n\n", encoding="utf-8")
    X, y = load_libsvm(p)
    assert np.array_equal(X, [[0.5, 0.0, 2.0], [0.0, 1.0, 0.0]])
    assert np.array_equal(y, [1.0, -1.0])
    X, _ = load_libsvm(p, n_features=5)
    assert X.shape == (2, 5)
    with pytest.raises(ConfigurationError):
        load_libsvm(p, n_features=2)


def test_libsvm_round_trip(tmp_path):
    rng = np.random.default_rng(0)
    X = rng.standard_normal((10, 6)) * (rng.random((10, 6)) < 0.4)
    X[:, -1] = 0.0
    X[0, -1] = 1.25
    y = rng.choice([-1.0, 1.0], 10)
    p = tmp_path / "rt.txt"
    dump_libsvm(X, y, p)
    X2, y2 = load_libsvm(p, n_features=6)
    assert np.array_equal(X, X2) and np.array_equal(y, y2)


@pytest.mark.parametrize("text,line", [("1 1:0.5\n1 x:2\n", 2), ("a 1:1\n", 1), ("1 0:1\n", 1), ("1 2:abc\n", 1)])
def test_libsvm_parse_errors_carry_line_numbers(tmp_path, text, line):
    p = tmp_path / "bad.txt"
    p.write_text(text, encoding="utf-8")
    with pytest.raises(LibsvmParseError) as info:
        load_libsvm(p)
    assert info.value.lineno == line


def test_libsvm_empty_file(tmp_path):
    p = tmp_path / "empty.txt"
    p.write_text("# nothing\n", encoding="utf-8")
    with pytest.raises(ConfigurationError):
        load_libsvm(p)
