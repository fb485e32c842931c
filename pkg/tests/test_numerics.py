import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from compfw.numerics import (
    ConfigurationError,
    NoiseSpec,
    OracleError,
    norm_op,
    sample_noise,
    sample_noise_vector,
    substream,
    top_singular_pair,
    vbe_constant,
)


def test_substream_is_reproducible_and_keyed():
    a = substream(5, 1, 2).standard_normal(8)
    b = substream(5, 1, 2).standard_normal(8)
    c = substream(5, 1, 3).standard_normal(8)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)


def test_none_family_gives_zero_vector():
    assert np.array_equal(sample_noise_vector(NoiseSpec("none"), 3, substream(0)), np.zeros(3))


def test_zero_scale_gaussian_gives_zero_vector():
    assert np.array_equal(sample_noise_vector(NoiseSpec("gaussian", 0.0), 5, substream(0)), np.zeros(5))


def test_unit_gaussian_moments():
    x = sample_noise(NoiseSpec("gaussian", 1.0), (100_000,), substream(0, 1))
    assert -0.02 <= x.mean() <= 0.02
    assert 0.97 <= x.var() <= 1.03


@pytest.mark.parametrize("family", ["laplace", "symmetric_pareto"])
def test_noise_families_are_centred(family):
    noise = NoiseSpec(family, 1.0, tail_index=3.5 if family == "symmetric_pareto" else None)
    x = sample_noise(noise, (200_000,), substream(1, 2))
    se = x.std() / math.sqrt(x.size)
    assert abs(x.mean()) <= 4 * se


def test_gaussian_and_laplace_entry_moments():
    g = sample_noise(NoiseSpec("gaussian", 0.7), (200_000,), substream(2))
    assert NoiseSpec("gaussian", 0.7).entry_moment(2.0) == pytest.approx(0.49)
    assert np.mean(g**2) == pytest.approx(0.49, rel=0.02)
    lap = sample_noise(NoiseSpec("laplace", 0.5), (200_000,), substream(3))
    assert NoiseSpec("laplace", 0.5).entry_moment(2.0) == pytest.approx(0.5)
    assert np.mean(lap**2) == pytest.approx(0.5, rel=0.03)


def test_pareto_tail_index_must_exceed_moment_order():
    with pytest.raises(ConfigurationError):
        NoiseSpec("symmetric_pareto", 1.0, tail_index=1.5, moment_order_r=2.0)
    assert NoiseSpec("symmetric_pareto", 1.0, moment_order_r=1.5).tail_index == 2.0


@pytest.mark.parametrize("bad", [dict(family="cauchy"), dict(scale=-1.0), dict(moment_order_r=1.0), dict(moment_order_r=2.5)])
def test_invalid_noise_specs(bad):
    kw = dict(family="gaussian", scale=1.0)
    kw.update(bad)
    with pytest.raises(ConfigurationError):
        NoiseSpec(**kw)


def test_vbe_constant_values():
    assert vbe_constant(2.0) == 1.0
    assert vbe_constant(1.5) == 2.0
    assert vbe_constant(2.0 - 1e-12) == 2.0
    for r in (1.0, 2.5):
        with pytest.raises(ConfigurationError):
            vbe_constant(r)


def test_top_pair_of_diagonal():
    u, s, v = top_singular_pair(np.diag([3.0, 1.0]))
    assert s == pytest.approx(3.0, abs=1e-10)
    assert abs(u[0]) == pytest.approx(1.0) and abs(v[0]) == pytest.approx(1.0)


def test_top_pair_of_padded_rank_one():
    a, b = np.array([1.0, -2.0, 0.0]), np.array([0.5, 0.0, 3.0, 0.0])
    _, s, _ = top_singular_pair(np.outer(a, b))
    assert s == pytest.approx(np.linalg.norm(a) * np.linalg.norm(b), rel=1e-12)


def _jacobi_top_singular_value(M):
    # one-sided Jacobi SVD: orthogonalize columns by plane rotations
    U = np.array(M, dtype=float)
    n = U.shape[1]
    for _ in range(60):
        off = 0.0
        for i in range(n - 1):
            for j in range(i + 1, n):
                a, b = U[:, i] @ U[:, i], U[:, j] @ U[:, j]
                c = U[:, i] @ U[:, j]
                off = max(off, abs(c) / math.sqrt(a * b) if a * b > 0 else 0.0)
                if abs(c) < 1e-300:
                    continue
                zeta = (b - a) / (2 * c)
                t = math.copysign(1.0, zeta) / (abs(zeta) + math.sqrt(1 + zeta**2))
                cs = 1 / math.sqrt(1 + t**2)
                sn = cs * t
                ui = U[:, i].copy()
                U[:, i] = cs * ui - sn * U[:, j]
                U[:, j] = sn * ui + cs * U[:, j]
        if off < 1e-15:
            break
    return float(np.linalg.norm(U, axis=0).max())


def test_top_pair_matches_jacobi_svd_on_random_5x4():
    M = np.random.default_rng(7).standard_normal((5, 4))
    _, s, _ = top_singular_pair(M, tol=1e-12)
    assert s == pytest.approx(_jacobi_top_singular_value(M), abs=1e-8)


def test_top_pair_with_clustered_singular_values():
    rng = np.random.default_rng(0)
    U, _ = np.linalg.qr(rng.standard_normal((30, 20)))
    V, _ = np.linalg.qr(rng.standard_normal((20, 20)))
    S = np.r_[1.0, 1.0 - 1e-9, 1.0 - 2e-9, np.full(17, 0.5)]
    u, s, v = top_singular_pair(U @ np.diag(S) @ V.T, tol=1e-8)
    assert s == pytest.approx(1.0, abs=1e-8)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 8), st.integers(1, 8), st.integers(0, 10_000))
def test_top_pair_properties(m, n, seed):
    M = np.random.default_rng(seed).standard_normal((m, n))
    u, s, v = top_singular_pair(M, tol=1e-10)
    assert np.linalg.norm(u) == pytest.approx(1.0) and np.linalg.norm(v) == pytest.approx(1.0)
    assert np.linalg.norm(M @ v - s * u) <= 1e-9 * s
    assert s <= np.linalg.norm(M) * (1 + 1e-12)
    # best rank-1 residual agrees with the full SVD
    full = np.linalg.svd(M, compute_uv=False)
    assert np.linalg.norm(M - s * np.outer(u, v)) ** 2 == pytest.approx(float((full[1:] ** 2).sum()), abs=1e-8)


def test_top_pair_errors():
    with pytest.raises(ConfigurationError):
        top_singular_pair(np.zeros((2, 2)))
    with pytest.raises(ConfigurationError):
        top_singular_pair(np.eye(2), tol=0.0)
    M = np.random.default_rng(1).standard_normal((12, 10))
    with pytest.raises(OracleError) as info:
        top_singular_pair(M, tol=1e-15, max_iter=1, block=1)
    assert info.value.residual is not None


def test_norm_op():
    assert norm_op(np.zeros((2, 3))) == 0.0
    M = np.random.default_rng(3).standard_normal((6, 4))
    assert norm_op(M) == pytest.approx(np.linalg.norm(M, 2), rel=1e-8)
