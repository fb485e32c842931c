"""Problem instances: stochastic inner oracle, outer function and domain.

An instance represents ``min_{x in X} F(f(x), x)`` where ``f = E[f~]`` is only
reachable through single-sample queries returning ``(f~(x), J~(x))``.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .numerics import ConfigurationError, NoiseSpec, norm_op, sample_noise

OUTER_KINDS = (
    "max_of_components",
    "cvar",
    "l1_norm_mean",
    "additive_composite",
    "linear_first_component",
)
DOMAIN_KINDS = ("l1_ball", "simplex_cross_interval", "nuclear_ball", "box")


# --------------------------------------------------------------------------
# inner oracle
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class OracleConstants:
    """Regularity constants of the inner map.

    ``L`` bounds the Jacobian variation in Frobenius norm per unit step (and
    hence each component Hessian); ``G`` is a Lipschitz constant of ``f``;
    ``sigma_f``/``sigma_g`` bound the r-th moment of the oracle errors.
    """

    L: float
    sigma_f: float
    sigma_g: float
    r: float = 2.0
    G: float | None = None
    sigma_H: float | None = None


@dataclass(frozen=True)
class InnerOracle:
    dim_x: int
    dim_u: int
    query: Callable
    constants: OracleConstants
    exact: Callable | None = None
    hessian_query: Callable | None = None


# --------------------------------------------------------------------------
# outer functions
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Regularizer:
    kind: str = "zero"
    lam: float = 0.0

    def __post_init__(self):
        if self.kind not in ("zero", "l1_penalty"):
            raise ConfigurationError(f"unknown regularizer {self.kind!r}")
        if self.lam < 0:
            raise ConfigurationError("regularizer weight must be >= 0")

    def __call__(self, x):
        if self.kind == "zero":
            return 0.0
        return self.lam * float(np.abs(x).sum())


@dataclass(frozen=True)
class OuterFunction:
    """Deterministic, possibly non-smooth outer function ``F(u, x)``.

    For ``cvar`` the confidence level ``alpha`` weights the tail mass
    ``1 - alpha``. With ``tau_index`` set, the value-at-risk level is read
    from ``x[tau_index]`` (the portfolio formulation with an explicit
    ``y_0``); otherwise the infimum over the level is taken in closed form.
    """

    kind: str
    lipschitz_LF: float
    alpha: float | None = None
    tau_index: int | None = None
    regularizer: Regularizer | None = None

    def __post_init__(self):
        if self.kind not in OUTER_KINDS:
            raise ConfigurationError(f"unknown outer kind {self.kind!r}")
        if not self.lipschitz_LF > 0:
            raise ConfigurationError("lipschitz_LF must be positive")
        if self.kind == "cvar" and not (self.alpha is not None and 0.0 < self.alpha < 1.0):
            raise ConfigurationError("cvar needs alpha in (0, 1)")
        if self.kind == "additive_composite" and self.regularizer is None:
            object.__setattr__(self, "regularizer", Regularizer())

    def __call__(self, u, x=None):
        return outer_eval(self, u, x)


def max_of_components():
    return OuterFunction("max_of_components", 1.0)


def linear_first_component():
    return OuterFunction("linear_first_component", 1.0)


def l1_norm_mean(n):
    # (1/n)||u||_1 <= (1/sqrt(n))||u||_2
    return OuterFunction("l1_norm_mean", 1.0 / math.sqrt(n))


def cvar(alpha, n, tau_index=None):
    return OuterFunction("cvar", cvar_lipschitz(1.0 - alpha, n), alpha=alpha, tau_index=tau_index)


def additive_composite(regularizer=None):
    return OuterFunction("additive_composite", 1.0, regularizer=regularizer or Regularizer())


def cvar_lipschitz(tail_fraction, n):
    """Lipschitz bound ``1/(a sqrt(n))`` of a CVaR whose hinge weight is ``1/(a n)``."""
    return 1.0 / (tail_fraction * math.sqrt(n))


def _cvar_inf(u, alpha):
    """inf_t  t + sum(max(0, u - t)) / ((1 - alpha) n), evaluated at every breakpoint."""
    n = u.size
    w = 1.0 / ((1.0 - alpha) * n)
    us = np.sort(u)[::-1]
    # with t = us[k], sum of (u - t)_+ is sum_{i<k}(us[i] - us[k])
    csum = np.concatenate(([0.0], np.cumsum(us)[:-1]))
    k = np.arange(n)
    vals = us + w * (csum - k * us)
    return float(vals.min())


def outer_eval(F, u, x=None):
    """Evaluate ``F(u, x)`` exactly."""
    u = np.asarray(u, dtype=float)
    kind = F.kind
    if kind == "max_of_components":
        return float(u.max())
    if kind == "linear_first_component":
        return float(u[0])
    if kind == "l1_norm_mean":
        return float(np.abs(u).mean())
    if kind == "additive_composite":
        if u.size != 1:
            raise ConfigurationError("additive_composite expects a scalar inner map")
        return float(u[0]) + F.regularizer(np.asarray(x, dtype=float))
    # cvar
    if F.tau_index is None:
        return _cvar_inf(u, F.alpha)
    w = 1.0 / ((1.0 - F.alpha) * u.size)
    return float(x[F.tau_index]) + w * float(np.maximum(u, 0.0).sum())


# --------------------------------------------------------------------------
# domains
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class DomainSpec:
    """Compact convex feasible set.

    ``simplex_cross_interval`` is the probability simplex over the first
    ``dim - 1`` coordinates times ``[lo, hi]`` on the last one. Matrices on
    the ``nuclear_ball`` are stored row-major as flat vectors.
    """

    kind: str
    dim: int
    tau: float | None = None
    lo: object = None
    hi: object = None
    rows: int | None = None
    cols: int | None = None

    def __post_init__(self):
        if self.kind not in DOMAIN_KINDS:
            raise ConfigurationError(f"unknown domain kind {self.kind!r}")
        if self.kind in ("l1_ball", "nuclear_ball") and not (self.tau and self.tau > 0):
            raise ConfigurationError("radius tau must be positive")
        if self.kind == "nuclear_ball" and self.rows * self.cols != self.dim:
            raise ConfigurationError("nuclear ball shape does not match dim")
        if self.kind == "box":
            lo = np.broadcast_to(np.asarray(self.lo, dtype=float), (self.dim,)).copy()
            hi = np.broadcast_to(np.asarray(self.hi, dtype=float), (self.dim,)).copy()
            if np.any(lo > hi):
                raise ConfigurationError("box needs lo <= hi")
            object.__setattr__(self, "lo", lo)
            object.__setattr__(self, "hi", hi)
        if self.kind == "simplex_cross_interval":
            if self.dim < 2 or not self.lo <= self.hi:
                raise ConfigurationError("simplex_cross_interval needs dim >= 2 and lo <= hi")

    @property
    def diameter(self):
        if self.kind in ("l1_ball", "nuclear_ball"):
            return 2.0 * self.tau
        if self.kind == "box":
            return float(np.linalg.norm(self.hi - self.lo))
        simplex_diam = math.sqrt(2.0) if self.dim > 2 else 0.0
        return math.sqrt(simplex_diam**2 + (self.hi - self.lo) ** 2)

    @property
    def radius(self):
        """max ||x|| over the set."""
        if self.kind in ("l1_ball", "nuclear_ball"):
            return float(self.tau)
        if self.kind == "box":
            return float(np.linalg.norm(np.maximum(np.abs(self.lo), np.abs(self.hi))))
        return math.sqrt(1.0 + max(abs(self.lo), abs(self.hi)) ** 2)

    def as_matrix(self, x):
        return np.asarray(x).reshape(self.rows, self.cols)

    def violation(self, x):
        """Distance-like infeasibility measure (0 when feasible)."""
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dim,):
            return np.inf
        if self.kind == "l1_ball":
            return max(0.0, float(np.abs(x).sum()) - self.tau)
        if self.kind == "box":
            return float(max(np.max(self.lo - x), np.max(x - self.hi), 0.0))
        if self.kind == "simplex_cross_interval":
            p, t = x[:-1], x[-1]
            return float(max(abs(p.sum() - 1.0), -p.min(), self.lo - t, t - self.hi, 0.0))
        nuc = np.linalg.svd(self.as_matrix(x), compute_uv=False).sum()
        return max(0.0, float(nuc) - self.tau)

    def contains(self, x, tol=1e-8):
        return self.violation(x) <= tol

    def default_point(self):
        x = np.zeros(self.dim)
        if self.kind == "simplex_cross_interval":
            x[:-1] = 1.0 / (self.dim - 1)
            x[-1] = min(max(0.0, self.lo), self.hi)
        elif self.kind == "box":
            x = np.clip(x, self.lo, self.hi)
        return x

    def random_vertex(self, rng):
        if self.kind == "l1_ball":
            x = np.zeros(self.dim)
            x[rng.integers(self.dim)] = self.tau * rng.choice([-1.0, 1.0])
            return x
        if self.kind == "box":
            return np.where(rng.random(self.dim) < 0.5, self.lo, self.hi)
        if self.kind == "simplex_cross_interval":
            x = np.zeros(self.dim)
            x[rng.integers(self.dim - 1)] = 1.0
            x[-1] = self.lo if rng.random() < 0.5 else self.hi
            return x
        u = rng.standard_normal(self.rows)
        v = rng.standard_normal(self.cols)
        return self.tau * np.outer(u / np.linalg.norm(u), v / np.linalg.norm(v)).ravel()

    def random_point(self, rng):
        """A random feasible point (convex combination of random vertices)."""
        k = 4
        w = rng.dirichlet(np.ones(k))
        return sum(wi * self.random_vertex(rng) for wi in w)


def l1_ball(d, tau):
    return DomainSpec("l1_ball", d, tau=float(tau))


def box(lo, hi, d=None):
    d = d if d is not None else np.size(lo)
    return DomainSpec("box", d, lo=lo, hi=hi)


def simplex_cross_interval(n_assets, lo=-1.0, hi=1.0):
    return DomainSpec("simplex_cross_interval", n_assets + 1, lo=float(lo), hi=float(hi))


def nuclear_ball(rows, cols, tau):
    return DomainSpec("nuclear_ball", rows * cols, tau=float(tau), rows=rows, cols=cols)


# --------------------------------------------------------------------------
# problem instance
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class ProblemInstance:
    inner: InnerOracle
    outer: OuterFunction
    domain: DomainSpec
    name: str = "problem"
    info: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.inner.dim_x != self.domain.dim:
            raise ConfigurationError(
                f"inner map acts on dimension {self.inner.dim_x}, domain has {self.domain.dim}"
            )
        if self.outer.kind in ("additive_composite",) and self.inner.dim_u != 1:
            raise ConfigurationError("additive_composite needs a scalar inner map")
        if self.outer.tau_index is not None and self.outer.tau_index >= self.domain.dim:
            raise ConfigurationError("cvar tau_index outside the decision vector")

    @property
    def has_exact(self):
        return self.inner.exact is not None

    def objective(self, x):
        """Exact ``phi(x) = F(f(x), x)``."""
        if self.inner.exact is None:
            raise ConfigurationError(f"{self.name}: no exact oracle available")
        f, _ = self.inner.exact(x)
        return outer_eval(self.outer, f, x)


# --------------------------------------------------------------------------
# task 1: robust minimax sparse regression
# --------------------------------------------------------------------------


def _estimate_sigmas(query, exact, points, r, draws, rng):
    """Monte Carlo estimate of ``(E||f~ - f||^r)^(1/r)`` and the Jacobian analogue."""
    sf = sg = 0.0
    for x in points:
        f, J = exact(x)
        ef = eg = 0.0
        for _ in range(draws):
            ft, Jt = query(x, rng)
            ef += np.linalg.norm(ft - f) ** r
            eg += np.linalg.norm(Jt - J) ** r
        sf = max(sf, (ef / draws) ** (1 / r))
        sg = max(sg, (eg / draws) ** (1 / r))
    return sf, sg


def _lipschitz_G(exact, domain, rng, n_points=1000):
    """1.2 x the largest sampled Jacobian norm over the domain."""
    pts = [domain.random_vertex(rng) for _ in range(n_points // 2)]
    pts += [domain.random_point(rng) for _ in range(n_points - len(pts))]
    return 1.2 * max(np.linalg.norm(exact(x)[1]) for x in pts)


def make_minimax_regression_from_data(
    groups, tau, noise=None, rng=None, minibatch=True, name="minimax_regression"
):
    """Minimax least squares over the l1 ball from explicit data groups.

    Parameters
    ----------
    groups : list of (A_i, b_i)
        Design matrix ``(N_i, d)`` and targets ``(N_i,)`` per group.
    tau : float
        l1 radius.
    noise : NoiseSpec, optional
        Additive perturbation of every returned ``f~`` entry and Jacobian entry.
    minibatch : bool
        If True each query uses one uniformly drawn sample per group;
        otherwise the full group average (then only ``noise`` is random).
    """
    noise = noise or NoiseSpec()
    rng = rng if rng is not None else np.random.default_rng(0)
    m = len(groups)
    d = groups[0][0].shape[1]
    A_all = np.concatenate([np.asarray(A, dtype=float) for A, _ in groups])
    b_all = np.concatenate([np.asarray(b, dtype=float) for _, b in groups])
    sizes = np.array([len(b) for _, b in groups])
    offsets = np.concatenate(([0], np.cumsum(sizes)[:-1]))

    def exact(x):
        res = A_all @ x - b_all
        f = 0.5 * np.add.reduceat(res * res, offsets) / sizes
        J = np.add.reduceat(res[:, None] * A_all, offsets, axis=0) / sizes[:, None]
        return f, J

    def query(x, rng):
        if minibatch:
            idx = offsets + rng.integers(0, sizes)
            a = A_all[idx]
            res = a @ x - b_all[idx]
            f = 0.5 * res * res
            J = res[:, None] * a
        else:
            f, J = exact(x)
        if not noise.is_zero:
            f = f + sample_noise(noise, (m,), rng)
            J = J + sample_noise(noise, (m, d), rng)
        return f, J

    def hessian_query(x, rng):
        if not minibatch:
            return np.stack([A.T @ A / len(A) for A, _ in groups])
        a = A_all[offsets + rng.integers(0, sizes)]
        return a[:, :, None] * a[:, None, :]

    domain = l1_ball(d, tau)
    L = max(norm_op(np.asarray(A, float).T @ np.asarray(A, float) / len(A)) for A, _ in groups)
    crng = np.random.default_rng(12345)
    G = _lipschitz_G(exact, domain, crng)
    pts = [domain.default_point()] + [domain.random_point(crng) for _ in range(4)]
    r = noise.moment_order_r
    sf, sg = _estimate_sigmas(query, exact, pts, r, 200, crng)
    inner = InnerOracle(
        dim_x=d,
        dim_u=m,
        query=query,
        exact=exact,
        hessian_query=hessian_query,
        constants=OracleConstants(L=L, G=G, sigma_f=sf, sigma_g=sg, r=r),
    )
    return ProblemInstance(inner, max_of_components(), domain, name=name)


def make_minimax_regression(
    m=10,
    d=100,
    tau=5.0,
    samples_per_group=50,
    noise=None,
    rng=None,
    group_noise=None,
    minibatch=True,
):
    """Synthetic robust minimax sparse regression.

    Inputs are standard Gaussian; every group shares a sparse ground truth
    but has its own label-noise level (``group_noise``, linearly spaced in
    ``[0.1, 1]`` by default) so that the groups compete.
    """
    if m < 1 or d < 1 or tau <= 0:
        raise ConfigurationError("need m >= 1, d >= 1, tau > 0")
    rng = rng if rng is not None else np.random.default_rng(0)
    if group_noise is None:
        group_noise = np.linspace(0.1, 1.0, m) if m > 1 else np.array([0.5])
    group_noise = np.broadcast_to(np.asarray(group_noise, dtype=float), (m,))
    k = max(1, d // 10)
    x_true = np.zeros(d)
    support = rng.choice(d, size=k, replace=False)
    x_true[support] = rng.choice([-1.0, 1.0], size=k) * rng.uniform(0.5, 1.0, size=k)
    x_true *= 0.5 * tau / np.abs(x_true).sum()
    groups = []
    for i in range(m):
        A = rng.standard_normal((samples_per_group, d))
        b = A @ x_true + group_noise[i] * rng.standard_normal(samples_per_group)
        groups.append((A, b))
    prob = make_minimax_regression_from_data(groups, tau, noise, rng, minibatch)
    prob.info.update(x_true=x_true, group_noise=group_noise)
    return prob


def make_minimax_regression_from_libsvm(path, m=10, tau=10.0, noise=None, rng=None):
    """Partition a LIBSVM dataset into ``m`` label-stratified groups."""
    X, y = load_libsvm(path)
    rng = rng if rng is not None else np.random.default_rng(0)
    labels = np.unique(y)
    chunks = [[] for _ in range(m)]
    for lab in labels:
        idx = rng.permutation(np.flatnonzero(y == lab))
        # contiguous label blocks give heterogeneous groups
        for g, part in enumerate(np.array_split(idx, m)):
            chunks[g].append(part)
    groups = []
    for c in chunks:
        idx = np.concatenate(c)
        if idx.size == 0:
            raise ConfigurationError("too many groups for this dataset")
        groups.append((X[idx], y[idx]))
    return make_minimax_regression_from_data(groups, tau, noise, rng, name="minimax_regression_libsvm")


# --------------------------------------------------------------------------
# task 2: CVaR portfolio
# --------------------------------------------------------------------------


def make_cvar_portfolio(d=50, alpha=0.95, horizon=100, noise=None, rng=None):
    """Risk-averse portfolio over ``simplex x [-1, 1]``.

    A fixed scenario matrix of heavy-tailed returns (``horizon`` rows) is
    drawn once; every query observes it through a fresh additive
    perturbation drawn from ``noise``. Component ``t`` of the inner map is
    the scenario loss net of the VaR level, ``-r_t . x - y_0``; the outer
    function adds ``y_0`` back and applies the hinge tail average.
    """
    if d < 1 or not 0 < alpha < 1 or horizon < 1:
        raise ConfigurationError("need d >= 1, alpha in (0,1), horizon >= 1")
    rng = rng if rng is not None else np.random.default_rng(0)
    noise = noise if noise is not None else NoiseSpec("symmetric_pareto", 0.005, moment_order_r=2.0, tail_index=3.0)
    n = horizon
    drift = rng.uniform(0.0, 1e-3, size=d)
    vol = rng.uniform(0.005, 0.02, size=d)
    market = rng.standard_t(3, size=(n, 1)) * 0.01
    idio = rng.standard_t(3, size=(n, d)) * vol
    returns = drift + 0.8 * market + idio
    base_J = np.hstack([-returns, -np.ones((n, 1))])

    def exact(x):
        return base_J @ x, base_J.copy()

    def query(x, rng):
        if noise.is_zero:
            return exact(x)
        E = sample_noise(noise, (n, d), rng)
        J = base_J.copy()
        J[:, :d] -= E
        return J @ x, J

    dim = d + 1
    if d == 1:
        # degenerate simplex: the weight is pinned to 1, only y_0 moves
        domain = box([1.0, -1.0], [1.0, 1.0])
    else:
        domain = simplex_cross_interval(d, -1.0, 1.0)
    crng = np.random.default_rng(54321)
    pts = [domain.default_point()] + [domain.random_point(crng) for _ in range(2)]
    sf, sg = _estimate_sigmas(query, exact, pts, noise.moment_order_r, 200, crng)
    G = float(np.linalg.norm(base_J, 2)) * 1.0
    inner = InnerOracle(
        dim_x=dim,
        dim_u=n,
        query=query,
        exact=exact,
        constants=OracleConstants(L=0.0, G=G, sigma_f=sf, sigma_g=sg, r=noise.moment_order_r),
    )
    outer = cvar(alpha, n, tau_index=d)
    return ProblemInstance(inner, outer, domain, name="cvar_portfolio", info={"returns": returns})


# --------------------------------------------------------------------------
# task 3: robust matrix completion
# --------------------------------------------------------------------------


def make_matrix_completion(rows=30, cols=20, rank=5, density=0.3, tau=None, noise=None, rng=None):
    """l1 matrix completion over a nuclear-norm ball.

    ``tau`` defaults to the nuclear norm of the ground truth so the truth is
    feasible. Each query perturbs the observed entries with fresh noise
    (Laplace by default); the Jacobian is an exact selection matrix.
    """
    if not 1 <= rank <= min(rows, cols) or not 0 < density <= 1:
        raise ConfigurationError("need 1 <= rank <= min(rows, cols) and density in (0, 1]")
    rng = rng if rng is not None else np.random.default_rng(0)
    noise = noise if noise is not None else NoiseSpec("laplace", 0.1)
    P = rng.standard_normal((rows, rank))
    Q = rng.standard_normal((cols, rank))
    M = P @ Q.T / math.sqrt(rank)
    n_obs = int(round(density * rows * cols))
    if n_obs == 0:
        raise ConfigurationError("density leaves no observed entries")
    obs = np.sort(rng.choice(rows * cols, size=n_obs, replace=False))
    target = M.ravel()[obs]
    J = np.zeros((n_obs, rows * cols))
    J[np.arange(n_obs), obs] = 1.0
    if tau is None:
        tau = float(np.linalg.svd(M, compute_uv=False).sum())

    def exact(x):
        return x[obs] - target, J.copy()

    def query(x, rng):
        f = x[obs] - target
        if not noise.is_zero:
            f = f - sample_noise(noise, (n_obs,), rng)
        return f, J.copy()

    r = noise.moment_order_r
    sf = math.sqrt(n_obs * noise.entry_moment(2.0)) if noise.family in ("gaussian", "laplace", "none") else None
    if sf is None:
        sf, _ = _estimate_sigmas(query, exact, [np.zeros(rows * cols)], r, 500, np.random.default_rng(7))
    inner = InnerOracle(
        dim_x=rows * cols,
        dim_u=n_obs,
        query=query,
        exact=exact,
        constants=OracleConstants(L=0.0, G=1.0, sigma_f=sf, sigma_g=0.0, r=r),
    )
    return ProblemInstance(
        inner,
        l1_norm_mean(n_obs),
        nuclear_ball(rows, cols, tau),
        name="matrix_completion",
        info={"M": M, "observed": obs},
    )


# --------------------------------------------------------------------------
# controlled smooth problems (tests, tracker checks, custom CLI task)
# --------------------------------------------------------------------------


def make_quadratic_problem(
    A,
    b,
    c,
    outer,
    domain,
    noise_f=None,
    noise_g=None,
    hessian_noise=None,
    hessian_noise_direction=None,
    name="quadratic",
):
    """Components ``f_i(x) = 1/2 x'A_i x + b_i'x + c_i`` with additive noise.

    ``hessian_noise`` scales a fixed direction tensor
    (``hessian_noise_direction``, shape ``(n, d, d)``, symmetrized) by a
    standard Gaussian ``g``, so the stochastic Hessian is ``A + s g B``.
    Each ``query`` draws its own ``g`` first and returns the sample
    function ``f + s g x'Bx/2`` and Jacobian ``J + s g Bx``, so that one
    sample is a genuine random quadratic.
    """
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    c = np.asarray(c, dtype=float)
    n, d = b.shape
    noise_f = noise_f or NoiseSpec()
    noise_g = noise_g or NoiseSpec()
    A = 0.5 * (A + A.transpose(0, 2, 1))
    B = None
    if hessian_noise:
        B = np.asarray(hessian_noise_direction, dtype=float)
        B = 0.5 * (B + B.transpose(0, 2, 1))

    def exact(x):
        Ax = A @ x
        return 0.5 * Ax @ x + b @ x + c, Ax + b

    def query(x, rng):
        f, J = exact(x)
        if B is not None:
            g = hessian_noise * rng.standard_normal()
            Bx = B @ x
            f = f + 0.5 * g * (Bx @ x)
            J = J + g * Bx
        if not noise_f.is_zero:
            f = f + sample_noise(noise_f, (n,), rng)
        if not noise_g.is_zero:
            J = J + sample_noise(noise_g, (n, d), rng)
        return f, J

    def hessian_query(x, rng):
        if B is None:
            return A.copy()
        return A + hessian_noise * rng.standard_normal() * B

    L = stacked_op_norm(A)
    R = domain.radius
    G = L * R + float(np.linalg.norm(b))
    r = min(noise_f.moment_order_r, noise_g.moment_order_r)
    var_f = n * noise_f.entry_moment(2.0) if not noise_f.is_zero else 0.0
    var_g = n * d * noise_g.entry_moment(2.0) if not noise_g.is_zero else 0.0
    sigma_H = None
    if B is not None:
        nB = stacked_op_norm(B)
        sigma_H = hessian_noise * nB * gaussian_abs_moment(r) ** (1.0 / r)
        # independent zero-mean parts add in second moment; ||Bx||_F <= ||B|| R
        var_g += (hessian_noise * nB * R) ** 2
        var_f += (0.5 * hessian_noise * nB * R**2) ** 2
    sigma_f, sigma_g = math.sqrt(var_f), math.sqrt(var_g)
    inner = InnerOracle(
        dim_x=d,
        dim_u=n,
        query=query,
        exact=exact,
        hessian_query=hessian_query,
        constants=OracleConstants(L=L, G=G, sigma_f=sigma_f, sigma_g=sigma_g, r=r, sigma_H=sigma_H),
    )
    return ProblemInstance(inner, outer, domain, name=name, info={"A": A, "b": b, "c": c})


def make_cubic_problem(coeffs, Q, domain, outer=None, noise_g=None, name="cubic"):
    """Components ``f_i(x) = sum_j coeffs[i, j] x_j^3 / 6 + 1/2 x'Q_i x``.

    The Hessian ``diag(coeffs[i] * x) + Q_i`` varies linearly in ``x``,
    which exercises the random-point Hessian correction.
    """
    coeffs = np.asarray(coeffs, dtype=float)
    Q = np.asarray(Q, dtype=float)
    Q = 0.5 * (Q + Q.transpose(0, 2, 1))
    n, d = coeffs.shape
    noise_g = noise_g or NoiseSpec()

    def exact(x):
        f = coeffs @ (x**3) / 6.0 + 0.5 * np.einsum("ijk,j,k->i", Q, x, x)
        J = 0.5 * coeffs * x**2 + Q @ x
        return f, J

    def query(x, rng):
        f, J = exact(x)
        if not noise_g.is_zero:
            J = J + sample_noise(noise_g, (n, d), rng)
        return f, J

    def hessian_query(x, rng):
        H = Q.copy()
        idx = np.arange(d)
        H[:, idx, idx] += coeffs * x
        if not noise_g.is_zero:
            E = sample_noise(noise_g, (n, d, d), rng)
            H = H + 0.5 * (E + E.transpose(0, 2, 1))
        return H

    R = domain.radius
    L = stacked_op_norm(Q) + float(np.linalg.norm(coeffs)) * R
    inner = InnerOracle(
        dim_x=d,
        dim_u=n,
        query=query,
        exact=exact,
        hessian_query=hessian_query,
        constants=OracleConstants(L=L, sigma_f=0.0, sigma_g=0.0),
    )
    return ProblemInstance(inner, outer or max_of_components(), domain, name=name)


def stacked_op_norm(H):
    """Operator norm of ``h -> (H_i h)_i`` into Frobenius norm, i.e. ``||vstack(H_i)||_2``."""
    H = np.asarray(H, dtype=float)
    return float(np.linalg.norm(H.reshape(-1, H.shape[-1]), 2))


def gaussian_abs_moment(r):
    """E|g|^r for a standard Gaussian g."""
    return 2 ** (r / 2) * math.gamma((r + 1) / 2) / math.sqrt(math.pi)


# --------------------------------------------------------------------------
# LIBSVM ingestion
# --------------------------------------------------------------------------


class LibsvmParseError(ValueError):
    def __init__(self, lineno, message):
        super().__init__(f"line {lineno}: {message}")
        self.lineno = lineno


_PAIR = re.compile(r"^(\d+):(\S+)$")


def load_libsvm(path, n_features=None):
    """Read a LIBSVM text file into a dense feature matrix and label vector.

    Indices are 1-based; absent entries are zero; text after ``#`` is a
    comment. Rows are padded to the largest index seen in the file, or to
    ``n_features`` columns when given (trailing all-zero columns are not
    recorded by the format).
    """
    labels, rows = [], []
    max_idx = 0
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            tokens = line.split()
            try:
                labels.append(float(tokens[0]))
            except ValueError:
                raise LibsvmParseError(lineno, f"bad label {tokens[0]!r}") from None
            entries = {}
            for tok in tokens[1:]:
                mt = _PAIR.match(tok)
                if mt is None:
                    raise LibsvmParseError(lineno, f"expected index:value, got {tok!r}")
                idx = int(mt.group(1))
                if idx < 1:
                    raise LibsvmParseError(lineno, "indices are 1-based")
                try:
                    entries[idx] = float(mt.group(2))
                except ValueError:
                    raise LibsvmParseError(lineno, f"bad value {mt.group(2)!r}") from None
                max_idx = max(max_idx, idx)
            rows.append(entries)
    if not rows:
        raise ConfigurationError(f"{path}: no data rows")
    if n_features is not None:
        if n_features < max_idx:
            raise ConfigurationError(f"{path}: index {max_idx} exceeds n_features={n_features}")
        max_idx = n_features
    X = np.zeros((len(rows), max_idx))
    for i, entries in enumerate(rows):
        for j, v in entries.items():
            X[i, j - 1] = v
    return X, np.array(labels)


def dump_libsvm(X, y, path):
    """Write a dense matrix in LIBSVM format, skipping zero entries."""
    with open(path, "w", encoding="utf-8") as fh:
        for row, label in zip(np.asarray(X), np.asarray(y)):
            pairs = " ".join(f"{j + 1}:{float(v)!r}" for j, v in enumerate(row) if v != 0)
            fh.write(f"{float(label)!r} {pairs}".rstrip() + "\n")
