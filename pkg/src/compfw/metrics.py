"""Gap evaluation, curvature probing, theory constants and rate fitting."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .glmo import AffineSurrogate, GlmoParams, solve_glmo
from .numerics import ConfigurationError, vbe_constant
from .problems import outer_eval
from .trackers import convex_offset

# inexact nuclear-ball GLMO gets this multiple of the solver's inner budget
NUCLEAR_GAP_BUDGET_FACTOR = 5


def generalized_fw_gap(problem, y, glmo_params=None):
    """``phi(y) - min_x F(f(y) + J(y)(x - y), x)`` with the exact oracle.

    Nonnegative up to GLMO tolerance. On the nuclear ball the inner solver
    runs with a larger budget than inside the optimization loop.
    """
    if not problem.has_exact:
        raise ConfigurationError(f"{problem.name}: the gap needs an exact oracle")
    params = glmo_params or GlmoParams()
    if problem.domain.kind == "nuclear_ball":
        params = params.scaled(NUCLEAR_GAP_BUDGET_FACTOR)
    y = np.asarray(y, dtype=float)
    f, J = problem.inner.exact(y)
    phi = outer_eval(problem.outer, f, y)
    res = solve_glmo(problem.outer, problem.domain, AffineSurrogate(f, J, y), params)
    return phi - res.surrogate_value


def curvature_probe(problem, num_pairs=1000, gamma_grid=None, rng=None):
    """Monte Carlo lower estimate of the composite curvature constant.

    Samples ``x, y`` as domain vertices or interior points (equal odds) and
    returns the largest ``(2/g^2) [F(f(y_g), y_g) - F(f(x) + g J(x)(y - x), y_g)]``
    with ``y_g = x + g (y - x)``. Differences within floating-point
    resolution of the two outer values are treated as zero, since the
    ``2/g^2`` factor would otherwise amplify rounding noise.
    """
    if not problem.has_exact:
        raise ConfigurationError(f"{problem.name}: the curvature probe needs an exact oracle")
    rng = rng if rng is not None else np.random.default_rng(0)
    if gamma_grid is None:
        gamma_grid = [2.0**-i for i in range(11)]
    dom, F, exact = problem.domain, problem.outer, problem.inner.exact

    def draw():
        return dom.random_vertex(rng) if rng.random() < 0.5 else dom.random_point(rng)

    eps = np.finfo(float).eps
    best = 0.0
    for _ in range(num_pairs):
        x, y = draw(), draw()
        fx, Jx = exact(x)
        step = y - x
        lin = Jx @ step
        for g in gamma_grid:
            yg = x + g * step
            f_true = exact(yg)[0]
            f_model = fx + g * lin
            true_val = outer_eval(F, f_true, yg)
            model_val = outer_eval(F, f_model, yg)
            diff = true_val - model_val
            # rounding floor of the two evaluations
            scale = abs(true_val) + abs(model_val) + F.lipschitz_LF * (
                np.linalg.norm(f_true) + np.linalg.norm(fx) + g * np.linalg.norm(lin)
            )
            if abs(diff) <= 64 * eps * max(scale, 1.0):
                diff = 0.0
            best = max(best, 2.0 * diff / g**2)
    return best


# --------------------------------------------------------------------------
# theory constants
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class TheoryConstants:
    """Problem constants and the explicit bound constants derived from them.

    ``init_moment_g``/``init_moment_f`` are ``E||V_0 - J(y_0)||^r`` and
    ``E||z_0 - f(y_0)||^r``; ``phi0`` is the initial suboptimality.
    """

    L_F: float
    L: float
    G: float | None
    D_X: float
    n: int
    sigma_f: float
    sigma_g: float
    r: float
    phi0: float = 0.0
    init_moment_g: float = 0.0
    init_moment_f: float = 0.0

    @property
    def C_r(self):
        return vbe_constant(self.r)

    @property
    def S_bound(self):
        return self.L_F * self.L * self.D_X**2 * math.sqrt(self.n)

    def _root(self, c):
        return c ** ((self.r - 1) / self.r)

    @property
    def E_g0(self):
        return self._root(3) * self.init_moment_g ** (1 / self.r)

    @property
    def E_f0(self):
        return self._root(3) * self.init_moment_f ** (1 / self.r)

    @property
    def E_f0_II(self):
        return self._root(4) * self.init_moment_f ** (1 / self.r)

    @property
    def U_g(self):
        return self._root(3) * max(self.L * self.D_X, self.C_r ** (1 / self.r) * self.sigma_g)

    @property
    def U_f_I(self):
        return self._root(3) * max(self._need_G() * self.D_X, self.C_r ** (1 / self.r) * self.sigma_f)

    @property
    def U_f_II(self):
        D = self.D_X
        return self._root(4) * max(self.L * D**2 / 2, self.U_g * D, self.C_r ** (1 / self.r) * self.sigma_f)

    def _need_G(self):
        if self.G is None:
            raise ConfigurationError("Variant I constants need a Lipschitz constant G for f")
        return self.G

    @property
    def M_I(self):
        LF, D = self.L_F, self.D_X
        return (
            self.phi0
            + 0.5 * self.S_bound
            + 2 * LF * (self.E_f0 + 2 * self.U_f_I)
            + 2 * LF * D * (self.E_g0 + 2 * self.U_g)
        )

    @property
    def M_II(self):
        LF, D = self.L_F, self.D_X
        return (
            self.phi0
            + 0.5 * self.S_bound
            + 2 * LF * (self.E_f0_II + (3 + self.E_g0) * self.U_f_II)
            + 2 * LF * D * (self.E_g0 + 2 * self.U_g)
        )

    # decreasing-schedule (convex) constants -------------------------------

    @property
    def k0(self):
        return convex_offset(self.r)

    @property
    def q(self):
        return self.r * (self.r - 1) / (2 * self.r - 1)

    @property
    def p(self):
        return (self.r - 1) / (2 * self.r - 1)

    @property
    def Q_g_bar(self):
        r = self.r
        M_g = 2 ** (r - 1) * 4**r * self.L**r * self.D_X**r + self.C_r * self.sigma_g**r
        return max(self.k0**self.q * self.init_moment_g, 2 * M_g)

    @property
    def Q_g(self):
        return self.Q_g_bar ** (1 / self.r)

    def Q_f(self, variant="variant2"):
        r, D = self.r, self.D_X
        if variant == "variant1":
            drift = 4**r * self._need_G() ** r * D**r
        else:
            drift = 4**r * self.L**r * D ** (2 * r) / 2**r + 4**r * D**r * self.Q_g_bar
        M_f = 4 ** (r - 1) * (drift + self.C_r * self.sigma_f**r)
        return max(self.k0**self.q * self.init_moment_f, 2 * M_f) ** (1 / r)

    def A_cvx(self, variant="variant2"):
        p = self.p
        B = 2 * self.S_bound + 4 * self.L_F * (self.Q_f(variant) + self.D_X * self.Q_g) * 2**p
        return max(2**p * self.phi0, B / (2 - p))


def theory_constants_from(problem, phi0=0.0, r=None, init_moment_g=0.0, init_moment_f=0.0):
    """Collect the constants of ``problem`` with given initialization moments."""
    c = problem.inner.constants
    return TheoryConstants(
        L_F=problem.outer.lipschitz_LF,
        L=c.L,
        G=c.G,
        D_X=problem.domain.diameter,
        n=problem.inner.dim_u,
        sigma_f=c.sigma_f,
        sigma_g=c.sigma_g,
        r=c.r if r is None else r,
        phi0=phi0,
        init_moment_g=init_moment_g,
        init_moment_f=init_moment_f,
    )


def compute_theory_constants(problem, phi0, r=None, init_moment_draws=1000, rng=None, y0=None):
    """Theory constants with initialization moments estimated at ``y0``."""
    if not problem.has_exact:
        raise ConfigurationError(f"{problem.name}: constants need an exact oracle")
    rng = rng if rng is not None else np.random.default_rng(0)
    r = problem.inner.constants.r if r is None else r
    y0 = problem.domain.default_point() if y0 is None else np.asarray(y0, dtype=float)
    f, J = problem.inner.exact(y0)
    mg = mf = 0.0
    for _ in range(init_moment_draws):
        ft, Jt = problem.inner.query(y0, rng)
        mg += np.linalg.norm(Jt - J) ** r
        mf += np.linalg.norm(ft - f) ** r
    n = max(init_moment_draws, 1)
    return theory_constants_from(problem, phi0, r, mg / n, mf / n)


# --------------------------------------------------------------------------
# rate fitting
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class RateFit:
    slope: float
    intercept: float
    r_squared: float
    points: tuple


def fit_rate(results):
    """Least-squares line through ``(ln K, ln min_gap)``.

    Nonpositive gaps cannot be logged; they are dropped with a warning.
    """
    pts = []
    for K, g in results:
        if not g > 0:
            warnings.warn(f"dropping nonpositive min-gap {g} at K={K}", RuntimeWarning, stacklevel=2)
            continue
        pts.append((math.log(K), math.log(g)))
    if len({p[0] for p in pts}) < 3:
        raise ConfigurationError("rate fit needs at least 3 distinct K with positive gaps")
    x = np.array([p[0] for p in pts])
    y = np.array([p[1] for p in pts])
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = float(((y - y.mean()) ** 2).sum())
    ss_res = float((resid**2).sum())
    r2 = 1.0 if ss_tot <= 1e-300 else 1.0 - ss_res / ss_tot
    return RateFit(float(slope), float(intercept), r2, tuple(pts))
