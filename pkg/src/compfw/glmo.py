"""Generalized linear minimization oracles.

Given an affine model ``l(x) = z + V (x - y)`` of the inner map, a GLMO
returns ``argmin_{x in X} F(l(x), x)``. For polyhedral domains and the
piecewise-affine outer functions used here this is a small LP; on the
nuclear-norm ball it is solved approximately by an inner Frank-Wolfe loop.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .lp import EQ, LE, LinearProgram, solve_lp
from .numerics import ConfigurationError, OracleError, top_singular_pair
from .problems import OuterFunction, Regularizer, outer_eval


@dataclass(frozen=True)
class AffineSurrogate:
    z: np.ndarray
    V: np.ndarray
    anchor_y: np.ndarray

    def __post_init__(self):
        z = np.atleast_1d(np.asarray(self.z, dtype=float))
        V = np.asarray(self.V, dtype=float).reshape(z.size, -1)
        y = np.asarray(self.anchor_y, dtype=float).ravel()
        if V.shape[1] != y.size:
            raise ConfigurationError(f"surrogate Jacobian is {V.shape}, anchor has size {y.size}")
        object.__setattr__(self, "z", z)
        object.__setattr__(self, "V", V)
        object.__setattr__(self, "anchor_y", y)

    def __call__(self, x):
        return self.z + self.V @ (np.asarray(x, dtype=float) - self.anchor_y)

    @property
    def offset(self):
        """Constant term ``z - V y`` of the model."""
        return self.z - self.V @ self.anchor_y


@dataclass(frozen=True)
class GlmoResult:
    x_star: np.ndarray
    surrogate_value: float
    inner_iterations: int = 0


@dataclass(frozen=True)
class GlmoParams:
    inner_budget: int = 200
    smoothing_mu: float = 1e-3
    feas_tol: float = 1e-9
    svd_tol: float = 1e-8

    def scaled(self, factor):
        return GlmoParams(self.inner_budget * factor, self.smoothing_mu, self.feas_tol, self.svd_tol)


# --------------------------------------------------------------------------
# classical LMOs
# --------------------------------------------------------------------------


def lmo_l1_ball(g, tau):
    """Minimize ``<g, x>`` over ``||x||_1 <= tau`` (lowest index on ties)."""
    if tau <= 0:
        raise ConfigurationError("tau must be positive")
    g = np.asarray(g, dtype=float)
    x = np.zeros_like(g)
    if not np.any(g):
        return x
    i = int(np.argmax(np.abs(g)))
    x[i] = -tau * np.sign(g[i])
    return x


def lmo_nuclear_ball(G, tau, tol=1e-8):
    """Minimize ``<G, X>`` over ``||X||_* <= tau`` via the top singular pair."""
    if tau <= 0:
        raise ConfigurationError("tau must be positive")
    G = np.asarray(G, dtype=float)
    if not np.any(G):
        return np.zeros_like(G)
    u, _, v = top_singular_pair(G, tol=tol)
    return -tau * np.outer(u, v)


def domain_lmo(domain, g, tol=1e-8):
    """Vertex of ``domain`` minimizing ``<g, x>``."""
    g = np.asarray(g, dtype=float)
    if domain.kind == "l1_ball":
        return lmo_l1_ball(g, domain.tau)
    if domain.kind == "nuclear_ball":
        return lmo_nuclear_ball(domain.as_matrix(g), domain.tau, tol).ravel()
    if domain.kind == "box":
        return np.where(g > 0, domain.lo, domain.hi)
    x = np.zeros(domain.dim)
    x[int(np.argmin(g[:-1]))] = 1.0
    x[-1] = domain.lo if g[-1] > 0 else domain.hi
    return x


# --------------------------------------------------------------------------
# polyhedral GLMO via LP
# --------------------------------------------------------------------------


def _encode_domain(domain):
    """LP encoding ``x = shift + P w`` plus constraints on ``w``."""
    d = domain.dim
    if domain.kind == "l1_ball":
        P = np.hstack([np.eye(d), -np.eye(d)])
        return dict(
            P=P,
            shift=np.zeros(d),
            lower=np.zeros(2 * d),
            upper=np.full(2 * d, np.inf),
            A=np.ones((1, 2 * d)),
            b=np.array([domain.tau]),
            sense=(LE,),
        )
    if domain.kind == "box":
        return dict(P=np.eye(d), shift=np.zeros(d), lower=domain.lo, upper=domain.hi,
                    A=np.zeros((0, d)), b=np.zeros(0), sense=())
    if domain.kind == "simplex_cross_interval":
        lower = np.zeros(d)
        upper = np.full(d, np.inf)
        lower[-1], upper[-1] = domain.lo, domain.hi
        A = np.ones((1, d))
        A[0, -1] = 0.0
        return dict(P=np.eye(d), shift=np.zeros(d), lower=lower, upper=upper,
                    A=A, b=np.array([1.0]), sense=(EQ,))
    raise ConfigurationError(f"domain {domain.kind!r} is not polyhedral")


def polyhedral_glmo(outer, domain, s, feas_tol=1e-9):
    """Exact GLMO as an LP for max / cvar / l1-mean / linear outer functions."""
    enc = _encode_domain(domain)
    P, shift = enc["P"], enc["shift"]
    p = P.shape[1]
    n = s.z.size
    C = s.V @ P
    c0 = s.offset + s.V @ shift

    # LP base point (where solve_lp starts); epigraph levels are shifted by the
    # model value there so that as many rows as possible start feasible
    lo, hi = enc["lower"], enc["upper"]
    w_base = np.where(np.isfinite(lo), lo, np.where(np.isfinite(hi), hi, 0.0))
    t0 = float(np.max(c0 + C @ w_base))

    blocks_A, blocks_b, sense = [], [], []
    kind = outer.kind
    if kind in ("linear_first_component",):
        n_aux, aux_lo, aux_hi = 0, [], []
        obj_aux = np.zeros(0)
        obj_w = C[0].copy()
    elif kind == "max_of_components":
        n_aux = 1
        aux_lo, aux_hi = [-np.inf], [np.inf]
        obj_aux = np.array([1.0])
        obj_w = np.zeros(p)
        blocks_A.append(np.hstack([C, -np.ones((n, 1))]))
        blocks_b.append(t0 - c0)
        sense += [LE] * n
    elif kind == "l1_norm_mean":
        n_aux = n
        aux_lo, aux_hi = [0.0] * n, [np.inf] * n
        obj_aux = np.full(n, 1.0 / n)
        obj_w = np.zeros(p)
        blocks_A.append(np.hstack([C, -np.eye(n)]))
        blocks_b.append(-c0)
        blocks_A.append(np.hstack([-C, -np.eye(n)]))
        blocks_b.append(c0)
        sense += [LE] * (2 * n)
    elif kind == "cvar":
        w = 1.0 / ((1.0 - outer.alpha) * n)
        if outer.tau_index is not None:
            n_aux = n
            aux_lo, aux_hi = [0.0] * n, [np.inf] * n
            obj_aux = np.full(n, w)
            obj_w = P[outer.tau_index].copy()
            blocks_A.append(np.hstack([C, -np.eye(n)]))
            blocks_b.append(-c0)
        else:
            n_aux = n + 1
            aux_lo, aux_hi = [-np.inf] + [0.0] * n, [np.inf] * (n + 1)
            obj_aux = np.concatenate(([1.0], np.full(n, w)))
            obj_w = np.zeros(p)
            blocks_A.append(np.hstack([C, -np.ones((n, 1)), -np.eye(n)]))
            blocks_b.append(t0 - c0)
        sense += [LE] * n
    elif kind == "additive_composite":
        reg = outer.regularizer
        obj_w = C[0].copy()
        if reg.kind == "zero":
            n_aux, aux_lo, aux_hi, obj_aux = 0, [], [], np.zeros(0)
        else:
            d = domain.dim
            n_aux = d
            aux_lo, aux_hi = [0.0] * d, [np.inf] * d
            obj_aux = np.full(d, reg.lam)
            blocks_A.append(np.hstack([P, -np.eye(d)]))
            blocks_b.append(-shift)
            blocks_A.append(np.hstack([-P, -np.eye(d)]))
            blocks_b.append(shift)
            sense += [LE] * (2 * d)
    else:
        raise ConfigurationError(f"no LP encoding for outer kind {kind!r}")

    nv = p + n_aux
    dom_A = np.hstack([enc["A"], np.zeros((enc["A"].shape[0], n_aux))])
    A = np.vstack(blocks_A + [dom_A]) if blocks_A else dom_A
    b = np.concatenate(blocks_b + [enc["b"]]) if blocks_b else enc["b"]
    sense = tuple(sense) + tuple(enc["sense"])
    lp = LinearProgram(
        c=np.concatenate([obj_w, obj_aux]),
        A=A.reshape(-1, nv),
        b=b,
        sense=sense,
        lower=np.concatenate([enc["lower"], aux_lo]),
        upper=np.concatenate([enc["upper"], aux_hi]),
    )
    sol = solve_lp(lp, feas_tol)
    if sol.status != "optimal":
        raise OracleError(f"GLMO linear program ended with status {sol.status!r}")
    x = shift + P @ sol.x[:p]
    return GlmoResult(x, outer_eval(outer, s(x), x), 0)


def glmo_max_affine(s, domain):
    """``argmin max_i l_i(x)`` over an l1 ball: one epigraph variable, split ``x = x+ - x-``."""
    if domain.kind != "l1_ball":
        raise ConfigurationError("glmo_max_affine expects an l1 ball")
    return polyhedral_glmo(OuterFunction("max_of_components", 1.0), domain, s)


def glmo_cvar(s, domain, alpha):
    """CVaR GLMO over ``simplex x [lo, hi]`` with hinge auxiliaries."""
    if domain.kind != "simplex_cross_interval":
        raise ConfigurationError("glmo_cvar expects a simplex_cross_interval domain")
    outer = OuterFunction("cvar", 1.0, alpha=alpha, tau_index=domain.dim - 1)
    return polyhedral_glmo(outer, domain, s)


def glmo_composite(s, domain, Xi=None):
    """Classical composite FW oracle ``argmin <V_1, x> + Xi(x)``."""
    Xi = Xi or Regularizer()
    if s.z.size != 1:
        raise ConfigurationError("composite GLMO needs a scalar inner map")
    outer = OuterFunction("additive_composite", 1.0, regularizer=Xi)
    g = s.V[0]
    if Xi.kind == "zero":
        x = domain_lmo(domain, g)
    elif domain.kind == "box":
        lam = Xi.lam
        x = np.empty(domain.dim)
        for i in range(domain.dim):
            cands = [c for c in (0.0, domain.lo[i], domain.hi[i]) if domain.lo[i] <= c <= domain.hi[i]]
            vals = [g[i] * c + lam * abs(c) for c in cands]
            x[i] = cands[int(np.argmin(vals))]
    elif domain.kind in ("l1_ball", "simplex_cross_interval"):
        return polyhedral_glmo(outer, domain, s)
    else:
        raise ConfigurationError(f"no composite oracle for {Xi.kind} on {domain.kind}")
    return GlmoResult(x, outer_eval(outer, s(x), x), 0)


# --------------------------------------------------------------------------
# nuclear-ball GLMO for the l1 outer function
# --------------------------------------------------------------------------


def glmo_l1_nuclear(s, domain, inner_budget=200, smoothing_mu=1e-3, tol=1e-8):
    """Approximate ``argmin mean|l(X)|`` over the nuclear ball.

    Runs ``inner_budget`` Frank-Wolfe steps (step ``2/(t+2)``) on the
    Huber-smoothed objective starting from the anchor, and returns the best
    iterate measured by the unsmoothed objective.
    """
    if domain.kind != "nuclear_ball":
        raise ConfigurationError("glmo_l1_nuclear expects a nuclear ball")
    if inner_budget < 1 or smoothing_mu <= 0:
        raise ConfigurationError("need inner_budget >= 1 and smoothing_mu > 0")
    n = s.z.size
    V, c0 = s.V, s.offset
    X = s.anchor_y.copy()
    lX = c0 + V @ X
    best_x, best_h = X, float(np.abs(lX).mean())
    for t in range(inner_budget):
        grad = V.T @ np.clip(lX / smoothing_mu, -1.0, 1.0) / n
        if not np.any(grad):
            break
        S = lmo_nuclear_ball(domain.as_matrix(grad), domain.tau, tol).ravel()
        step = 2.0 / (t + 2.0)
        X = X + step * (S - X)
        lX = c0 + V @ X
        h = float(np.abs(lX).mean())
        if h < best_h:
            best_x, best_h = X, h
    return GlmoResult(best_x, best_h, inner_budget)


# --------------------------------------------------------------------------
# dispatch
# --------------------------------------------------------------------------


def solve_glmo(outer, domain, s, params=None):
    """Route ``(outer, domain)`` to the matching oracle."""
    params = params or GlmoParams()
    kind = outer.kind
    if kind == "linear_first_component":
        x = domain_lmo(domain, s.V[0], params.svd_tol)
        return GlmoResult(x, outer_eval(outer, s(x), x), 0)
    if kind == "additive_composite":
        return glmo_composite(s, domain, outer.regularizer)
    if domain.kind == "nuclear_ball":
        if kind == "l1_norm_mean":
            return glmo_l1_nuclear(s, domain, params.inner_budget, params.smoothing_mu, params.svd_tol)
        raise ConfigurationError(f"no nuclear-ball oracle for outer kind {kind!r}")
    return polyhedral_glmo(outer, domain, s, params.feas_tol)
