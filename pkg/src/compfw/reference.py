"""Brute-force reference oracles for small instances.

These deliberately share no code with the LP solver or the GLMOs: LPs are
solved by enumerating basic solutions, GLMOs by evaluating the objective on
dense grids of the domain.
"""
from __future__ import annotations

import itertools

import numpy as np

from .lp import EQ
from .problems import outer_eval


def lp_vertex_enumeration(lp, tol=1e-9):
    """Optimal value of a bounded LP by enumerating all basic solutions.

    Every bound and row is a candidate hyperplane; equality rows are always
    active. Returns ``inf`` when no basic solution is feasible.
    """
    n = lp.n_vars
    hyper_A, hyper_b, forced = [], [], []
    for i in range(lp.n_cons):
        hyper_A.append(lp.A[i])
        hyper_b.append(lp.b[i])
        forced.append(lp.sense[i] == EQ)
    for j in range(n):
        e = np.zeros(n)
        e[j] = 1.0
        for bound in (lp.lower[j], lp.upper[j]):
            if np.isfinite(bound):
                hyper_A.append(e)
                hyper_b.append(bound)
                forced.append(False)
    hyper_A = np.array(hyper_A)
    hyper_b = np.array(hyper_b)
    eq_idx = [i for i, f in enumerate(forced) if f]
    free_idx = [i for i, f in enumerate(forced) if not f]
    need = n - len(eq_idx)
    best = np.inf
    if need < 0:
        combos = [()]
    else:
        combos = itertools.combinations(free_idx, need)
    for combo in combos:
        rows = eq_idx + list(combo)
        M = hyper_A[rows]
        if M.shape[0] != n or abs(np.linalg.det(M)) < 1e-12:
            if need < 0:
                x, *_ = np.linalg.lstsq(M, hyper_b[rows], rcond=None)
            else:
                continue
        else:
            x = np.linalg.solve(M, hyper_b[rows])
        if lp.max_violation(x) <= tol * max(1.0, np.abs(x).max()):
            best = min(best, float(lp.c @ x))
    return best


def l1_ball_grid(d, tau, h):
    """Grid points of ``[-tau, tau]^d`` with spacing ``h`` that lie in the l1 ball."""
    k = int(round(tau / h))
    axis = np.linspace(-tau, tau, 2 * k + 1)
    pts = np.stack(np.meshgrid(*([axis] * d), indexing="ij"), -1).reshape(-1, d)
    return pts[np.abs(pts).sum(1) <= tau * (1 + 1e-12)]


def box_grid(lo, hi, h):
    """Grid of a box including both faces and the origin when it is inside."""
    axes = []
    for a, b in zip(lo, hi):
        ax = np.linspace(a, b, max(2, int(np.ceil((b - a) / h)) + 1))
        if a < 0 < b:
            ax = np.union1d(ax, [0.0])
        axes.append(ax)
    return np.stack(np.meshgrid(*axes, indexing="ij"), -1).reshape(-1, len(axes))


def simplex_grid(k, h):
    """Barycentric grid of the probability simplex in ``R^k`` with spacing ``h``."""
    m = int(round(1.0 / h))
    pts = [c for c in itertools.product(range(m + 1), repeat=k - 1) if sum(c) <= m]
    pts = np.array([list(c) + [m - sum(c)] for c in pts], dtype=float) / m
    return pts


def simplex_cross_interval_grid(domain, h):
    p = simplex_grid(domain.dim - 1, h)
    t = np.linspace(domain.lo, domain.hi, max(2, int(np.ceil((domain.hi - domain.lo) / h)) + 1))
    P = np.repeat(p, t.size, axis=0)
    T = np.tile(t, p.shape[0])[:, None]
    return np.hstack([P, T])


def domain_grid(domain, h):
    if domain.kind == "l1_ball":
        return l1_ball_grid(domain.dim, domain.tau, h)
    if domain.kind == "box":
        return box_grid(domain.lo, domain.hi, h)
    if domain.kind == "simplex_cross_interval":
        return simplex_cross_interval_grid(domain, h)
    raise ValueError(f"no grid for {domain.kind!r}")


def glmo_grid(outer, domain, s, h):
    """Minimum of ``F(l(x), x)`` over a grid of the domain; returns ``(value, x)``."""
    X = domain_grid(domain, h)
    U = s.z[None, :] + (X - s.anchor_y[None, :]) @ s.V.T
    vals = np.array([outer_eval(outer, u, x) for u, x in zip(U, X)])
    i = int(np.argmin(vals))
    return float(vals[i]), X[i]
