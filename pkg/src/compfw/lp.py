"""Dense two-phase simplex with Bland's rule for small linear programs.

The GLMOs of the max-of-affine, CVaR and l1 outer functions all reduce to
LPs with a few dozen variables, so a dense tableau is the right tool here.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .numerics import ConfigurationError

LE = "<="
EQ = "="

_PIVOT_TOL = 1e-10


@dataclass(frozen=True)
class LinearProgram:
    """``min c.x  s.t.  A x (<= | =) b,  lower <= x <= upper``.

    ``lower`` defaults to 0 and ``upper`` to +inf; either may be infinite.
    """

    c: np.ndarray
    A: np.ndarray
    b: np.ndarray
    sense: tuple = ()
    lower: np.ndarray | None = None
    upper: np.ndarray | None = None

    def __post_init__(self):
        c = np.asarray(self.c, dtype=float).ravel()
        n = c.size
        if n == 0:
            raise ConfigurationError("a linear program needs at least one variable")
        A = np.asarray(self.A, dtype=float).reshape(-1, n)
        b = np.asarray(self.b, dtype=float).ravel()
        if A.shape[0] != b.size:
            raise ConfigurationError(f"A has {A.shape[0]} rows but b has {b.size} entries")
        sense = tuple(self.sense) if len(self.sense) else (LE,) * b.size
        if len(sense) != b.size or any(s not in (LE, EQ) for s in sense):
            raise ConfigurationError("sense must give '<=' or '=' for every row")
        lower = np.zeros(n) if self.lower is None else np.asarray(self.lower, dtype=float).ravel()
        upper = np.full(n, np.inf) if self.upper is None else np.asarray(self.upper, dtype=float).ravel()
        if lower.size != n or upper.size != n:
            raise ConfigurationError("bounds must have one entry per variable")
        if np.any(lower == np.inf) or np.any(upper == -np.inf) or np.any(lower > upper):
            raise ConfigurationError("inconsistent variable bounds")
        for name, val in (("c", c), ("A", A), ("b", b), ("sense", sense), ("lower", lower), ("upper", upper)):
            object.__setattr__(self, name, val)

    @property
    def n_vars(self):
        return self.c.size

    @property
    def n_cons(self):
        return self.b.size

    def max_violation(self, x):
        """Largest constraint or bound violation of ``x``."""
        viol = [0.0]
        if self.n_cons:
            r = self.A @ x - self.b
            eq = np.array([s == EQ for s in self.sense])
            viol.append(np.max(np.where(eq, np.abs(r), np.maximum(r, 0.0))))
        viol.append(np.max(np.maximum(self.lower - x, 0.0)))
        viol.append(np.max(np.maximum(x - self.upper, 0.0)))
        return float(max(viol))


@dataclass
class LpSolution:
    status: str
    x: np.ndarray | None = None
    objective_value: float = np.nan
    duals: np.ndarray | None = field(default=None, repr=False)
    pivots: int = 0


def _bland_simplex(T, basis, allowed, tol):
    """Run primal simplex in place on tableau ``T`` (objective in last row).

    Returns ``"optimal"`` or ``"unbounded"`` and the pivot count.
    """
    m = T.shape[0] - 1
    obj = T[m, :-1]
    rhs = T[:m, -1]
    never = np.iinfo(np.int64).max
    pivots = 0
    while True:
        cand = (obj < -tol) & allowed
        j = int(cand.argmax())
        if not cand[j]:
            return "optimal", pivots
        col = T[:m, j]
        pos = col > tol
        if not pos.any():
            return "unbounded", pivots
        ratios = np.where(pos, rhs / np.where(pos, col, 1.0), np.inf)
        rmin = ratios.min()
        ties = ratios <= rmin + tol * max(1.0, abs(rmin))
        r = int(np.where(ties, basis, never).argmin())
        _pivot(T, r, j)
        basis[r] = j
        pivots += 1


def _pivot(T, r, j):
    piv = T[r] / T[r, j]
    T -= T[:, j, None] * piv
    T[r] = piv


def solve_lp(lp, feas_tol=1e-9):
    """Solve ``lp`` with the two-phase simplex method and Bland's rule.

    Infeasibility and unboundedness are reported through ``status``; the
    solver never raises for them. On optimal exits ``duals`` holds the row
    multipliers ``y`` read off the final basis, with the convention
    ``c - A^T y`` = reduced costs (so ``y <= 0`` on ``<=`` rows).
    """
    if feas_tol <= 0:
        raise ConfigurationError("feas_tol must be positive")
    n, m0 = lp.n_vars, lp.n_cons

    # substitute x = shift + P x', x' >= 0; free variables are split in two
    lo_fin, hi_fin = np.isfinite(lp.lower), np.isfinite(lp.upper)
    shift = np.where(lo_fin, lp.lower, np.where(hi_fin, lp.upper, 0.0))
    sign = np.where(lo_fin | ~hi_fin, 1.0, -1.0)
    free = ~lo_fin & ~hi_fin
    var_of = np.concatenate([np.arange(n), np.flatnonzero(free)])
    sgn = np.concatenate([sign, -np.ones(int(free.sum()))])
    order = np.argsort(var_of, kind="stable")
    var_of, sgn = var_of[order], sgn[order]
    ns = var_of.size
    P = np.zeros((n, ns))
    P[var_of, np.arange(ns)] = sgn
    boxed = lo_fin & hi_fin
    first_col = np.searchsorted(var_of, np.arange(n))
    ub_rows = list(zip(first_col[boxed], (lp.upper - lp.lower)[boxed]))

    m = m0 + len(ub_rows)
    A_std = np.zeros((m, ns))
    b_std = np.zeros(m)
    is_le = np.zeros(m, dtype=bool)
    if m0:
        A_std[:m0] = lp.A @ P
        b_std[:m0] = lp.b - lp.A @ shift
        is_le[:m0] = [s == LE for s in lp.sense]
    for i, (k, width) in enumerate(ub_rows):
        A_std[m0 + i, k] = 1.0
        b_std[m0 + i] = width
        is_le[m0 + i] = True
    c_std = P.T @ lp.c

    flip = b_std < 0
    A_std[flip] *= -1
    b_std[flip] *= -1

    n_slack = int(is_le.sum())
    needs_art = ~is_le | flip
    n_art = int(needs_art.sum())
    width = ns + n_slack + n_art
    T = np.zeros((m + 1, width + 1))
    T[:m, :ns] = A_std
    T[:m, -1] = b_std
    basis = np.empty(m, dtype=np.int64)
    init_cols = np.empty(m, dtype=np.int64)
    s_idx, a_idx = ns, ns + n_slack
    for i in range(m):
        if is_le[i]:
            T[i, s_idx] = -1.0 if flip[i] else 1.0
            if not flip[i]:
                basis[i] = init_cols[i] = s_idx
            s_idx += 1
        if needs_art[i]:
            T[i, a_idx] = 1.0
            basis[i] = init_cols[i] = a_idx
            a_idx += 1

    allowed = np.ones(width, dtype=bool)
    pivots = 0
    if n_art:
        art_rows = np.flatnonzero(needs_art)
        T[m, :] = 0.0
        T[m, ns + n_slack:width] = 1.0
        T[m] -= T[art_rows].sum(axis=0)
        _, p1 = _bland_simplex(T, basis, allowed, _PIVOT_TOL)
        pivots += p1
        if -T[m, -1] > feas_tol * max(1.0, np.abs(b_std).max(initial=0.0)):
            return LpSolution("infeasible", pivots=pivots)
        # drive zero-level artificials out of the basis where possible
        for i in range(m):
            if basis[i] >= ns + n_slack:
                row = T[i, : ns + n_slack]
                nz = np.flatnonzero(np.abs(row) > 1e-9)
                if nz.size:
                    _pivot(T, i, nz[0])
                    basis[i] = nz[0]
                    pivots += 1
        allowed[ns + n_slack:] = False

    cost = np.zeros(width)
    cost[:ns] = c_std
    T[m, :] = 0.0
    T[m, :width] = cost
    T[m] -= cost[basis] @ T[:m]
    status, p2 = _bland_simplex(T, basis, allowed, _PIVOT_TOL)
    pivots += p2
    if status == "unbounded":
        return LpSolution("unbounded", pivots=pivots)

    xs = np.zeros(width)
    xs[basis] = T[:m, -1]
    xs = np.maximum(xs[:ns], 0.0)
    x = shift + P @ xs
    # clip roundoff against the declared bounds
    x = np.clip(x, lp.lower, lp.upper)
    y_std = cost[basis] @ T[:m, init_cols] if m else np.zeros(0)
    y_std = np.where(flip, -y_std, y_std)
    return LpSolution(
        "optimal",
        x=x,
        objective_value=float(lp.c @ x),
        duals=y_std[:m0],
        pivots=pivots,
    )
