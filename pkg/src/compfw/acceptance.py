"""Acceptance checks: one function per criterion, grouped into suites.

Each check returns a ``CriterionResult``; ``run_suite`` prints one
pass/fail line per criterion. ``fast=True`` shrinks horizons and seed
counts (and widens the rate bands accordingly) for quick smoke runs.
"""
from __future__ import annotations

import functools
import math
import tempfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import reference
from .glmo import AffineSurrogate, domain_lmo, glmo_composite, glmo_cvar, glmo_max_affine
from .lp import EQ, LE, LinearProgram, solve_lp
from .metrics import curvature_probe, fit_rate, generalized_fw_gap, theory_constants_from
from .numerics import NoiseSpec, substream
from .problems import (
    Regularizer,
    additive_composite,
    box,
    cvar,
    l1_ball,
    linear_first_component,
    make_cubic_problem,
    make_cvar_portfolio,
    make_matrix_completion,
    make_minimax_regression,
    make_quadratic_problem,
    max_of_components,
    simplex_cross_interval,
)
from .solver import SolverConfig, run
from .trackers import Schedule, hessian_correction

GAP_FLOOR = -1e-8

# raw gaps of every gap-recording acceptance run, for the nonnegativity check
_GAP_LOG = {"runs": 0, "steps": 0, "min_raw": np.inf}


@dataclass(frozen=True)
class CriterionResult:
    number: int
    name: str
    passed: bool
    measured: str
    detail: str = ""

    def line(self):
        tag = "PASS" if self.passed else "FAIL"
        extra = f" ({self.detail})" if self.detail else ""
        return f"[{tag}] criterion {self.number}: {self.name}: {self.measured}{extra}"


# --------------------------------------------------------------------------
# shared instances and cached runs
# --------------------------------------------------------------------------


@functools.lru_cache(maxsize=None)
def task1_small():
    """Minimax regression with 5 groups, 20 features, l1 radius 2, Gaussian noise 0.5."""
    return make_minimax_regression(
        m=5, d=20, tau=2.0, samples_per_group=50,
        noise=NoiseSpec("gaussian", 0.5), rng=np.random.default_rng(1),
    )


@functools.lru_cache(maxsize=None)
def task2_default():
    return make_cvar_portfolio(rng=np.random.default_rng(2))


@functools.lru_cache(maxsize=None)
def task3_default():
    return make_matrix_completion(rng=np.random.default_rng(3))


def _log_gaps(rec):
    raw = rec.column("gap")
    raw = raw[np.isfinite(raw)]
    _GAP_LOG["runs"] += 1
    _GAP_LOG["steps"] += raw.size
    if raw.size:
        _GAP_LOG["min_raw"] = min(_GAP_LOG["min_raw"], float(raw.min()))


@functools.lru_cache(maxsize=None)
def _min_gaps(variant, schedule_kind, K, seeds, clip_C=None):
    """Min recorded gap per seed for one Task-1-small configuration."""
    prob = task1_small()
    out = []
    for seed in seeds:
        cfg = SolverConfig(variant=variant, schedule=Schedule(schedule_kind), K=K, seed=seed, clip_C=clip_C)
        rec = run(prob, cfg)
        _log_gaps(rec)
        out.append(rec.summary["min_gap"])
    return tuple(out)


def _grid(fast):
    return (128, 256, 512, 1024) if fast else (256, 512, 1024, 2048, 4096)


def _seeds(fast):
    return tuple(range(5 if fast else 10))


# clipping threshold for Task-1-small, about half the exact Jacobian norm at 0
TASK1_CLIP_C = 1.0


# --------------------------------------------------------------------------
# criteria
# --------------------------------------------------------------------------


def criterion_nonconvex_rate(fast=False):
    grid, seeds = _grid(fast), _seeds(fast)
    lo, hi, r2_min = (-0.50, -0.05, 0.70) if fast else (-0.40, -0.12, 0.85)
    pts = [(K, float(np.mean(_min_gaps("variant2", "nonconvex_constant", K, seeds)))) for K in grid]
    fit = fit_rate(pts)
    ok = lo <= fit.slope <= hi and fit.r_squared >= r2_min
    means = ", ".join(f"K={K}: {g:.4f}" for K, g in pts)
    return CriterionResult(
        1, "non-convex rate (Variant II, Task-1-small)", ok,
        f"slope={fit.slope:.3f} in [{lo}, {hi}], r2={fit.r_squared:.3f} >= {r2_min}",
        f"mean min-gap {means}",
    )


def convex_quadratic_instance():
    """Convex max-of-quadratics over the unit l1 ball, exact oracle."""
    rng = substream(2024, 2)
    n, d = 3, 5
    M = rng.standard_normal((n, d, d))
    A = M @ M.transpose(0, 2, 1) / d
    b = rng.standard_normal((n, d))
    c = rng.standard_normal(n)
    return make_quadratic_problem(A, b, c, max_of_components(), l1_ball(d, 1.0), name="convex_quadratic")


def nonconvex_quadratic_instance():
    """Max of indefinite quadratics over the unit l1 ball, exact oracle."""
    rng = substream(2024, 3)
    n, d = 3, 5
    M = rng.standard_normal((n, d, d))
    A = 0.5 * (M + M.transpose(0, 2, 1))
    b = rng.standard_normal((n, d))
    c = rng.standard_normal(n)
    return make_quadratic_problem(A, b, c, max_of_components(), l1_ball(d, 1.0), name="nonconvex_quadratic")


def criterion_deterministic_convex(fast=False):
    prob = convex_quadratic_instance()
    S = theory_constants_from(prob).S_bound
    # certified lower bound on phi*: phi(y) - gap(y) <= phi* for convex problems
    ref = run(prob, SolverConfig("deterministic_basic", Schedule("deterministic_convex"), K=20_000, record_every=20))
    _log_gaps(ref)
    phi_lb = float(np.max(ref.column("objective") - ref.column("gap")))
    worst, rows = -np.inf, []
    for K in (10, 50, 100, 500):
        rec = run(prob, SolverConfig("deterministic_basic", Schedule("deterministic_convex"), K=K, record_gap=False))
        excess = rec.summary["final_objective"] - phi_lb
        bound = 2 * S / (K + 1)
        worst = max(worst, excess - bound)
        rows.append(f"K={K}: {excess:.3e} <= {bound:.3e}")
    return CriterionResult(
        2, "deterministic convex bound 2S/(K+1)", worst <= 1e-10,
        f"max(excess - bound)={worst:.3e}", "; ".join(rows),
    )


def criterion_deterministic_nonconvex(fast=False):
    prob = nonconvex_quadratic_instance()
    S = theory_constants_from(prob).S_bound
    y0 = prob.domain.default_point()
    # any attained value upper-bounds phi*, so Phi_0 is under-estimated (conservative)
    best = prob.objective(y0)
    rng = substream(2024, 4)
    starts = [y0] + [prob.domain.random_point(rng) for _ in range(3)]
    for start in starts:
        rec = run(prob, SolverConfig("deterministic_basic", Schedule("deterministic_nonconvex"),
                                     K=3000, record_every=10, record_gap=False), start)
        best = min(best, float(np.nanmin(rec.column("objective"))))
    phi0 = prob.objective(y0) - best
    worst, rows = -np.inf, []
    for K in (100, 1000):
        rec = run(prob, SolverConfig("deterministic_basic", Schedule("deterministic_nonconvex"), K=K, record_every=1), y0)
        _log_gaps(rec)
        min_gap = float(np.min(rec.column("gap")))
        bound = (phi0 + 0.5 * S * (1 + math.log(K + 1))) / math.sqrt(K + 1)
        worst = max(worst, min_gap - bound)
        rows.append(f"K={K}: {min_gap:.3e} <= {bound:.3e}")
    return CriterionResult(
        3, "deterministic non-convex bound", worst <= 1e-10,
        f"max(min-gap - bound)={worst:.3e}", "; ".join(rows),
    )


def _random_lp(rng):
    n = int(rng.integers(1, 6))
    m = int(rng.integers(0, 7))
    x0 = rng.uniform(0, 1, n)
    A = rng.standard_normal((m, n))
    sense = tuple(EQ if rng.random() < 0.2 else LE for _ in range(m))
    slack = np.where(np.array(sense) == EQ, 0.0, rng.uniform(0, 1, m)) if m else np.zeros(0)
    lo = rng.choice([0.0, -1.0], n)
    hi = rng.uniform(1, 2, n)
    return LinearProgram(rng.standard_normal(n), A, A @ x0 + slack, sense, lo, hi)


def _unit_rows(rng, n, d, scale=1.0):
    V = rng.standard_normal((n, d))
    return scale * V / np.maximum(np.linalg.norm(V, axis=1, keepdims=True), 1.0)


def glmo_grid_errors(n_instances=100, seed=0):
    """Largest ``|oracle - grid|`` over random instances, in units of the grid spacing.

    Returns a dict per oracle. Instances are scaled so the objective is at
    most 3-Lipschitz, hence a correct oracle lies within a few spacings of
    the grid optimum and never above it.
    """
    rng = substream(seed, 40)
    out = {}

    worst = 0.0
    for _ in range(n_instances):
        d = int(rng.integers(1, 4))
        n = int(rng.integers(1, 5))
        h = 0.01 if d <= 2 else 0.04
        dom = l1_ball(d, 1.0)
        s = AffineSurrogate(rng.standard_normal(n) * 0.5, _unit_rows(rng, n, d), dom.random_point(rng))
        val = glmo_max_affine(s, dom).surrogate_value
        gval, _ = reference.glmo_grid(max_of_components(), dom, s, h)
        worst = max(worst, abs(val - gval) / h, (val - gval) / 1e-9)
    out["max_affine"] = worst

    worst = 0.0
    for _ in range(n_instances):
        assets = int(rng.integers(1, 3))
        n = int(rng.integers(1, 5))
        alpha = float(rng.uniform(0.1, 0.6))
        h = 0.01 if assets == 1 else 0.02
        dom = simplex_cross_interval(assets, -1.0, 1.0)
        w = 1.0 / ((1.0 - alpha) * n)
        V = _unit_rows(rng, n, dom.dim, scale=0.5 / (w * n))
        s = AffineSurrogate(rng.standard_normal(n) * 0.2, V, dom.random_point(rng))
        val = glmo_cvar(s, dom, alpha).surrogate_value
        gval, _ = reference.glmo_grid(cvar(alpha, n, tau_index=dom.dim - 1), dom, s, h)
        worst = max(worst, abs(val - gval) / h, (val - gval) / 1e-9)
    out["cvar"] = worst

    worst = 0.0
    for i in range(n_instances):
        d = int(rng.integers(1, 4))
        h = 0.01 if d <= 2 else 0.04
        kind = i % 3
        if kind == 0:
            lo = -rng.uniform(0.2, 1.0, d)
            dom = box(lo, rng.uniform(0.2, 1.0, d))
        elif kind == 1:
            dom = l1_ball(d, 1.0)
        else:
            dom = simplex_cross_interval(max(d - 1, 1), -1.0, 1.0)
        reg = Regularizer("l1_penalty", float(rng.uniform(0, 1))) if rng.random() < 0.7 else Regularizer()
        s = AffineSurrogate(rng.standard_normal(1), _unit_rows(rng, 1, dom.dim), dom.random_point(rng))
        val = glmo_composite(s, dom, reg).surrogate_value
        gval, _ = reference.glmo_grid(additive_composite(reg), dom, s, h)
        worst = max(worst, abs(val - gval) / h, (val - gval) / 1e-9)
    out["composite"] = worst
    return out


def lp_enumeration_error(n_lps=200, seed=0):
    rng = substream(seed, 41)
    worst, solved = 0.0, 0
    for _ in range(n_lps):
        lp = _random_lp(rng)
        sol = solve_lp(lp)
        ref = reference.lp_vertex_enumeration(lp)
        if sol.status != "optimal":
            return np.inf, solved
        worst = max(worst, abs(sol.objective_value - ref))
        solved += 1
    return worst, solved


def criterion_glmo_equivalence(fast=False):
    errs = glmo_grid_errors(100)
    lp_err, n_lp = lp_enumeration_error(200)
    ok = all(v <= 3.0 for v in errs.values()) and lp_err <= 1e-8 and n_lp == 200
    meas = ", ".join(f"{k}: {v:.2f} h" for k, v in errs.items())
    return CriterionResult(
        4, "GLMO and LP oracle equivalence", ok,
        f"{meas} (tolerance 3 h); LP vs enumeration max err {lp_err:.2e} over {n_lp} LPs",
    )


def tracker_instance(noise=0.3):
    rng = substream(2024, 5)
    n, d = 3, 4
    M = rng.standard_normal((n, d, d))
    A = 0.5 * (M + M.transpose(0, 2, 1))
    b = rng.standard_normal((n, d))
    c = rng.standard_normal(n)
    ns = NoiseSpec("gaussian", noise)
    return make_quadratic_problem(A, b, c, max_of_components(), l1_ball(d, 1.0), ns, ns, name="tracker_quadratic")


def tracker_moments(prob, variant, K, seeds, ks):
    """Monte Carlo ``E||delta_g||^2`` and ``E||delta_f||^2`` at every step up to ``max(ks)``."""
    dg = np.zeros((len(seeds), K + 1))
    df = np.zeros((len(seeds), K + 1))
    for i, seed in enumerate(seeds):
        rec = run(prob, SolverConfig(variant, Schedule("nonconvex_constant"), K=K, seed=seed,
                                     record_every=1, record_gap=False))
        dg[i] = rec.column("delta_g_norm")
        df[i] = rec.column("delta_f_norm")
    return (dg**2).mean(0), (df**2).mean(0)


def tracker_bounds(consts, gamma, beta, k, max_dg=None, variant="variant1"):
    """Bounds on the Jacobian, Polyak-value and Taylor-value tracking errors at step ``k`` (constant schedule)."""
    r, L, D, C = consts.r, consts.L, consts.D_X, consts.C_r
    rho = beta
    jac = 3 ** (r - 1) * (
        (1 - beta) ** (r * k) * consts.sigma_g**r + L**r * D**r * gamma**r / beta**r + C * consts.sigma_g**r * beta ** (r - 1)
    )
    pol = 3 ** (r - 1) * (
        (1 - rho) ** (r * k) * consts.sigma_f**r + consts.G**r * D**r * gamma**r / rho**r + C * consts.sigma_f**r * rho ** (r - 1)
    )
    tay = None
    if max_dg is not None:
        tay = 4 ** (r - 1) * (
            (1 - rho) ** (r * k) * consts.sigma_f**r
            + L**r * D ** (2 * r) * gamma ** (2 * r) / (2**r * rho**r)
            + D**r * gamma**r / rho**r * max_dg
            + C * consts.sigma_f**r * rho ** (r - 1)
        )
    return jac, pol, tay


def criterion_tracker_bounds(fast=False):
    prob = tracker_instance()
    consts = theory_constants_from(prob)
    K, ks = 128, (10, 100)
    seeds = tuple(range(20 if fast else 50))
    gamma = K ** -0.75
    beta = K ** -0.5
    g1, f1 = tracker_moments(prob, "variant1", K, seeds, ks)
    g2, f2 = tracker_moments(prob, "variant2", K, seeds, ks)
    ok, rows = True, []
    for k in ks:
        jac, pol, tay = tracker_bounds(consts, gamma, beta, k, max_dg=float(g2[1 : k + 1].max()))
        checks = [("jacobian/I", g1[k], jac), ("jacobian/II", g2[k], jac), ("value/polyak", f1[k], pol), ("value/taylor", f2[k], tay)]
        for name, lhs, rhs in checks:
            ok &= bool(lhs <= rhs)
            rows.append(f"k={k} {name}: {lhs:.4f} <= {rhs:.4f}")
    return CriterionResult(5, "tracker error bounds", ok, f"{len(rows)} checks", "; ".join(rows))


def cubic_instance():
    rng = substream(2024, 6)
    n, d = 2, 3
    coeffs = rng.standard_normal((n, d))
    Q = rng.standard_normal((n, d, d))
    return make_cubic_problem(coeffs, Q, box(-np.ones(d), np.ones(d)), noise_g=NoiseSpec("gaussian", 0.2))


def hessian_unbiasedness(draws=10_000, seed=0):
    """Max z-score of the Monte Carlo mean of the Hessian correction per entry."""
    prob = cubic_instance()
    rng = substream(seed, 60)
    y_prev = prob.domain.random_point(rng)
    y_k = prob.domain.random_point(rng)
    target = prob.inner.exact(y_k)[1] - prob.inner.exact(y_prev)[1]
    samples = np.stack([hessian_correction(prob, y_prev, y_k, rng) for _ in range(draws)])
    mean = samples.mean(0)
    se = samples.std(0, ddof=1) / math.sqrt(draws)
    return float(np.max(np.abs(mean - target) / se))


def hessian_noise_instance():
    rng = substream(2024, 7)
    n, d = 2, 3
    M = rng.standard_normal((n, d, d))
    A = 0.5 * (M + M.transpose(0, 2, 1))
    b = rng.standard_normal((n, d))
    B = rng.standard_normal((n, d, d))
    return make_quadratic_problem(
        A, b, np.zeros(n), max_of_components(), l1_ball(d, 1.0),
        noise_g=NoiseSpec("gaussian", 0.1), hessian_noise=0.5, hessian_noise_direction=B,
    )


def average_smoothness_ratio(pairs=1000, draws=100, seed=0):
    """Largest measured ``E||J~(x) - J~(y)||^r / bound`` over random pairs (shared sample)."""
    prob = hessian_noise_instance()
    c = prob.inner.constants
    r = c.r
    coef = 2 ** (r - 1) * (c.sigma_H**r + c.L**r)
    rng = substream(seed, 70)
    worst = 0.0
    for i in range(pairs):
        x, y = prob.domain.random_point(rng), prob.domain.random_point(rng)
        acc = 0.0
        for j in range(draws):
            _, Jx = prob.inner.query(x, substream(seed, 71, i, j))
            _, Jy = prob.inner.query(y, substream(seed, 71, i, j))
            acc += np.linalg.norm(Jx - Jy) ** r
        worst = max(worst, (acc / draws) / (coef * np.linalg.norm(x - y) ** r))
    return worst


def criterion_storm_hessian(fast=False):
    z = hessian_unbiasedness(10_000)
    ratio = average_smoothness_ratio(1000, 20 if fast else 100)
    K = 1024 if fast else 4096
    seeds = _seeds(fast)
    storm = float(np.median(_min_gaps("storm", "storm_constant", K, seeds)))
    v1 = float(np.median(_min_gaps("variant1", "nonconvex_constant", K, seeds)))
    ok = z <= 3.0 and ratio <= 1.0 and storm <= v1
    return CriterionResult(
        6, "STORM / Hessian correction", ok,
        f"(a) max z-score {z:.2f} <= 3; (b) max LHS/RHS {ratio:.3f} <= 1; "
        f"(c) K={K} median min-gap STORM {storm:.4f} <= Variant I {v1:.4f}",
    )


def linear_gap_discrepancy(n_points=50, seed=0):
    rng = substream(seed, 80)
    n, d = 2, 4
    M = rng.standard_normal((n, d, d))
    prob = make_quadratic_problem(
        0.5 * (M + M.transpose(0, 2, 1)), rng.standard_normal((n, d)), rng.standard_normal(n),
        linear_first_component(), l1_ball(d, 1.5),
    )
    worst = 0.0
    for _ in range(n_points):
        y = prob.domain.random_point(rng)
        g = prob.inner.exact(y)[1][0]
        classical = float(g @ (y - domain_lmo(prob.domain, g)))
        worst = max(worst, abs(generalized_fw_gap(prob, y) - classical))
    return worst


def _short_task_runs():
    """A few short runs on every task so the gap floor is checked on all of them."""
    runs = [
        (task1_small(), SolverConfig("variant2", Schedule("nonconvex_constant"), K=64, seed=3)),
        (task2_default(), SolverConfig("variant2", Schedule("nonconvex_constant"), K=32, seed=3)),
        (task3_default(), SolverConfig("variant1", Schedule("nonconvex_constant"), K=16, seed=3, record_every=8)),
    ]
    for prob, cfg in runs:
        _log_gaps(run(prob, cfg))


def criterion_gap_curvature(fast=False):
    _short_task_runs()
    gap_ok = _GAP_LOG["min_raw"] >= GAP_FLOOR
    probes = []
    for prob in (task1_small(), task2_default(), task3_default()):
        est = curvature_probe(prob, 1000, rng=substream(0, 90))
        bound = theory_constants_from(prob).S_bound
        probes.append((prob.name, est, bound))
    probe_ok = all(est <= bound + 1e-8 for _, est, bound in probes)
    lin = linear_gap_discrepancy()
    ok = gap_ok and probe_ok and lin <= 1e-8
    pr = "; ".join(f"{name}: {est:.4g} <= {bound:.4g}" for name, est, bound in probes)
    return CriterionResult(
        7, "gap nonnegativity, curvature bound, linear-gap reduction", ok,
        f"min raw gap {_GAP_LOG['min_raw']:.2e} over {_GAP_LOG['steps']} steps in {_GAP_LOG['runs']} runs; "
        f"linear-gap discrepancy {lin:.1e}",
        pr,
    )


def criterion_baselines(fast=False):
    grid, seeds = _grid(fast), _seeds(fast)
    K = grid[-1]
    band = 0.15 if fast else 0.08
    v2 = float(np.median(_min_gaps("variant2", "nonconvex_constant", K, seeds)))
    cl = float(np.median(_min_gaps("clipped_scfw", "nonconvex_constant", K, seeds, TASK1_CLIP_C)))
    va = float(np.median(_min_gaps("vanilla_scfw", "nonconvex_constant", K, seeds)))
    fit = fit_rate([(k, float(np.mean(_min_gaps("vanilla_scfw", "nonconvex_constant", k, seeds)))) for k in grid])
    ok = v2 <= cl <= va and abs(fit.slope) <= band
    return CriterionResult(
        8, "baseline ordering", ok,
        f"K={K} medians: Variant II {v2:.4f} <= Clipped {cl:.4f} <= Vanilla {va:.4f}; "
        f"Vanilla slope {fit.slope:.3f} in [-{band}, {band}]",
    )


def auxiliary_inequalities(trials=10_000, seed=0):
    """Violation counts of the norm-power, subadditivity and weighted-Jensen inequalities."""
    rng = substream(seed, 100)
    viol = {}
    m = rng.integers(1, 8, trials)
    bad = 0
    for s in (1.5, 2.0):
        for t in range(trials):
            a = rng.standard_normal((m[t], 4)) * rng.exponential(1.0, (m[t], 1))
            lhs = np.linalg.norm(a.sum(0)) ** s
            rhs = m[t] ** (s - 1) * (np.linalg.norm(a, axis=1) ** s).sum()
            bad += lhs > rhs * (1 + 1e-12)
    viol["norm_power"] = int(bad)
    bad = 0
    for t in range(trials):
        a = rng.exponential(1.0, m[t])
        s = rng.uniform(1.0, 3.0)
        bad += a.sum() ** (1 / s) > (a ** (1 / s)).sum() * (1 + 1e-12)
    viol["subadditivity"] = int(bad)
    bad = 0
    for t in range(trials):
        w = rng.dirichlet(np.ones(m[t])) * rng.uniform(0, 1)
        a = rng.exponential(1.0, m[t])
        s = rng.uniform(1.0, 3.0)
        bad += (w @ a) ** s > (w @ a**s) * (1 + 1e-12)
    viol["weighted_jensen"] = int(bad)
    return viol


def vbe_zscore(trials=10_000, k=5, dim=3, seed=0):
    """z-score of ``E||sum X_i||^2 - sum E||X_i||^2`` for independent zero-mean terms."""
    rng = substream(seed, 101)
    scales = np.linspace(0.5, 2.0, k)[None, :, None]
    X = rng.laplace(0.0, 1.0, (trials, k, dim)) * scales
    diff = (np.linalg.norm(X.sum(1), axis=1) ** 2) - (np.linalg.norm(X, axis=2) ** 2).sum(1)
    return float(abs(diff.mean()) / (diff.std(ddof=1) / math.sqrt(trials)))


def criterion_auxiliary_inequalities(fast=False):
    viol = auxiliary_inequalities()
    z = vbe_zscore()
    ok = not any(viol.values()) and z <= 3.0
    meas = ", ".join(f"{k}: {v} violations" for k, v in viol.items())
    return CriterionResult(9, "auxiliary inequalities", ok, f"{meas}; von Bahr-Esseen z-score {z:.2f} <= 3")


DETERMINISM_CONFIG = """\
[experiment]
task = minimax_regression
output_dir = out
K_grid = 16, 32
seeds = 0, 1, 2

[task]
m = 3
d = 6
tau = 1.0
samples_per_group = 20
noise_family = gaussian
noise_scale = 0.5
data_seed = 5

[algorithm.variant2]
variant = variant2
schedule = nonconvex_constant

[algorithm.vanilla]
variant = vanilla_scfw
schedule = nonconvex_constant
"""


def _snapshot(directory):
    return {p.relative_to(directory).as_posix(): p.read_bytes() for p in sorted(Path(directory).rglob("*")) if p.is_file()}


def criterion_determinism(fast=False):
    from .cli import load_config, run_experiment

    with tempfile.TemporaryDirectory() as tmp:
        cfg_path = Path(tmp) / "exp.ini"
        cfg_path.write_text(DETERMINISM_CONFIG, encoding="utf-8")
        snaps = []
        for label, jobs in (("a", 1), ("b", 1), ("c", 4)):
            out = Path(tmp) / label
            run_experiment(load_config(cfg_path), output_dir=out, jobs=jobs)
            snaps.append(_snapshot(out))
    same = snaps[0] == snaps[1] == snaps[2]
    return CriterionResult(
        10, "end-to-end determinism", same and len(snaps[0]) > 0,
        f"{len(snaps[0])} files byte-identical across 2 runs with --jobs 1 and one with --jobs 4: {same}",
    )


CRITERIA = {
    1: criterion_nonconvex_rate,
    2: criterion_deterministic_convex,
    3: criterion_deterministic_nonconvex,
    4: criterion_glmo_equivalence,
    5: criterion_tracker_bounds,
    6: criterion_storm_hessian,
    7: criterion_gap_curvature,
    8: criterion_baselines,
    9: criterion_auxiliary_inequalities,
    10: criterion_determinism,
}
SUITES = {
    "unit": (4, 7, 9, 10),
    "lemmas": (2, 3, 5, 6),
    "rates": (1, 8),
    "all": tuple(range(1, 11)),
}


def run_suite(suite="all", fast=False, echo=print):
    """Run the criteria of ``suite`` and echo one line per criterion."""
    if suite not in SUITES:
        raise ValueError(f"unknown suite {suite!r}; choose from {sorted(SUITES)}")
    results = []
    for num in SUITES[suite]:
        res = CRITERIA[num](fast=fast)
        echo(res.line())
        results.append(res)
    return results
