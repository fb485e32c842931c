"""Momentum Frank-Wolfe loop for ``min F(f(x), x)`` and its baselines.

Step ``k`` (``0 <= k < K``) draws its sample from ``substream(seed, k, 0)``;
the Hessian correction uses ``substream(seed, k, 1)``. Step 0 is the
initialization draw, steps ``k >= 1`` update the trackers with the schedule
values at ``k``, and every step ends with ``y_{k+1} = (1 - g_k) y_k + g_k x_{k+1}``.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field, replace

import numpy as np

from .glmo import AffineSurrogate, GlmoParams, solve_glmo
from .metrics import generalized_fw_gap
from .numerics import ConfigurationError, OracleError, substream
from .trackers import (
    Schedule,
    TrackerState,
    init_trackers,
    schedule_values,
    tracking_errors,
    update_function_polyak,
    update_function_taylor,
    update_jacobian_hessian,
    update_jacobian_polyak,
    update_jacobian_storm,
)

VARIANTS = (
    "variant1",
    "variant2",
    "storm",
    "hessian",
    "vanilla_scfw",
    "clipped_scfw",
    "deterministic_basic",
)
# (Jacobian tracker, function tracker) per momentum variant
_TRACKERS = {
    "variant1": ("polyak", "polyak"),
    "variant2": ("polyak", "taylor"),
    "storm": ("storm", "taylor"),
    "hessian": ("hessian_corrected", "taylor"),
}
TRACE_COLUMNS = (
    "k",
    "objective",
    "gap",
    "gap_running_min",
    "delta_g_norm",
    "delta_f_norm",
    "glmo_inner_iters",
    "elapsed_ns",
)
GAP_TOL = 1e-8


@dataclass(frozen=True)
class SolverConfig:
    """One solver run.

    ``record_every`` defaults to ``max(1, K // 512)``. ``elapsed_ns`` is
    only measured with ``timing=True``; otherwise it is written as 0 so that
    traces are reproducible byte for byte.
    """

    variant: str = "variant2"
    schedule: Schedule = field(default_factory=Schedule)
    K: int = 1000
    seed: int = 0
    glmo_params: GlmoParams = field(default_factory=GlmoParams)
    record_every: int | None = None
    clip_C: float | None = None
    record_gap: bool = True
    timing: bool = False

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ConfigurationError(f"unknown variant {self.variant!r}")
        if self.K < 0:
            raise ConfigurationError("K must be >= 0")
        if self.variant == "clipped_scfw" and not (self.clip_C is not None and self.clip_C > 0):
            raise ConfigurationError("clipped_scfw needs clip_C > 0")
        if self.record_every is None:
            object.__setattr__(self, "record_every", max(1, self.K // 512))
        if self.record_every < 1:
            raise ConfigurationError("record_every must be >= 1")


@dataclass
class RunRecord:
    """Per-step trace plus a summary.

    ``rows`` hold one dict per recorded step with the keys of
    ``TRACE_COLUMNS``; ``gap`` is the raw value and ``gap_running_min`` the
    running minimum of the gaps clamped at 0.
    """

    rows: list = field(default_factory=list)
    summary: dict = field(default_factory=dict)
    final_y: np.ndarray | None = None

    def column(self, name):
        return np.array([row[name] for row in self.rows], dtype=float)


def clip_jacobian(J, clip_C):
    """Rescale ``J`` to Frobenius norm at most ``clip_C``."""
    nrm = float(np.linalg.norm(J))
    if nrm <= clip_C:
        return J
    return J * (clip_C / nrm)


class _Recorder:
    def __init__(self, problem, config):
        self.problem = problem
        self.config = config
        self.rows = []
        self.gap_on = config.record_gap and problem.has_exact
        self.best = np.inf
        self.argmin = None
        self.t0 = time.perf_counter_ns()

    def record(self, k, y, state, inner_iters):
        p = self.problem
        if p.has_exact:
            f, J = p.inner.exact(y)
            objective = p.objective(y)
            if state is not None:
                dg, df = tracking_errors(state, f, J)
            else:
                dg = df = np.nan
        else:
            objective = dg = df = np.nan
        gap = np.nan
        if self.gap_on:
            gap = generalized_fw_gap(p, y, self.config.glmo_params)
            shown = max(gap, 0.0)
            if shown < self.best:
                self.best, self.argmin = shown, k
        elapsed = time.perf_counter_ns() - self.t0 if self.config.timing else 0
        self.rows.append(
            dict(
                k=k,
                objective=objective,
                gap=gap,
                gap_running_min=self.best if self.gap_on else np.nan,
                delta_g_norm=dg,
                delta_f_norm=df,
                glmo_inner_iters=inner_iters,
                elapsed_ns=elapsed,
            )
        )

    def summary(self, oracle_calls):
        return dict(
            min_gap=self.best if self.gap_on else np.nan,
            argmin_k=self.argmin if self.gap_on else None,
            total_oracle_calls=oracle_calls,
            gap_recorded=self.gap_on,
            final_objective=self.rows[-1]["objective"] if self.rows else np.nan,
        )


def run(problem, config, y0=None):
    """Run ``config.K`` iterations from ``y0`` (domain default when omitted)."""
    dom = problem.domain
    y = dom.default_point() if y0 is None else np.array(y0, dtype=float)
    if not dom.contains(y, 1e-8):
        raise ConfigurationError(f"initial point is infeasible (violation {dom.violation(y):.3g})")
    K, seed, variant = config.K, config.seed, config.variant
    rec = _Recorder(problem, config)
    if K == 0:
        # summary only, from the initial point
        rec.record(0, y, None, 0)
        summary = rec.summary(0)
        return RunRecord([], summary, y)

    momentum = variant in _TRACKERS
    jac_kind, fn_kind = _TRACKERS.get(variant, ("polyak", "polyak"))
    if variant == "hessian" and problem.inner.hessian_query is None:
        raise ConfigurationError(f"{problem.name} has no Hessian oracle; cannot run the hessian variant")
    if variant == "deterministic_basic" and not problem.has_exact:
        raise ConfigurationError("deterministic_basic needs an exact oracle")

    def sample(y, k):
        if variant == "deterministic_basic":
            return problem.inner.exact(y)
        f, J = problem.inner.query(y, substream(seed, k, 0))
        if variant == "clipped_scfw":
            J = clip_jacobian(J, config.clip_C)
        return f, J

    calls = 0
    state = None
    inner_iters = 0
    for k in range(K):
        gamma, beta, rho = schedule_values(config.schedule, k, K)
        f, J = sample(y, k)
        calls += variant != "deterministic_basic"
        if k == 0 or not momentum:
            state = TrackerState(np.array(J, dtype=float), np.array(f, dtype=float), y.copy(), jac_kind, fn_kind, k)
        else:
            if jac_kind == "polyak":
                state = update_jacobian_polyak(state, y, J, beta)
            elif jac_kind == "storm":
                state = update_jacobian_storm(state, y, problem, substream(seed, k, 0), beta, sample_jac=J)
                calls += 1
            else:
                state = update_jacobian_hessian(state, y, problem, substream(seed, k, 1), beta, sample_jac=J)
                calls += 1
            if fn_kind == "taylor":
                state = update_function_taylor(state, y, state.V, f, rho)
            else:
                state = update_function_polyak(state, f, rho, y_k=y)
        if k % config.record_every == 0:
            rec.record(k, y, state, inner_iters)
        try:
            res = solve_glmo(problem.outer, dom, AffineSurrogate(state.z, state.V, y), config.glmo_params)
        except OracleError as err:
            raise OracleError(f"GLMO failed at step {k}: {err}", residual=err.residual) from err
        inner_iters = res.inner_iterations
        y = (1.0 - gamma) * y + gamma * res.x_star
    rec.record(K, y, None, inner_iters)
    return RunRecord(rec.rows, rec.summary(calls), y)


def run_vanilla_scfw(problem, config, y0=None):
    """Single-sample surrogate at every step (no momentum)."""
    if config.variant != "vanilla_scfw":
        config = _with_variant(config, "vanilla_scfw")
    return run(problem, config, y0)


def run_clipped_scfw(problem, config, y0=None):
    """Vanilla SCFW with the sampled Jacobian clipped to Frobenius norm ``clip_C``."""
    if config.variant != "clipped_scfw":
        config = _with_variant(config, "clipped_scfw")
    return run(problem, config, y0)


def _with_variant(config, variant):
    return replace(config, variant=variant)


def init_state(problem, y0, seed, variant="variant2"):
    """Tracker state after the step-0 draw of a run with ``seed``."""
    jac_kind, fn_kind = _TRACKERS.get(variant, ("polyak", "polyak"))
    return init_trackers(problem, y0, substream(seed, 0, 0), jac_kind, fn_kind)
