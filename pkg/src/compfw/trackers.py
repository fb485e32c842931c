"""Momentum trackers for the inner value ``f(y_k)`` and Jacobian ``J(y_k)``.

Every update is a pure function returning a fresh ``TrackerState``. The
Jacobian updates advance ``step_index``; the function updates refresh
``prev_y`` (the Taylor, STORM and Hessian updates all read it first).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable

import numpy as np

from .numerics import ConfigurationError

JAC_KINDS = ("polyak", "storm", "hessian_corrected")
FN_KINDS = ("polyak", "taylor")
SCHEDULE_KINDS = (
    "nonconvex_constant",
    "convex_decreasing",
    "deterministic_nonconvex",
    "deterministic_convex",
    "storm_constant",
    "custom",
)


@dataclass(frozen=True)
class TrackerState:
    V: np.ndarray
    z: np.ndarray
    prev_y: np.ndarray | None
    jac_kind: str = "polyak"
    fn_kind: str = "polyak"
    step_index: int = 0

    def __post_init__(self):
        if self.jac_kind not in JAC_KINDS or self.fn_kind not in FN_KINDS:
            raise ConfigurationError(f"unknown tracker kinds {self.jac_kind!r}/{self.fn_kind!r}")
        if self.V.shape[0] != self.z.size:
            raise ConfigurationError("tracker V and z disagree on the inner dimension")


# --------------------------------------------------------------------------
# schedules
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Schedule:
    """Step size ``gamma_k`` and momentum weights ``beta_k``, ``rho_k``.

    ``K`` (horizon) and ``r`` (noise moment order) parametrize the constant
    schedules; ``c0``/``k0`` the decreasing one (``k0`` derived from ``r``
    when omitted). ``custom`` takes callables or constants for the three
    sequences.
    """

    kind: str = "nonconvex_constant"
    K: int | None = None
    r: float = 2.0
    c0: float = 1.0
    k0: int | None = None
    gamma: Callable | float | None = None
    beta: Callable | float | None = None
    rho: Callable | float | None = None

    def __post_init__(self):
        if self.kind not in SCHEDULE_KINDS:
            raise ConfigurationError(f"unknown schedule kind {self.kind!r}")
        if not 1.0 < self.r <= 2.0:
            raise ConfigurationError(f"schedule r must lie in (1, 2], got {self.r}")
        if self.K is not None and self.K < 1:
            raise ConfigurationError("schedule horizon K must be >= 1")
        if self.kind == "convex_decreasing":
            if self.c0 <= 0:
                raise ConfigurationError("c0 must be positive")
            if self.k0 is None:
                object.__setattr__(self, "k0", convex_offset(self.r))
        if self.kind == "custom" and None in (self.gamma, self.beta, self.rho):
            raise ConfigurationError("custom schedule needs gamma, beta and rho")


def convex_offset(r):
    """Smallest admissible shift ``k0`` for the decreasing momentum weights."""
    y = r / (2 * r - 1)
    q = y * (r - 1)
    return math.ceil((4 * q) ** (1 / (1 - y))) + 2


def _eval(v, k):
    return float(v(k)) if callable(v) else float(v)


def schedule_values(s, k, K=None):
    """Return ``(gamma_k, beta_k, rho_k)`` for step ``0 <= k < K``."""
    K = s.K if K is None else K
    if K is None or not 0 <= k < K:
        raise ConfigurationError(f"step {k} outside the horizon K={K}")
    r = s.r
    if s.kind == "nonconvex_constant":
        gamma = K ** (-(2 * r - 1) / (3 * r - 2))
        beta = rho = K ** (-r / (3 * r - 2))
    elif s.kind == "convex_decreasing":
        gamma = 2.0 / (k + 2)
        beta = rho = min(1.0, s.c0 / (k + s.k0) ** (r / (2 * r - 1)))
    elif s.kind == "deterministic_nonconvex":
        gamma, beta, rho = 1.0 / math.sqrt(k + 1), 1.0, 1.0
    elif s.kind == "deterministic_convex":
        gamma, beta, rho = 2.0 / (k + 2), 1.0, 1.0
    elif s.kind == "storm_constant":
        gamma = beta = rho = K ** (-r / (2 * r - 1))
    else:
        gamma, beta, rho = _eval(s.gamma, k), _eval(s.beta, k), _eval(s.rho, k)
    for name, v in (("gamma", gamma), ("beta", beta), ("rho", rho)):
        if not 0.0 < v <= 1.0:
            raise ConfigurationError(f"{name}_{k} = {v} is outside (0, 1]")
    return gamma, beta, rho


# --------------------------------------------------------------------------
# tracker updates
# --------------------------------------------------------------------------


def init_trackers(problem, y0, rng, jac_kind="polyak", fn_kind="polyak"):
    """Initialize ``V_0`` and ``z_0`` from one shared oracle draw at ``y0``."""
    y0 = np.asarray(y0, dtype=float)
    f, J = problem.inner.query(y0, rng)
    return TrackerState(
        V=np.array(J, dtype=float),
        z=np.array(f, dtype=float),
        prev_y=y0.copy(),
        jac_kind=jac_kind,
        fn_kind=fn_kind,
    )


def _check_weight(w, name):
    if not 0.0 < w <= 1.0:
        raise ConfigurationError(f"{name} must lie in (0, 1], got {w}")


def _need_prev(state):
    if state.prev_y is None:
        raise ConfigurationError("this update needs the previous iterate")


def update_jacobian_polyak(state, y_k, sample_jac, beta):
    _check_weight(beta, "beta")
    V = (1.0 - beta) * state.V + beta * np.asarray(sample_jac, dtype=float)
    return replace(state, V=V, step_index=state.step_index + 1)


def update_function_polyak(state, sample_f, rho, y_k=None):
    _check_weight(rho, "rho")
    z = (1.0 - rho) * state.z + rho * np.asarray(sample_f, dtype=float)
    prev = state.prev_y if y_k is None else np.array(y_k, dtype=float)
    return replace(state, z=z, prev_y=prev)


def update_function_taylor(state, y_k, V_k, sample_f, rho):
    """Polyak average of the first-order extrapolation of ``z`` to ``y_k``."""
    _check_weight(rho, "rho")
    _need_prev(state)
    y_k = np.asarray(y_k, dtype=float)
    pred = state.z + np.asarray(V_k) @ (y_k - state.prev_y)
    z = (1.0 - rho) * pred + rho * np.asarray(sample_f, dtype=float)
    return replace(state, z=z, prev_y=y_k.copy())


def update_jacobian_storm(state, y_k, problem, rng, beta, sample_jac=None):
    """STORM step; one sample is evaluated at both ``y_k`` and ``prev_y``.

    ``rng`` must be positioned at the start of this step's sample. Without
    ``sample_jac`` the query at ``y_k`` consumes ``rng`` and the query at
    ``prev_y`` replays a copy of it. With ``sample_jac`` (already drawn from
    an identical stream) ``rng`` only serves the query at ``prev_y``.
    """
    _check_weight(beta, "beta")
    _need_prev(state)
    if sample_jac is None:
        replay = np.random.Generator(type(rng.bit_generator)())
        replay.bit_generator.state = rng.bit_generator.state
        _, sample_jac = problem.inner.query(np.asarray(y_k, dtype=float), rng)
    else:
        replay = rng
    _, J_old = problem.inner.query(state.prev_y, replay)
    V = np.asarray(sample_jac) + (1.0 - beta) * (state.V - J_old)
    return replace(state, V=V, step_index=state.step_index + 1)


def hessian_correction(problem, y_prev, y_k, rng):
    """Stochastic ``H(y_alpha) (y_k - y_prev)`` at a uniform point of the segment.

    Draws ``alpha ~ U(0, 1)`` then the Hessian sample, both from ``rng``.
    """
    if problem.inner.hessian_query is None:
        raise ConfigurationError(f"{problem.name} has no Hessian oracle")
    step = np.asarray(y_k, dtype=float) - y_prev
    alpha = rng.random()
    H = problem.inner.hessian_query(y_prev + alpha * step, rng)
    return H @ step


def update_jacobian_hessian(state, y_k, problem, rng, beta, sample_jac=None):
    """Polyak step plus a Hessian-vector drift correction.

    ``sample_jac`` is the step's Jacobian sample; when omitted it is drawn
    from ``rng`` first. The correction always uses fresh draws from ``rng``.
    """
    _check_weight(beta, "beta")
    _need_prev(state)
    if problem.inner.hessian_query is None:
        raise ConfigurationError(f"{problem.name} has no Hessian oracle")
    y_k = np.asarray(y_k, dtype=float)
    if sample_jac is None:
        _, sample_jac = problem.inner.query(y_k, rng)
    corr = hessian_correction(problem, state.prev_y, y_k, rng)
    V = (1.0 - beta) * state.V + beta * np.asarray(sample_jac) + (1.0 - beta) * corr
    return replace(state, V=V, step_index=state.step_index + 1)


def tracking_errors(state, f_true, J_true):
    """Frobenius/Euclidean norms of ``V - J(y)`` and ``z - f(y)``."""
    return float(np.linalg.norm(state.V - J_true)), float(np.linalg.norm(state.z - f_true))
