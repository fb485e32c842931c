"""Random streams, noise samplers and small dense linear-algebra helpers."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

NOISE_FAMILIES = ("gaussian", "symmetric_pareto", "laplace", "none")


class ConfigurationError(ValueError):
    """Raised when a problem, schedule or solver is configured inconsistently."""


class OracleError(RuntimeError):
    """Raised when an inner oracle (power iteration, LP, GLMO) fails."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


def substream(seed, *key):
    """Return an independent generator identified by ``(seed, *key)``.

    Identical arguments always give bit-identical streams, which is what lets
    STORM replay the same sample at two consecutive iterates.
    """
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.PCG64(ss))


@dataclass(frozen=True)
class NoiseSpec:
    """Additive noise model for a stochastic oracle.

    ``moment_order_r`` is the largest moment order the analysis relies on;
    for the symmetrized Pareto family the tail index must exceed it so the
    r-th moment is finite.
    """

    family: str = "none"
    scale: float = 0.0
    tail_index: float | None = None
    moment_order_r: float = 2.0

    def __post_init__(self):
        if self.family not in NOISE_FAMILIES:
            raise ConfigurationError(f"unknown noise family {self.family!r}")
        if self.scale < 0 or not np.isfinite(self.scale):
            raise ConfigurationError(f"noise scale must be finite and >= 0, got {self.scale}")
        if not 1.0 < self.moment_order_r <= 2.0:
            raise ConfigurationError(f"moment order r must lie in (1, 2], got {self.moment_order_r}")
        if self.family == "symmetric_pareto":
            if self.tail_index is None:
                object.__setattr__(self, "tail_index", self.moment_order_r + 0.5)
            if self.tail_index <= self.moment_order_r:
                raise ConfigurationError(
                    f"tail_index={self.tail_index} must exceed r={self.moment_order_r} "
                    "for a finite r-th moment"
                )

    @property
    def is_zero(self):
        return self.family == "none" or self.scale == 0.0

    def entry_moment(self, r=None):
        """E|e|^r of a single noise entry (closed form)."""
        r = self.moment_order_r if r is None else r
        if self.is_zero:
            return 0.0
        if self.family == "gaussian":
            return self.scale**r * 2 ** (r / 2) * math.gamma((r + 1) / 2) / np.sqrt(np.pi)
        if self.family == "laplace":
            return self.scale**r * math.gamma(r + 1)
        # symmetric Pareto: no convenient closed form for the centred moment
        raise NotImplementedError("closed-form moment only for gaussian/laplace")


def sample_noise(noise, shape, rng):
    """Draw a mean-zero noise array of the given shape."""
    if noise.is_zero:
        return np.zeros(shape)
    if noise.family == "gaussian":
        return noise.scale * rng.standard_normal(shape)
    if noise.family == "laplace":
        return rng.laplace(0.0, noise.scale, shape)
    a = noise.tail_index
    # numpy's pareto is Lomax; 1 + Lomax is classical Pareto(a) with x_m = 1
    p = 1.0 + rng.pareto(a, shape)
    signs = rng.choice(np.array([-1.0, 1.0]), size=shape)
    return signs * noise.scale * (p - a / (a - 1.0))


def sample_noise_vector(noise, dim, rng):
    if dim < 1:
        raise ConfigurationError("dim must be >= 1")
    return sample_noise(noise, (dim,), rng)


def vbe_constant(r):
    """Constant of the von Bahr-Esseen martingale inequality.

    Exactly 1 at r = 2; the classical valid constant 2 for 1 < r < 2.
    """
    if not 1.0 < r <= 2.0:
        raise ConfigurationError(f"r must lie in (1, 2], got {r}")
    return 1.0 if r == 2.0 else 2.0


def top_singular_pair(M, tol=1e-10, max_iter=10_000, seed=0, block=4):
    """Leading singular triple of ``M`` by block power iteration on ``M^T M``.

    A block of ``block`` vectors with a Rayleigh-Ritz step keeps the rate
    governed by the first singular value outside the block, so clustered
    leading singular values do not stall convergence.

    Parameters
    ----------
    M : (m, n) array
    tol : float
        Relative residual target, ``||M^T u - s v|| <= tol * s`` with ``u = M v / s``.
    max_iter : int
    seed : int
        Seed of the deterministic start block.
    block : int
        Subspace size (capped at ``min(m, n)``).

    Returns
    -------
    u : (m,) array
    s : float
    v : (n,) array

    Raises
    ------
    OracleError
        If the residual target is not met within ``max_iter`` iterations.
    """
    M = np.asarray(M, dtype=float)
    if tol <= 0:
        raise ConfigurationError("tol must be positive")
    if not np.any(M):
        raise ConfigurationError("top_singular_pair needs a nonzero matrix")
    p = max(1, min(block, *M.shape))
    rng = substream(seed, 0x5EED)
    Q, _ = np.linalg.qr(rng.standard_normal((M.shape[1], p)))
    res, best, stalled = np.inf, np.inf, 0
    for _ in range(max_iter):
        W = M @ Q
        # Rayleigh-Ritz on the block: small dense SVD of the m x p image
        Uw, S, Yt = np.linalg.svd(W, full_matrices=False)
        s = float(S[0])
        if s == 0.0:
            Q, _ = np.linalg.qr(rng.standard_normal((M.shape[1], p)))
            continue
        v = Q @ Yt[0]
        u = M @ v
        s = float(np.linalg.norm(u))
        u /= s
        g = M.T @ u
        # u is defined from M v, so the informative residual is the transposed one
        res = float(np.linalg.norm(g - s * v))
        if res <= tol * s:
            return u, s, v
        if res < best * (1 - 1e-12):
            best, stalled = res, 0
        else:
            stalled += 1
        Z = M.T @ W
        if stalled >= 10:
            # no progress over 10 iterations: re-randomize the block slightly
            Z = Z + 1e-3 * np.linalg.norm(Z) * rng.standard_normal(Z.shape)
            best, stalled = np.inf, 0
        Q, _ = np.linalg.qr(Z)
    raise OracleError(
        f"power iteration did not reach tol={tol} in {max_iter} iterations", residual=res
    )


def norm_op(M):
    """Spectral norm via power iteration (loose tolerance, for constants only)."""
    M = np.asarray(M, dtype=float)
    if not np.any(M):
        return 0.0
    return top_singular_pair(M, tol=1e-9, max_iter=50_000)[1]
