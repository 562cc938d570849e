"""Nonlinear, norm-preserving stochastic Schrödinger equation.

The state obeys ``dX = G(X) dt + Σ_k L_k(X) dW^k`` with

    G(y)   = G y + Σ_k ( r_k L_k y - r_k²/2 · y )
    L_k(y) = L_k y - r_k y,          r_k = Re<y, L_k y>.

On the truncated space every state lies in the domain of the reference
operator, so the domain cut-off of the infinite-dimensional fields is the
identity here.
"""

from dataclasses import dataclass, replace

import numpy as np

from . import hilbert
from .errors import DegenerateStateError, DimensionMismatchError
from .trajectory import SolverConfig, as_ensemble, run

__all__ = [
    "drift_nonlinear",
    "diffusion_nonlinear",
    "simulate_nsse",
    "moment_bound_check",
    "MomentBoundReport",
]


def _rates(Y, m):
    """``r_k`` and ``L_k Y`` for a block of column states."""
    LY = [np.asarray(L @ Y) for L in m.channels]
    r = [np.real(np.sum(Y.conj() * v, axis=0)) for v in LY]
    return r, LY


def _fields(Y, m):
    r, LY = _rates(Y, m)
    drift = np.asarray(m.G @ Y)
    diffusion = []
    for rk, v in zip(r, LY):
        drift = drift + rk * v - 0.5 * rk**2 * Y
        diffusion.append(v - rk * Y)
    return drift, diffusion


def drift_nonlinear(y, m):
    y = hilbert.as_state(y, m.dim)
    drift, _ = _fields(y[:, None], m)
    return drift[:, 0]


def diffusion_nonlinear(y, m, k):
    """Diffusion field of channel ``k`` (0-based index into ``m.channels``)."""
    y = hilbert.as_state(y, m.dim)
    if not 0 <= k < m.K:
        raise IndexError(f"channel index {k} outside 0..{m.K - 1}")
    v = np.asarray(m.channels[k] @ y)
    return v - np.real(np.vdot(y, v)) * y


def simulate_nsse(m, x0, cfg=None, noise=None):
    """Euler-Maruyama integration of the nonlinear equation.

    With ``cfg.renormalize`` (the default) the state is divided by its norm
    after every step, so the recorded norms are 1 to rounding.  Turning it
    off exposes the norm drift of the bare discretization.

    ``compensator`` accumulates the conditional mean increment of the
    squared norm produced by each raw Euler step (before renormalization).
    Its ensemble mean is a low-variance estimate of the weak norm drift.
    """
    cfg = cfg or SolverConfig()
    x0 = hilbert.as_state(x0, m.dim)
    if abs(np.vdot(x0, x0).real - 1.0) > 1e-12:
        raise ValueError("initial state must be normalized")
    dt = cfg.dt

    cache = {}

    def fields(Y):
        if cache.get("Y") is not Y:
            cache["Y"] = Y
            cache["f"] = _fields(Y, m)
        return cache["f"]

    def step(Y, dW):
        drift, diffusion = fields(Y)
        out = Y + dt * drift
        for k, g in enumerate(diffusion):
            out += dW[k] * g
        return out

    def compensate(Y):
        drift, diffusion = fields(Y)
        c = np.sum(np.abs(Y + dt * drift) ** 2, axis=0) - np.sum(np.abs(Y) ** 2, axis=0)
        for g in diffusion:
            c += dt * np.sum(np.abs(g) ** 2, axis=0)
        return c

    post = None
    if cfg.renormalize:

        def post(Y, s):
            nrm = np.sqrt(np.sum(np.abs(Y) ** 2, axis=0))
            if np.any(nrm == 0.0):
                raise DegenerateStateError(f"zero state at step {s}")
            return Y / nrm

    ens = run(m, x0, cfg, step, noise=noise, kind="nsse", post=post, compensate=compensate)
    return replace(ens, weight=np.ones(len(ens)))


@dataclass(frozen=True)
class MomentBoundReport:
    """Both sides of ``E||CX_t||² <= exp(αt)(E||CX_0||² + tα(E||X_0||² + β))``."""

    times: np.ndarray
    lhs: np.ndarray
    stderr: np.ndarray
    rhs: np.ndarray
    flags: np.ndarray
    alpha: float
    beta: float

    @property
    def n_flags(self):
        return int(np.count_nonzero(self.flags))


def _weighted_mean_se(values, w):
    """Self-normalized weighted mean and its standard error along axis 0."""
    wn = w / w.sum()
    mean = np.tensordot(wn, values, axes=(0, 0))
    if values.shape[0] < 2:
        return mean, np.full_like(mean, np.nan)
    resid = values - mean
    se = np.sqrt(np.tensordot(wn**2, resid**2, axes=(0, 0)))
    return mean, se


def moment_bound_check(ensemble, C, alpha, beta):
    """Compare ``E||CX_t||²`` with its exponential moment bound on the grid.

    A time is flagged when the estimate exceeds the bound by more than three
    standard errors.
    """
    if alpha < 0 or beta < 0:
        raise ValueError("alpha and beta must be non-negative")
    ens = as_ensemble(ensemble)
    if C.shape != (ens.dim, ens.dim):
        raise DimensionMismatchError("reference operator does not match the state dimension")
    S = ens.states
    CS = np.einsum("ij,nsj->nsi", C.toarray(), S)
    c2 = np.sum(np.abs(CS) ** 2, axis=2)
    x2 = np.sum(np.abs(S[:, 0, :]) ** 2, axis=1)
    w = np.asarray(ens.weight, dtype=float)
    lhs, se = _weighted_mean_se(c2, w)
    c0 = lhs[0]
    e0 = float(np.dot(w / w.sum(), x2))
    t = ens.times
    rhs = np.exp(alpha * t) * (c0 + t * alpha * (e0 + beta))
    se_eff = np.nan_to_num(se, nan=0.0)
    flags = lhs - 3.0 * se_eff > rhs * (1 + 1e-12) + 1e-12
    return MomentBoundReport(t, lhs, se, rhs, flags, float(alpha), float(beta))
