"""Linear stochastic Schrödinger equation ``dφ = Gφ dt + Σ_k L_k φ dW^k``.

Integrated on the truncated space (the Galerkin system), either with the
explicit Euler-Maruyama step or a drift-implicit variant that treats ``G``
implicitly and the noise explicitly.
"""

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import hilbert
from .errors import DegenerateStateError, DimensionMismatchError, StepFailureError
from .trajectory import SCHEMES, SolverConfig, as_ensemble, run

__all__ = ["step_linear", "simulate_linear", "second_moment_report", "MomentReport"]


def _implicit_factor(m, dt):
    A = sp.identity(m.dim, dtype=complex, format="csc") - dt * sp.csc_matrix(m.G)
    try:
        lu = spla.splu(A)
    except RuntimeError as exc:
        raise StepFailureError(f"I - dt*G is singular for dt={dt}: {exc}") from None
    return lu


def step_linear(x, dW, dt, m, scheme="euler_maruyama"):
    """One step of the linear SSE for a single state.

    Euler-Maruyama returns ``x + dt*G x + Σ_k dW_k L_k x``; the
    semi-implicit scheme solves ``(I - dt*G) y = x + Σ_k dW_k L_k x``.
    """
    x = hilbert.as_state(x, m.dim)
    dW = np.atleast_1d(np.asarray(dW, dtype=float))
    if dW.shape != (m.K,):
        raise DimensionMismatchError(f"expected {m.K} increments, got {dW.shape[0]}")
    if scheme not in SCHEMES:
        raise ValueError(f"unknown scheme {scheme!r}")
    noise = np.zeros(m.dim, dtype=complex)
    for w, L in zip(dW, m.channels):
        noise += w * (L @ x)
    if scheme == "euler_maruyama":
        return x + dt * (m.G @ x) + noise
    y = _implicit_factor(m, dt).solve(x + noise)
    if not np.all(np.isfinite(y)):
        raise StepFailureError(f"semi-implicit solve produced non-finite values (dt={dt})")
    return y


def _block_stepper(m, cfg):
    G, Ls, dt = m.G, m.channels, cfg.dt

    if cfg.scheme == "euler_maruyama":

        def step(Y, dW):
            out = Y + dt * (G @ Y)
            for k, L in enumerate(Ls):
                out += dW[k] * (L @ Y)
            return out

        def compensate(Y):
            drift = Y + dt * (G @ Y)
            c = np.sum(np.abs(drift) ** 2, axis=0) - np.sum(np.abs(Y) ** 2, axis=0)
            for L in Ls:
                c += dt * np.sum(np.abs(L @ Y) ** 2, axis=0)
            return c

        return step, compensate

    lu = _implicit_factor(m, dt)

    def step(Y, dW):
        rhs = Y.copy()
        for k, L in enumerate(Ls):
            rhs += dW[k] * (L @ Y)
        return lu.solve(rhs)

    def compensate(Y):
        c = np.sum(np.abs(lu.solve(Y)) ** 2, axis=0) - np.sum(np.abs(Y) ** 2, axis=0)
        for L in Ls:
            c += dt * np.sum(np.abs(lu.solve(np.asarray(L @ Y))) ** 2, axis=0)
        return c

    return step, compensate


def simulate_linear(m, xi, cfg=None, noise=None):
    """Integrate the linear SSE for ``cfg.n_traj`` trajectories from ``xi``.

    Parameters
    ----------
    m : ModelSpec
    xi : array_like
        Nonzero initial state (not necessarily normalized).
    cfg : SolverConfig, optional
    noise : ndarray, optional
        Explicit increments of shape ``(n_traj, n_steps, K)``; replaces the
        per-trajectory random streams (used for coupled dt refinements).

    Returns
    -------
    Ensemble
        ``weight`` holds the terminal squared norm of each trajectory.
    """
    cfg = cfg or SolverConfig()
    xi = hilbert.as_state(xi, m.dim)
    if hilbert.norm(xi) == 0.0:
        raise DegenerateStateError("initial state must be nonzero")
    step, compensate = _block_stepper(m, cfg)
    return run(m, xi, cfg, step, noise=noise, kind="linear", compensate=compensate)


@dataclass(frozen=True)
class MomentReport:
    """Ensemble statistics of ``||φ_t||²``.

    ``flags`` marks times where ``|mean - ||ξ||²| > 3*stderr + c*dt``.
    ``drift`` is the ensemble mean of the accumulated conditional mean
    increment of ``||φ||²``: zero for the exact equation, of order ``dt``
    for the discretized one, and estimated with far less noise than the raw
    mean.  ``degenerate`` is set when fewer than two trajectories are given.
    """

    times: np.ndarray
    mean: np.ndarray
    stderr: np.ndarray
    initial: float
    flags: np.ndarray
    drift: np.ndarray
    c: float
    dt: float
    degenerate: bool

    @property
    def n_flags(self):
        return int(np.count_nonzero(self.flags))

    @property
    def drift_rate(self):
        """Least-squares slope of ``drift`` against time."""
        t = self.times
        return float(np.dot(t, self.drift) / np.dot(t, t)) if np.any(t) else 0.0


def second_moment_report(ensemble, c=5.0):
    ens = as_ensemble(ensemble)
    n = len(ens)
    sq = ens.sq_norm
    mean = sq.mean(axis=0)
    degenerate = n < 2
    if degenerate:
        stderr = np.full_like(mean, np.nan)
        flags = np.zeros(mean.shape, dtype=bool)
    else:
        stderr = sq.std(axis=0, ddof=1) / np.sqrt(n)
        flags = np.abs(mean - mean[0]) > 3.0 * stderr + c * ens.dt
    drift = ens.compensator.mean(axis=0) if ens.compensator is not None else np.zeros_like(mean)
    return MomentReport(
        times=ens.times,
        mean=mean,
        stderr=stderr,
        initial=float(mean[0]),
        flags=flags,
        drift=drift,
        c=c,
        dt=ens.dt,
        degenerate=degenerate,
    )
