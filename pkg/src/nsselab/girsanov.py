"""Change of measure from the linear to the nonlinear equation.

Normalizing the linear solution, ``X_t = φ_t / ||φ_t||``, and weighting each
path by its terminal squared norm ``||φ_T||²`` reproduces the law of the
nonlinear equation driven by the shifted noises

    dB^k = dW^k - 2 Re<X_t, L_k X_t> dt.

Expectations under the reweighted measure are computed with self-normalized
importance sampling (dividing by the sum of weights), which cancels the
O(dt) bias of the discretized martingale ``E||φ_T||²``.
"""

from dataclasses import dataclass, replace

import numpy as np

from .errors import DegenerateStateError, GridMismatchError
from .trajectory import Trajectory, as_ensemble

__all__ = [
    "normalize_and_weight",
    "shifted_noise",
    "weighted_expectation",
    "observable",
    "compare_estimators",
    "EstimatorComparison",
    "weight_report",
    "TINY_NORM",
]

TINY_NORM = 1e-300


def normalize_and_weight(traj):
    """Normalize a linear run and attach the terminal weight ``||φ_T||²``.

    Accepts a :class:`Trajectory` or an :class:`Ensemble` and returns the
    same type.  ``sq_norm`` keeps the original squared norms.
    """
    single = isinstance(traj, Trajectory)
    ens = as_ensemble(traj)
    sq = ens.sq_norm
    if np.any(sq < TINY_NORM):
        bad = np.flatnonzero(np.any(sq < TINY_NORM, axis=1))
        raise DegenerateStateError(
            f"{bad.size} trajectories reach zero norm (first: {int(bad[0])})"
        )
    states = ens.states / np.sqrt(sq)[:, :, None]
    out = replace(ens, states=states, weight=sq[:, -1].copy(), kind="weighted")
    return out[0] if single else out


def shifted_noise(traj, m):
    """Increments ``dB = dW - dt * 2 Re<X_s, L_k X_s>`` of a full-resolution run.

    Returns an array of shape ``(n_steps, K)`` for a trajectory or
    ``(n_traj, n_steps, K)`` for an ensemble.
    """
    single = isinstance(traj, Trajectory)
    ens = as_ensemble(traj)
    if ens.stride != 1:
        raise GridMismatchError("shifted noise needs record_stride = 1")
    if ens.noise is None:
        raise GridMismatchError("trajectory was run without stored noise")
    sq = ens.sq_norm[:, :-1]
    if np.any(sq < TINY_NORM):
        raise DegenerateStateError("zero norm along the trajectory")
    X = ens.states[:, :-1, :]
    dB = ens.noise.copy()
    for k, L in enumerate(m.channels):
        LX = np.einsum("ij,nsj->nsi", L.toarray(), X)
        r = np.real(np.sum(X.conj() * LX, axis=2)) / sq
        dB[:, :, k] -= ens.dt * 2.0 * r
    return dB[0] if single else dB


def observable(op):
    """Expectation ``<x, A x>`` as a function of a stack of states ``(..., dim)``.

    Assumes normalized rows.  The real part is returned.
    """
    dense = op.toarray() if hasattr(op, "toarray") else np.asarray(op)

    def f(states):
        return np.real(np.einsum("...i,ij,...j->...", states.conj(), dense, states))

    return f


def _as_function(f):
    return f if callable(f) else observable(f)


def weighted_expectation(ensemble, f, t):
    """Self-normalized weighted estimate of ``E f(X_t)`` and its standard error.

    ``f`` maps an array of states of shape ``(n_traj, dim)`` to values of
    shape ``(n_traj,)``; an operator is accepted and turned into its
    expectation.  Unit weights give the plain ensemble mean.
    """
    ens = as_ensemble(ensemble)
    f = _as_function(f)
    w = np.asarray(ens.weight, dtype=float)
    total = w.sum()
    if not total > 0:
        raise ValueError("all weights are zero")
    vals = np.asarray(f(ens.states[:, ens.time_index(t), :]), dtype=float)
    wn = w / total
    est = float(np.sum(w * vals) / total)
    if len(ens) < 2:
        return est, float("nan")
    se = float(np.sqrt(np.sum(wn**2 * (vals - est) ** 2)))
    return est, se


@dataclass(frozen=True)
class EstimatorComparison:
    """Agreement table between two ensembles on a set of observables.

    ``rows`` are ``(name, t, a, se_a, b, se_b, diff, tol, ok)`` with
    ``tol = 3 * sqrt(se_a² + se_b²) + slack``.
    """

    rows: list

    @property
    def passed(self):
        return all(r[-1] for r in self.rows)


def compare_estimators(a, b, observables, times, slack=0.0):
    """Compare ``E f(X_t)`` under two ensembles (e.g. direct vs reweighted)."""
    rows = []
    for name, f in observables.items():
        for t in times:
            ea, sa = weighted_expectation(a, f, t)
            eb, sb = weighted_expectation(b, f, t)
            diff = abs(ea - eb)
            tol = 3.0 * float(np.hypot(np.nan_to_num(sa), np.nan_to_num(sb))) + slack
            rows.append((name, float(t), ea, sa, eb, sb, diff, tol, bool(diff <= tol)))
    return EstimatorComparison(rows)


def weight_report(ensemble):
    """Mean weight with its standard error (should equal ``||ξ||²``)."""
    ens = as_ensemble(ensemble)
    w = np.asarray(ens.weight, dtype=float)
    se = w.std(ddof=1) / np.sqrt(w.size) if w.size > 1 else float("nan")
    return float(w.mean()), float(se)

