"""Long-run averages and Lyapunov diagnostics for invariant measures.

An invariant measure of the nonlinear equation is only ever seen through
finitely many observables.  Time averages ``(1/(T-b)) ∫_b^T f(X_s) ds`` along
trajectories estimate its integrals; batch means give error bars that
account for autocorrelation.
"""

from dataclasses import dataclass

import numpy as np

from .errors import GridMismatchError
from .girsanov import observable
from .trajectory import as_ensemble

__all__ = [
    "TimeAverage",
    "time_average",
    "batch_means",
    "window_average",
    "windows_agree",
    "LyapunovReport",
    "lyapunov_diagnostic",
    "MeasureSummary",
    "empirical_measure_summary",
    "default_burn_in",
    "squared_norm_of",
]


def _values(ens, f):
    """``f`` evaluated on every recorded state, shape ``(n_traj, n_rec)``."""
    f = f if callable(f) else observable(f)
    S = ens.states
    return np.asarray(f(S.reshape(-1, S.shape[2])), dtype=float).reshape(S.shape[:2])


def squared_norm_of(op):
    """``x -> ||A x||²`` for a stack of states."""
    dense = op.toarray() if hasattr(op, "toarray") else np.asarray(op)

    def f(states):
        return np.sum(np.abs(states @ dense.T) ** 2, axis=-1)

    return f


def _trapz_mean(t, v):
    # Integrating the deviation from the first sample keeps constants exact.
    v0 = v[..., 0]
    if t.size < 2:
        return v0
    return v0 + np.trapezoid(v - v0[..., None], t, axis=-1) / (t[-1] - t[0])


def batch_means(t, v, n_batches=16):
    """Batch-means estimate over the last axis of ``v``.

    Leading axes of ``v`` index independent trajectories.  Batches are made
    as long as possible subject to at least ``n_batches`` in total: each
    trajectory is split into ``ceil(n_batches / n_traj)`` contiguous blocks,
    so an ensemble of ``n_batches`` or more trajectories uses one batch per
    trajectory.  Short batches underestimate the error of autocorrelated
    samples.  Returns ``(mean of batch means, standard error, batch means)``.
    """
    v = np.atleast_2d(v)
    v = v.reshape(-1, v.shape[-1])
    per = -(-n_batches // v.shape[0])
    if v.shape[-1] < 2 * per:
        raise ValueError(f"need at least {2 * per} samples per trajectory, got {v.shape[-1]}")
    edges = np.linspace(0, v.shape[-1] - 1, per + 1).round().astype(int)
    bm = np.stack([_trapz_mean(t[a:b + 1], v[:, a:b + 1]) for a, b in zip(edges[:-1], edges[1:])],
                  axis=1)
    flat = bm.ravel()
    return float(flat.mean()), float(flat.std(ddof=1) / np.sqrt(flat.size)), bm


@dataclass(frozen=True)
class TimeAverage:
    value: float
    stderr: float
    checkpoints: np.ndarray
    running: np.ndarray
    burn_in: float
    n_batches: int


def _window(ens, start, stop=None):
    t = ens.times
    stop = t[-1] if stop is None else stop
    tol = 1e-9 * max(1.0, abs(stop))
    mask = (t >= start - tol) & (t <= stop + tol)
    if np.count_nonzero(mask) < 2:
        raise GridMismatchError(f"window [{start}, {stop}] holds fewer than two samples")
    return mask


def time_average(traj, f, burn_in, n_checkpoints=8, n_batches=16):
    """Trapezoidal time average of ``f(X_s)`` over ``[burn_in, t_final]``.

    For an ensemble the per-trajectory averages are pooled; the error comes
    from :func:`batch_means` with at least ``n_batches`` batches.
    ``running`` holds the averages over ``[burn_in, c]`` for each checkpoint
    ``c``.
    """
    ens = as_ensemble(traj)
    if burn_in >= ens.times[-1]:
        raise ValueError("burn_in must be smaller than the final time")
    mask = _window(ens, burn_in)
    t = ens.times[mask]
    v = _values(ens, f)[:, mask]
    value = float(np.mean(_trapz_mean(t, v)))
    _, se, _ = batch_means(t, v, n_batches)
    cps = burn_in + (t[-1] - burn_in) * np.arange(1, n_checkpoints + 1) / n_checkpoints
    running = []
    for c in cps:
        sel = t <= c + 1e-9 * max(1.0, c)
        running.append(float(np.mean(_trapz_mean(t[sel], v[:, sel]))))
    return TimeAverage(value, se, cps, np.array(running), float(burn_in), n_batches)


def window_average(traj, f, start, stop, n_batches=16):
    """Average over ``[start, stop]`` with its batch-means standard error."""
    ens = as_ensemble(traj)
    mask = _window(ens, start, stop)
    t = ens.times[mask]
    v = _values(ens, f)[:, mask]
    _, se, _ = batch_means(t, v, n_batches)
    return float(np.mean(_trapz_mean(t, v))), se


def windows_agree(traj, f, windows, k=3.0, n_batches=16):
    """Check that consecutive window averages agree within ``k`` combined errors.

    Returns ``(ok, [(start, stop, mean, se), ...])``.
    """
    rows = [(a, b) + window_average(traj, f, a, b, n_batches) for a, b in windows]
    ok = all(
        abs(r1[2] - r2[2]) <= k * np.hypot(r1[3], r2[3]) for r1, r2 in zip(rows, rows[1:])
    )
    return bool(ok), rows


@dataclass(frozen=True)
class LyapunovReport:
    """``∫_0^t E||DX_s||² ds`` against ``E||CX_0||² + 2βt`` on the grid.

    ``k_hat`` is ``(1/T) ∫_0^T E||DX_s||² ds``, the empirical constant of the
    linear-growth bound on time-integrated moments.
    """

    times: np.ndarray
    lhs: np.ndarray
    stderr: np.ndarray
    rhs: np.ndarray
    flags: np.ndarray
    k_hat: float

    @property
    def n_flags(self):
        return int(np.count_nonzero(self.flags))


def lyapunov_diagnostic(ensemble, D, C, beta):
    ens = as_ensemble(ensemble)
    for op in (D, C):
        if op.shape != (ens.dim, ens.dim):
            raise GridMismatchError("operator does not match the state dimension")
    t = ens.times
    d2 = _values(ens, squared_norm_of(D))
    c0 = _values(ens, squared_norm_of(C))[:, 0]
    integ = np.zeros_like(d2)
    if t.size > 1:
        integ[:, 1:] = np.cumsum(0.5 * (d2[:, 1:] + d2[:, :-1]) * np.diff(t), axis=1)
    n = len(ens)
    lhs = integ.mean(axis=0)
    se = integ.std(axis=0, ddof=1) / np.sqrt(n) if n > 1 else np.zeros_like(lhs)
    rhs = c0.mean() + 2.0 * beta * t
    flags = lhs - 3.0 * se > rhs + 1e-12
    k_hat = float(lhs[-1] / t[-1]) if t[-1] > 0 else 0.0
    return LyapunovReport(t, lhs, se, rhs, flags, k_hat)


@dataclass(frozen=True)
class MeasureSummary:
    """Rows ``(name, mean, stderr, window_means)`` of time-and-ensemble averages."""

    rows: list

    def column(self, name):
        for r in self.rows:
            if r[0] == name:
                return r
        raise KeyError(name)


def empirical_measure_summary(ensemble, observables, burn_in, D=None, n_windows=3, n_batches=16):
    """Averages of a battery of observables after ``burn_in``.

    The norm ``||x||`` is always included, and ``||D x||²`` when ``D`` is
    given.  ``window_means`` splits the post-burn-in interval into
    ``n_windows`` equal windows to expose growth.
    """
    if not observables:
        raise ValueError("empty observable battery")
    ens = as_ensemble(ensemble)
    battery = dict(observables)
    battery.setdefault("norm", lambda s: np.linalg.norm(s, axis=-1))
    if D is not None:
        battery.setdefault("|Dx|^2", squared_norm_of(D))
    mask = _window(ens, burn_in)
    t = ens.times[mask]
    edges = np.linspace(t[0], t[-1], n_windows + 1)
    rows = []
    for name, f in battery.items():
        v = _values(ens, f)[:, mask]
        mean = float(np.mean(_trapz_mean(t, v)))
        _, se, _ = batch_means(t, v, n_batches)
        wins = []
        for a, b in zip(edges[:-1], edges[1:]):
            sel = (t >= a - 1e-9) & (t <= b + 1e-9)
            wins.append(float(np.mean(_trapz_mean(t[sel], v[:, sel]))))
        rows.append((name, mean, se, np.array(wins)))
    return MeasureSummary(rows)


def default_burn_in(m):
    """``10 / rate`` with ``rate`` the smallest squared nonzero channel entry.

    A crude decay-rate scale; override it whenever the relaxation time is
    known.
    """
    rates = []
    for L in m.channels:
        a = np.abs(L.data)
        a = a[a > 0]
        if a.size:
            rates.append(float(np.min(a)) ** 2)
    if not rates:
        return 0.0
    return 10.0 / min(rates)
