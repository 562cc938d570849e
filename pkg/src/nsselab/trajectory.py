"""Solver configuration, trajectory containers and the shared time-stepping loop.

Ensembles are integrated as a block: the states of all trajectories form
the columns of a ``(dim, n_traj)`` array, so each step is a handful of
sparse-times-dense products.  Trajectory ``i`` draws its Brownian increments
from its own Philox stream keyed by ``(seed, i)``; the stream and the
arithmetic applied to column ``i`` do not depend on the other trajectories.
"""

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import BlowUpError, GridMismatchError

__all__ = [
    "SCHEMES",
    "SolverConfig",
    "Trajectory",
    "Ensemble",
    "as_ensemble",
    "trajectory_rng",
    "brownian_increments",
    "default_dt",
]

SCHEMES = ("euler_maruyama", "semi_implicit")
_NOISE_CHUNK = 512


@dataclass(frozen=True)
class SolverConfig:
    dt: float = 1e-3
    t_final: float = 1.0
    scheme: str = "euler_maruyama"
    seed: int = 0
    n_traj: int = 1
    record_stride: int = 1
    renormalize: bool = True
    store_noise: bool = True

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if not self.t_final >= self.dt:
            raise ValueError("t_final must be at least dt")
        if self.n_traj < 1:
            raise ValueError("n_traj must be >= 1")
        if self.record_stride < 1:
            raise ValueError("record_stride must be >= 1")
        if self.scheme not in SCHEMES:
            raise ValueError(f"scheme must be one of {SCHEMES}, got {self.scheme!r}")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must fit in 64 unsigned bits")

    @property
    def n_steps(self):
        return int(round(self.t_final / self.dt))

    def record_steps(self):
        steps = list(range(0, self.n_steps + 1, self.record_stride))
        if steps[-1] != self.n_steps:
            steps.append(self.n_steps)
        return np.array(steps)

    def replace(self, **changes):
        return replace(self, **changes)


def default_dt(m):
    """``1e-3 * min(1, 1/r)`` with ``r`` the largest absolute row sum of ``G``."""
    r = float(np.max(np.abs(m.G).sum(axis=1)))
    return 1e-3 * min(1.0, 1.0 / r) if r > 0 else 1e-3


@dataclass(frozen=True, eq=False)
class Trajectory:
    """One sample path on the recorded grid.

    ``noise`` holds the Brownian increments of every integration step
    (shape ``(n_steps, K)``), ``sq_norm`` the squared norm of the integrated
    state at each recorded time and ``weight`` the terminal squared norm used
    as a change-of-measure density (1 for normalized runs).
    """

    times: np.ndarray
    states: np.ndarray
    sq_norm: np.ndarray
    weight: float
    dt: float
    stride: int
    noise: np.ndarray = None
    compensator: np.ndarray = None
    kind: str = "linear"


@dataclass(frozen=True, eq=False)
class Ensemble:
    """A block of trajectories sharing one time grid.

    Arrays carry the trajectory index first: ``states`` has shape
    ``(n_traj, n_rec, dim)``, ``sq_norm`` ``(n_traj, n_rec)``, ``weight``
    ``(n_traj,)`` and ``noise`` ``(n_traj, n_steps, K)``.  ``compensator``
    is the accumulated conditional mean increment of the squared norm of the
    raw integration steps.
    """

    times: np.ndarray
    states: np.ndarray
    sq_norm: np.ndarray
    weight: np.ndarray
    dt: float
    stride: int
    noise: np.ndarray = None
    compensator: np.ndarray = None
    kind: str = "linear"
    config: SolverConfig = field(default=None, repr=False)

    def __len__(self):
        return self.states.shape[0]

    @property
    def dim(self):
        return self.states.shape[2]

    def __getitem__(self, i):
        return Trajectory(
            times=self.times,
            states=self.states[i],
            sq_norm=self.sq_norm[i],
            weight=float(self.weight[i]),
            dt=self.dt,
            stride=self.stride,
            noise=None if self.noise is None else self.noise[i],
            compensator=None if self.compensator is None else self.compensator[i],
            kind=self.kind,
        )

    def __iter__(self):
        for i in range(len(self)):
            yield self[i]

    def time_index(self, t):
        idx = np.flatnonzero(np.isclose(self.times, t, rtol=0, atol=1e-9 * max(1.0, abs(t))))
        if idx.size == 0:
            raise GridMismatchError(f"t={t} is not on the recorded grid")
        return int(idx[0])

    @classmethod
    def from_trajectories(cls, trajs):
        trajs = list(trajs)
        if not trajs:
            raise ValueError("empty ensemble")
        t0 = trajs[0]
        for tr in trajs[1:]:
            if tr.times.shape != t0.times.shape or not np.array_equal(tr.times, t0.times):
                raise GridMismatchError("trajectories do not share a time grid")
            if tr.states.shape != t0.states.shape:
                raise GridMismatchError("trajectories have different state shapes")

        def stack(name):
            vals = [getattr(tr, name) for tr in trajs]
            return None if any(v is None for v in vals) else np.stack(vals)

        return cls(
            times=t0.times,
            states=np.stack([tr.states for tr in trajs]),
            sq_norm=np.stack([tr.sq_norm for tr in trajs]),
            weight=np.array([tr.weight for tr in trajs], dtype=float),
            dt=t0.dt,
            stride=t0.stride,
            noise=stack("noise"),
            compensator=stack("compensator"),
            kind=t0.kind,
        )


def as_ensemble(obj):
    """Accept an :class:`Ensemble`, a :class:`Trajectory` or a list of them."""
    if isinstance(obj, Ensemble):
        return obj
    if isinstance(obj, Trajectory):
        return Ensemble.from_trajectories([obj])
    return Ensemble.from_trajectories(obj)


def trajectory_rng(seed, index):
    """Counter-based generator for trajectory ``index`` of master seed ``seed``."""
    ss = np.random.SeedSequence(seed, spawn_key=(index,))
    return np.random.Generator(np.random.Philox(ss))


def brownian_increments(seed, index, n_steps, K, dt):
    """All increments of one trajectory, shape ``(n_steps, K)``."""
    return math.sqrt(dt) * trajectory_rng(seed, index).standard_normal((n_steps, K))


class _NoiseSource:
    """Serves increments step by step, drawing them chunk-wise per trajectory."""

    def __init__(self, cfg, K, noise=None):
        self.K = K
        self.cfg = cfg
        self.sqdt = math.sqrt(cfg.dt)
        self.given = None
        if noise is not None:
            noise = np.asarray(noise, dtype=float)
            want = (cfg.n_traj, cfg.n_steps, K)
            if noise.shape != want:
                raise ValueError(f"noise has shape {noise.shape}, expected {want}")
            self.given = noise
        else:
            self.gens = [trajectory_rng(cfg.seed, i) for i in range(cfg.n_traj)]
        self.buf = None
        self.start = 0

    def __call__(self, step):
        """Increments of ``step`` as an array of shape ``(K, n_traj)``."""
        if self.given is not None:
            return self.given[:, step, :].T
        if self.buf is None or step >= self.start + self.buf.shape[1]:
            n = min(_NOISE_CHUNK, self.cfg.n_steps - step)
            self.buf = self.sqdt * np.stack([g.standard_normal((n, self.K)) for g in self.gens])
            self.start = step
        return self.buf[:, step - self.start, :].T


def run(m, x0, cfg, step, noise=None, kind="linear", compensate=None, post=None):
    """Drive ``step(Y, dW) -> Y`` over the configured grid.

    ``Y`` has shape ``(dim, n_traj)`` and ``dW`` shape ``(K, n_traj)``.
    ``compensate(Y)`` returns the conditional mean increment of the squared
    norm for the coming step; ``post(Y, step)`` may transform the state after
    each step (renormalization).
    """
    dim = m.dim
    x0 = np.asarray(x0, dtype=complex)
    if x0.shape != (dim,):
        raise ValueError(f"initial state has shape {x0.shape}, expected {(dim,)}")
    n, K, n_steps = cfg.n_traj, m.K, cfg.n_steps
    rec_steps = cfg.record_steps()
    n_rec = rec_steps.size
    states = np.empty((n, n_rec, dim), dtype=complex)
    comp = np.zeros((n, n_rec)) if compensate is not None else None
    stored = np.empty((n, n_steps, K)) if cfg.store_noise else None
    source = _NoiseSource(cfg, K, noise)

    Y = np.repeat(x0[:, None], n, axis=1)
    states[:, 0, :] = Y.T
    acc = np.zeros(n)
    no_noise = np.zeros((0, n))
    r = 1
    with np.errstate(over="ignore", invalid="ignore"):
        for s in range(n_steps):
            dW = source(s) if K > 0 else no_noise
            if stored is not None:
                stored[:, s, :] = dW.T
            if compensate is not None:
                acc += compensate(Y)
            Y = step(Y, dW)
            if not np.all(np.isfinite(Y)):
                bad = np.flatnonzero(~np.all(np.isfinite(Y), axis=0))
                raise BlowUpError(s + 1, int(bad[0]))
            if post is not None:
                Y = post(Y, s + 1)
            if r < n_rec and rec_steps[r] == s + 1:
                states[:, r, :] = Y.T
                if comp is not None:
                    comp[:, r] = acc
                r += 1

    sq = np.sum(np.abs(states) ** 2, axis=2)
    return Ensemble(
        times=rec_steps * cfg.dt,
        states=states,
        sq_norm=sq,
        weight=sq[:, -1].copy(),
        dt=cfg.dt,
        stride=cfg.record_stride,
        noise=stored,
        compensator=comp,
        kind=kind,
        config=cfg,
    )
