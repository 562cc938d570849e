"""Deterministic master-equation reference.

    dρ/dt = Gρ + ρG† + Σ_k L_k ρ L_k†

Density matrices are dense ``(dim, dim)`` complex arrays.  The time evolution
uses classical fourth-order Runge-Kutta with re-Hermitization after every
step; the stationary state is the normalized kernel of the column-stacked
generator.
"""

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import DimensionMismatchError, IntegrationFailureError, NonUniqueSteadyStateError
from .trajectory import as_ensemble

__all__ = [
    "check_density",
    "pure_density",
    "lindblad_rhs",
    "liouvillian",
    "evolve_density",
    "stationary_kernel",
    "steady_state",
    "trace_distance",
    "mc_density",
    "compare_mc_density",
    "DensityComparison",
    "KERNEL_RTOL",
]

KERNEL_RTOL = 1e-10


def check_density(rho, herm_tol=1e-10, trace_tol=1e-10, psd_tol=1e-8):
    """Raise ``ValueError`` unless ``rho`` is Hermitian, unit-trace and PSD."""
    rho = np.asarray(rho)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise DimensionMismatchError(f"density matrix must be square, got {rho.shape}")
    if np.max(np.abs(rho - rho.conj().T)) > herm_tol:
        raise ValueError("density matrix is not Hermitian")
    if abs(np.trace(rho) - 1.0) > trace_tol:
        raise ValueError(f"density matrix has trace {np.trace(rho).real:.3e}")
    if np.min(np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))) < -psd_tol:
        raise ValueError("density matrix is not positive semidefinite")
    return rho


def pure_density(x):
    x = np.asarray(x, dtype=complex)
    return np.outer(x, x.conj())


def _dense_ops(m):
    G = m.G.toarray()
    Ls = [L.toarray() for L in m.channels]
    return G, Ls


def _rhs(rho, G, Ls):
    out = G @ rho + rho @ G.conj().T
    for L in Ls:
        out += L @ rho @ L.conj().T
    return out


def lindblad_rhs(rho, m):
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (m.dim, m.dim):
        raise DimensionMismatchError(f"rho has shape {rho.shape}, model dim {m.dim}")
    return _rhs(rho, *_dense_ops(m))


def liouvillian(m):
    """Sparse ``dim² x dim²`` generator acting on column-stacked ``vec(ρ)``.

    Uses ``vec(AρB) = (Bᵀ ⊗ A) vec(ρ)``.
    """
    eye = sp.identity(m.dim, dtype=complex, format="csr")
    G = m.G
    out = sp.kron(eye, G) + sp.kron(G.conj(), eye)
    for L in m.channels:
        out = out + sp.kron(L.conj(), L)
    return sp.csr_matrix(out)


def evolve_density(rho0, m, t_final, dt=1e-3, trace_tol=1e-6):
    """Fourth-order Runge-Kutta integration up to ``t_final``.

    The number of steps is ``ceil(t_final/dt)`` so the actual step never
    exceeds ``dt``.
    """
    rho = np.array(rho0, dtype=complex)
    if rho.shape != (m.dim, m.dim):
        raise DimensionMismatchError(f"rho has shape {rho.shape}, model dim {m.dim}")
    G, Ls = _dense_ops(m)
    n = max(1, int(np.ceil(t_final / dt - 1e-9)))
    h = t_final / n
    tr0 = np.trace(rho).real
    for _ in range(n):
        k1 = _rhs(rho, G, Ls)
        k2 = _rhs(rho + 0.5 * h * k1, G, Ls)
        k3 = _rhs(rho + 0.5 * h * k2, G, Ls)
        k4 = _rhs(rho + h * k3, G, Ls)
        rho = rho + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        rho = 0.5 * (rho + rho.conj().T)
    drift = abs(np.trace(rho).real - tr0)
    if not np.isfinite(drift) or drift > trace_tol:
        raise IntegrationFailureError(
            f"trace drifted by {drift:.2e}; reduce dt or enlarge the basis"
        )
    return rho


def stationary_kernel(m, rtol=KERNEL_RTOL):
    """Hermitian basis of the generator's kernel.

    Singular values below ``rtol * max`` count as kernel.  Each basis element
    is Hermitian; when its trace is nonzero it is scaled to unit trace.
    """
    Lv = liouvillian(m).toarray()
    _, s, vh = np.linalg.svd(Lv)
    null = vh[s <= rtol * s[0]].conj()
    d = m.dim
    # Column-stacked vec: reshape with Fortran order.
    mats = [v.reshape(d, d, order="F") for v in null]
    parts = []
    for M in mats:
        parts.append(0.5 * (M + M.conj().T))
        parts.append(0.5j * (M.conj().T - M))
    if not parts:
        return []
    # The real span of the Hermitian parts has the same dimension as the kernel.
    X = np.array([np.concatenate([p.real.ravel(), p.imag.ravel()]) for p in parts])
    u, sv, wh = np.linalg.svd(X, full_matrices=False)
    rank = int(np.sum(sv > 1e-8 * sv[0]))
    basis = []
    for row in wh[:rank]:
        H = (row[: d * d] + 1j * row[d * d:]).reshape(d, d)
        H = 0.5 * (H + H.conj().T)
        tr = np.trace(H).real
        if abs(tr) > 1e-8:
            H = H / tr
        basis.append(H)
    return basis


def steady_state(m, rtol=KERNEL_RTOL):
    """Unique stationary density matrix of the model.

    Raises
    ------
    NonUniqueSteadyStateError
        When the kernel is not one-dimensional; the exception carries the
        kernel dimension and a Hermitian basis.
    """
    basis = stationary_kernel(m, rtol)
    if len(basis) != 1:
        raise NonUniqueSteadyStateError(len(basis), basis)
    rho = basis[0]
    return check_density(rho, herm_tol=1e-10, trace_tol=1e-10, psd_tol=1e-8)


def trace_distance(a, b):
    return 0.5 * float(np.sum(np.abs(np.linalg.eigvalsh(a - b))))


def mc_density(ensemble, t):
    """Weighted average of ``|X_t><X_t|`` and per-entry standard errors."""
    ens = as_ensemble(ensemble)
    X = ens.states[:, ens.time_index(t), :]
    w = np.asarray(ens.weight, dtype=float)
    wn = w / w.sum()
    outer = X[:, :, None] * X[:, None, :].conj()
    rho = np.tensordot(wn, outer, axes=(0, 0))
    if len(ens) < 2:
        return rho, np.full(rho.shape, np.nan)
    dev = outer - rho
    se = np.sqrt(np.tensordot(wn**2, np.abs(dev) ** 2, axes=(0, 0)))
    return rho, se


@dataclass(frozen=True)
class DensityComparison:
    """Monte Carlo density matrix against a reference.

    ``sigma`` is the aggregate Monte Carlo error, the root sum of squares of
    the per-entry standard errors (the expected Frobenius size of the
    sampling noise).  ``insufficient`` is set for ensembles too small to
    estimate errors.
    """

    trace_distance: float
    sigma: float
    diag_stderr: np.ndarray
    rho_mc: np.ndarray
    insufficient: bool

    def within(self, slack=0.0, k=3.0):
        return (not self.insufficient) and self.trace_distance <= k * self.sigma + slack


def compare_mc_density(ensemble, t, rho_ref, min_traj=30):
    rho, se = mc_density(ensemble, t)
    rho_ref = np.asarray(rho_ref)
    if rho_ref.shape != rho.shape:
        raise DimensionMismatchError("reference density has the wrong shape")
    n = len(as_ensemble(ensemble))
    insufficient = n < min_traj
    sigma = float(np.sqrt(np.nansum(se**2))) if n > 1 else float("nan")
    return DensityComparison(
        trace_distance=trace_distance(rho, rho_ref),
        sigma=sigma,
        diag_stderr=np.real(np.diag(se)),
        rho_mc=rho,
        insufficient=insufficient,
    )
