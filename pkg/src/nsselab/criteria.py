"""Numerical evaluation of the regularity and stationarity conditions.

For a reference operator ``C`` (a power of ``N``) the quadratic form

    F(x) = 2 Re<Cx, CGx> + Σ_k ||C L_k x||²

controls both the growth of ``E||CX_t||²`` and the existence of regular
invariant measures.  It is assembled here as a Hermitian matrix from the
truncated operators and evaluated on interior levels only, where truncation
does not alter it.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

from . import hilbert
from .errors import OutOfScopeError, UnboundedFormError
from .model import OscillatorParams, oscillator

__all__ = [
    "CriteriaReport",
    "lyapunov_form",
    "drift_form_diagonal",
    "estimate_h13_constants",
    "estimate_lyapunov_constants",
    "theorem7_predicate",
    "theorem8_predicate",
    "leading_slope",
    "criteria_report",
    "N_ALPHA",
    "N_RANDOM",
]

N_ALPHA = 64
N_RANDOM = 100


def _dense(op):
    return op.toarray() if sp.issparse(op) else np.asarray(op)


def lyapunov_form(C, m):
    """Hermitian matrix of ``x -> 2 Re<Cx, CGx> + Σ_k ||C L_k x||²``."""
    C = sp.csr_matrix(C, dtype=complex)
    C2 = hilbert.adjoint(C) @ C
    F = hilbert.adjoint(m.G) @ C2 + C2 @ m.G
    for L in m.channels:
        F = F + hilbert.adjoint(L) @ C2 @ L
    F = _dense(F)
    return 0.5 * (F + F.conj().T)


def _check_levels(levels, m):
    levels = np.atleast_1d(np.asarray(levels, dtype=int))
    if levels.size and (levels.min() < 0 or levels.max() > m.interior):
        raise ValueError(
            f"levels must lie in 0..{m.interior} (dim {m.dim}, band {m.maxdeg}); "
            "higher levels touch the truncation boundary"
        )
    return levels


def drift_form_diagonal(C, m, levels):
    """``F(e_j)`` for each ``j`` in ``levels``."""
    levels = _check_levels(levels, m)
    C = sp.csr_matrix(C, dtype=complex)
    out = np.empty(levels.size)
    for i, j in enumerate(levels):
        e = hilbert.basis(m.dim, int(j))
        Ce = C @ e
        v = 2.0 * np.real(np.vdot(Ce, C @ (m.G @ e)))
        for L in m.channels:
            v += np.linalg.norm(C @ (L @ e)) ** 2
        out[i] = v
    return out


def _diag_positive(C):
    C = sp.csr_matrix(C)
    if C.nnz and (C - sp.diags(C.diagonal())).count_nonzero():
        raise ValueError("reference operator must be diagonal")
    d = C.diagonal()
    if np.any(np.abs(d.imag) > 0) or np.any(d.real < 0):
        raise ValueError("reference operator must have non-negative real diagonal")
    return d.real


def _top_eig(A):
    return float(sla.eigvalsh(A, subset_by_index=[A.shape[0] - 1, A.shape[0] - 1])[0])


def _certify(A, beta):
    """Smallest ``b >= beta`` (up to a relative margin) with ``bI - A`` positive definite.

    The eigenvalue solver has an absolute error of order ``eps * ||A||``,
    which is large for the strongly graded forms of high powers of ``N``.
    A Cholesky factorization of ``bI - A`` certifies the bound instead.
    """
    n = A.shape[0]
    slack = 1e-12 * (1.0 + abs(beta))
    margin = 0.0
    for _ in range(200):
        try:
            sla.cholesky((beta + margin + slack) * np.eye(n) - A, lower=True)
            return beta + margin
        except sla.LinAlgError:
            margin = max(2.0 * margin, 1e-9 * (1.0 + abs(beta)))
    raise UnboundedFormError("could not certify the offset")


def _unbounded_growth(ratio, levels):
    """Heuristic for a form that outgrows ``C² + I`` on the interior."""
    top = ratio[-1]
    if top <= 0:
        return False
    half = ratio[levels.size // 2]
    jt, jh = max(levels[-1], 1), max(levels[levels.size // 2], 1)
    if half <= 0 or jt == jh:
        return half <= 0 and top > 0
    return np.log(top / half) / np.log(jt / jh) > 0.5


def estimate_h13_constants(C, m, n_alpha=N_ALPHA, n_random=N_RANDOM, seed=0):
    """Constants ``(α, β)`` with ``F(x) <= α(||Cx||² + ||x||²) + β`` on unit interior states.

    For each ``α`` on a grid (0 and a geometric range up to ten times the
    largest diagonal ratio ``F_jj / (C_jj² + 1)``) the smallest admissible
    ``β`` is ``max(0, λ_max(F - α(C² + I)))``; the pair minimizing ``α + β``
    is returned.  The result is then verified on every interior basis vector
    and ``n_random`` seeded random interior states.

    Raises
    ------
    UnboundedFormError
        When the diagonal ratio grows with the level, i.e. no finite ``α``
        works as the truncation is lifted.
    """
    cdiag = _diag_positive(C)
    n = m.interior + 1
    if n < 1:
        raise ValueError("model has no interior levels")
    F = lyapunov_form(C, m)[:n, :n]
    w = cdiag[:n] ** 2 + 1.0
    levels = np.arange(n)
    ratio = np.real(np.diag(F)) / w
    if n >= 4 and _unbounded_growth(ratio, levels):
        raise UnboundedFormError(
            f"F(e_j)/(||Ce_j||²+1) grows with j (top interior value {ratio[-1]:.3e})"
        )
    upper = 10.0 * float(np.max(ratio))
    grid = [0.0]
    if upper > 0:
        grid += list(np.geomspace(upper * 1e-3, upper, n_alpha - 1))
    best = None
    for a in grid:
        A = F - a * np.diag(w)
        b = max(0.0, _top_eig(A))
        if best is None or a + b < best[0] + best[1]:
            best = (a, b)
    alpha, beta = best
    beta = _certify(F - alpha * np.diag(w), beta)
    _verify_h13(F, w, alpha, beta, n_random, seed)
    return float(alpha), float(beta)


def _verify_h13(F, w, alpha, beta, n_random, seed):
    n = F.shape[0]
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n_random, n)) + 1j * rng.standard_normal((n_random, n))
    X /= np.linalg.norm(X, axis=1, keepdims=True)
    X = np.vstack([np.eye(n, dtype=complex), X])
    lhs = np.real(np.einsum("si,ij,sj->s", X.conj(), F, X))
    rhs = alpha * np.sum(w * np.abs(X) ** 2, axis=1) + beta
    scale = np.abs(lhs) + np.abs(rhs) + 1.0
    if np.any(lhs > rhs + 1e-9 * scale):
        raise AssertionError("estimated constants fail the verification states")


def estimate_lyapunov_constants(C, m, alpha=None):
    """Decay constants ``(α, D, β)`` with ``F(x) <= -||Dx||² + β(1 + ||x||²)``.

    ``D = √α C``.  The default ``α`` is half the decay rate of the top
    interior level, ``-F_nn / (2 C_nn²)``; ``β`` is the smallest offset for
    unit interior states, ``max(0, λ_max(F + α C²)) / 2``.
    """
    cdiag = _diag_positive(C)
    n = m.interior + 1
    F = lyapunov_form(C, m)[:n, :n]
    c2 = cdiag[:n] ** 2
    if alpha is None:
        top = c2[-1]
        alpha = 0.5 * max(0.0, -float(np.real(F[-1, -1])) / top) if top > 0 else 0.0
    if not alpha > 0:
        raise UnboundedFormError("form does not decay at the top interior level")
    A = F + alpha * np.diag(c2)
    beta = 0.5 * _certify(A, max(0.0, _top_eig(A)))
    D = np.sqrt(alpha) * sp.csr_matrix(C, dtype=complex)
    return float(alpha), sp.csr_matrix(D), float(beta)


def theorem7_predicate(params):
    """Well-posedness regime of the oscillator: ``|α4| >= |α5|``."""
    return bool(abs(params.alpha4) >= abs(params.alpha5))


def theorem8_predicate(params, p):
    """Regime with a regular invariant measure for ``C = N^p``, ``p >= 4``."""
    if p < 4:
        raise OutOfScopeError(f"p must be at least 4, got {p}")
    a1, a2, a4, a5 = (abs(params.alpha1), abs(params.alpha2), abs(params.alpha4),
                      abs(params.alpha5))
    if a4 > a5:
        return True
    return bool(a4 == a5 and a2**2 - a1**2 + 4 * (2 * p + 1) * a4**2 < 0)


def leading_slope(levels, cj, p, n_fit=None):
    """Extrapolated limit of ``c_j / j^(2p+1)``.

    Fits a cubic in ``1/j`` to the ratios over the upper half of ``levels``
    and returns its intercept, removing the lower-order corrections that
    are still sizeable at moderate ``j``.
    """
    levels = np.asarray(levels, dtype=float)
    cj = np.asarray(cj, dtype=float)
    keep = levels >= max(1.0, levels.max() / 2)
    if n_fit is not None:
        keep &= np.arange(levels.size) >= levels.size - n_fit
    j = levels[keep]
    ratio = cj[keep] / j ** (2 * p + 1)
    deg = min(3, j.size - 1)
    coef = np.polynomial.polynomial.polyfit(1.0 / j, ratio, deg)
    return float(coef[0])


@dataclass(frozen=True)
class CriteriaReport:
    """Constants, coefficients and predicates for ``C = N^p``.

    ``alpha`` and ``beta`` are ``None`` when the form is unbounded; the
    reason is kept in ``note``.
    """

    p: int
    dim: int
    levels: np.ndarray
    cj: np.ndarray
    leading_slope: float
    alpha: float
    beta: float
    predicates: dict = field(default_factory=dict)
    note: str = ""

    def ratio(self, j):
        i = int(np.flatnonzero(self.levels == j)[0])
        return float(self.cj[i] / float(j) ** (2 * self.p + 1))


def criteria_report(params, p=4, dim=256, levels=None):
    """Evaluate the oscillator ``params`` against ``C = N^p`` on ``dim`` levels."""
    if not isinstance(params, OscillatorParams):
        raise TypeError("criteria are defined for OscillatorParams")
    m = oscillator(params, dim)
    C = hilbert.number_power(dim, p)
    levels = np.arange(m.interior + 1) if levels is None else np.asarray(levels, dtype=int)
    cj = drift_form_diagonal(C, m, levels)
    slope = leading_slope(levels, cj, p) if levels.size >= 4 else float("nan")
    preds = {"theorem7": theorem7_predicate(params)}
    note = ""
    try:
        preds["theorem8"] = theorem8_predicate(params, p)
    except OutOfScopeError as exc:
        note = str(exc)
    try:
        alpha, beta = estimate_h13_constants(C, m)
    except UnboundedFormError as exc:
        alpha = beta = None
        note = (note + "; " if note else "") + str(exc)
    return CriteriaReport(p, dim, levels, cj, slope, alpha, beta, preds, note)
