"""Linear algebra on the truncated Fock space spanned by e_0, ..., e_{dim-1}.

States are one-dimensional complex ``numpy`` arrays.  Operators are
``scipy.sparse.csr_matrix`` instances with complex entries; every operator
used by the package is banded, so sparse products are exact.

The truncation is a hard cutoff: the creation operator kills the top level,
which makes every truncated operator the compression P_n A P_n of its
infinite-dimensional counterpart.
"""

import numpy as np
import scipy.sparse as sp

from .errors import DimensionMismatchError, InvalidDimensionError

__all__ = [
    "ladder_ops",
    "quadratures",
    "identity",
    "zero",
    "adjoint",
    "apply",
    "basis",
    "inner",
    "norm",
    "normalize",
    "as_state",
    "is_hermitian",
    "operator_kind",
    "bandwidth",
    "random_state",
    "number_power",
]

HERMITIAN_TOL = 1e-12
NORMALIZED_TOL = 1e-12


def _check_dim(dim):
    if int(dim) != dim or dim < 2:
        raise InvalidDimensionError(f"basis size must be an integer >= 2, got {dim!r}")
    return int(dim)


def ladder_ops(dim):
    """Annihilation, creation and number operators on ``dim`` levels.

    Returns
    -------
    a, a_dagger, number : csr_matrix
        ``a e_j = sqrt(j) e_{j-1}``, ``a_dagger e_j = sqrt(j+1) e_{j+1}``
        for ``j < dim-1`` and ``a_dagger e_{dim-1} = 0``; ``number`` is
        ``a_dagger @ a``, diagonal with entries ``0..dim-1``.
    """
    dim = _check_dim(dim)
    off = np.sqrt(np.arange(1, dim, dtype=float))
    a = sp.diags(off.astype(complex), 1, shape=(dim, dim), format="csr")
    a_dag = sp.diags(off.astype(complex), -1, shape=(dim, dim), format="csr")
    number = sp.diags(np.arange(dim, dtype=complex), 0, format="csr")
    return a, a_dag, number


def quadratures(dim):
    """Position ``Q = (a + a†)/√2`` and momentum ``P = i(a† - a)/√2``."""
    a, a_dag, _ = ladder_ops(dim)
    s = 1.0 / np.sqrt(2.0)
    Q = ((a + a_dag) * s).tocsr()
    P = ((a_dag - a) * (1j * s)).tocsr()
    return Q, P


def number_power(dim, p):
    """``N**p`` as a diagonal operator."""
    dim = _check_dim(dim)
    return sp.diags(np.arange(dim, dtype=float) ** p + 0j, 0, format="csr")


def identity(dim):
    return sp.identity(_check_dim(dim), dtype=complex, format="csr")


def zero(dim):
    dim = _check_dim(dim)
    return sp.csr_matrix((dim, dim), dtype=complex)


def adjoint(op):
    """Conjugate transpose."""
    return sp.csr_matrix(op.conj().T)


def apply(op, x):
    x = np.asarray(x)
    if op.shape[1] != x.shape[0]:
        raise DimensionMismatchError(
            f"operator of size {op.shape[1]} applied to state of size {x.shape[0]}"
        )
    return np.asarray(op @ x)


def basis(dim, j):
    """Basis vector ``e_j``."""
    dim = _check_dim(dim)
    if not 0 <= j < dim:
        raise InvalidDimensionError(f"level {j} outside 0..{dim - 1}")
    x = np.zeros(dim, dtype=complex)
    x[j] = 1.0
    return x


def as_state(x, dim=None):
    """Validate and convert ``x`` to a complex state vector."""
    x = np.asarray(x, dtype=complex)
    if x.ndim != 1:
        raise DimensionMismatchError(f"state must be one-dimensional, got shape {x.shape}")
    if dim is not None and x.shape[0] != dim:
        raise DimensionMismatchError(f"state has {x.shape[0]} entries, expected {dim}")
    if not np.all(np.isfinite(x)):
        raise ValueError("state has non-finite entries")
    return x


def inner(x, y):
    """``<x, y>``, anti-linear in the first argument."""
    return np.vdot(x, y)


def norm(x):
    return float(np.linalg.norm(x))


def normalize(x):
    n = norm(x)
    if n == 0.0:
        raise ValueError("cannot normalize the zero vector")
    return np.asarray(x, dtype=complex) / n


def _max_abs(op):
    data = sp.csr_matrix(op).data
    return float(np.max(np.abs(data))) if data.size else 0.0


def is_hermitian(op, tol=HERMITIAN_TOL):
    diff = sp.csr_matrix(op - adjoint(op))
    return _max_abs(diff) <= tol * (1.0 + _max_abs(op))


def operator_kind(op, tol=HERMITIAN_TOL):
    """Classify ``op`` as ``"hermitian"``, ``"anti-hermitian"`` or ``"general"``."""
    if is_hermitian(op, tol):
        return "hermitian"
    if _max_abs(sp.csr_matrix(op + adjoint(op))) <= tol * (1.0 + _max_abs(op)):
        return "anti-hermitian"
    return "general"


def bandwidth(op):
    """Largest ``|i - j|`` over the nonzero entries of ``op``."""
    coo = sp.coo_matrix(op)
    mask = coo.data != 0
    if not np.any(mask):
        return 0
    return int(np.max(np.abs(coo.row[mask] - coo.col[mask])))


def random_state(dim, rng, support=None):
    """Random normalized state, optionally supported on levels ``0..support-1``."""
    dim = _check_dim(dim)
    n = dim if support is None else support
    x = np.zeros(dim, dtype=complex)
    x[:n] = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    return normalize(x)
