"""Brute-force reference computations for tests.

Everything here uses dense arrays, explicit loops and its own operator
construction, so none of it shares code with the sparse production paths.
Dense oracles are limited to ``MAX_DIM`` levels.
"""

import math

import numpy as np

from .model import MeasurementParams, OscillatorParams

__all__ = [
    "MAX_DIM",
    "dense_ladder",
    "dense_model",
    "dense_field_oracle",
    "dense_lindblad_rhs",
    "truncation_defect",
    "refinement_ratio",
    "richardson",
]

MAX_DIM = 64


def _cap(dim):
    if dim > MAX_DIM:
        raise ValueError(f"dense oracles are limited to dim <= {MAX_DIM}")


def dense_ladder(dim):
    a = np.zeros((dim, dim), dtype=complex)
    for j in range(1, dim):
        a[j - 1, j] = math.sqrt(j)
    return a


def _ops_from_params(params, dim):
    a = dense_ladder(dim)
    ad = a.conj().T
    if isinstance(params, OscillatorParams):
        n = ad @ a
        H = 1j * params.beta1 * (ad - a) + params.beta2 * n + params.beta3 * (ad @ ad @ a @ a)
        basis = (a, ad, n, a @ a, ad @ ad, n @ n)
        Ls = [c * op for c, op in zip(params.alphas, basis) if c != 0]
        return H, Ls
    if isinstance(params, MeasurementParams):
        q = (a + ad) / math.sqrt(2)
        p = 1j * (ad - a) / math.sqrt(2)
        H = params.h_alpha * (p @ p) + params.h_beta * (q @ q)
        H = 0.5 * (H + H.conj().T)
        return H, [(params.kappa / params.sigma) * q, (params.kappa * params.sigma) * p]
    raise TypeError(f"no dense construction for {type(params).__name__}")


def dense_model(m):
    """Dense ``(H, [L_k], G)`` of a model, rebuilt from its parameters when available."""
    if m.params is not None:
        H, Ls = _ops_from_params(m.params, m.dim)
    else:
        H = m.H.toarray()
        Ls = [L.toarray() for L in m.channels]
    G = -1j * H
    for L in Ls:
        G = G - 0.5 * (L.conj().T @ L)
    return H, Ls, G


def _matvec(A, y):
    n = len(y)
    out = np.zeros(n, dtype=complex)
    for i in range(n):
        s = 0j
        for j in range(n):
            s += A[i, j] * y[j]
        out[i] = s
    return out


def _dot(x, y):
    s = 0j
    for u, v in zip(x, y):
        s += u.conjugate() * v
    return s


def dense_field_oracle(y, m):
    """Drift and per-channel diffusion of the nonlinear equation, term by term."""
    _cap(m.dim)
    _, Ls, G = dense_model(m)
    y = np.asarray(y, dtype=complex)
    drift = _matvec(G, y)
    diffusion = []
    for L in Ls:
        Ly = _matvec(L, y)
        r = _dot(y, Ly).real
        drift = drift + r * Ly - 0.5 * r * r * y
        diffusion.append(Ly - r * y)
    return drift, diffusion


def dense_lindblad_rhs(rho, m):
    _cap(m.dim)
    _, Ls, G = dense_model(m)
    rho = np.asarray(rho, dtype=complex)
    out = G @ rho + rho @ G.conj().T
    for L in Ls:
        out = out + L @ rho @ L.conj().T
    return out


def truncation_defect(m, level):
    """``2 Re<e, Ge> + Σ_k ||L_k e||²`` at ``e = e_level`` with untruncated channel images.

    The drift uses the truncated operators; the channel norms are taken on
    a space two levels larger, so the value is the norm that truncation
    removes from ``L_k e``.
    """
    _cap(m.dim)
    if m.params is None:
        raise ValueError("truncation defect needs a preset with parameters")
    _, _, G = dense_model(m)
    _, Ls_big = _ops_from_params(m.params, m.dim + 2)
    value = 2.0 * G[level, level].real
    for L in Ls_big:
        col = L[:, level]
        value += float(np.sum(np.abs(col) ** 2))
    return value


def refinement_ratio(coarse, fine):
    """``coarse / fine`` of an error measured at step sizes ``dt`` and ``dt/2``."""
    return float(coarse) / float(fine)


def richardson(coarse, fine, order=1):
    """Extrapolated value from results at ``dt`` and ``dt/2`` for a method of ``order``."""
    f = 2.0**order
    return (f * fine - coarse) / (f - 1.0)
