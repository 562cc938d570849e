"""Model specification: Hamiltonian, noise channels and effective drift.

A model is the triple ``(H, [L_1, ..., L_K], G)`` with
``G = -iH - 1/2 sum_k L_k^† L_k`` assembled from the truncated matrices.
The presets reproduce the forced and damped quantum oscillator, its thermal
and two-photon special cases, and simultaneous position/momentum monitoring
written on the Fock basis through the quadratures.
"""

import math
from dataclasses import dataclass, field, fields

import numpy as np
import scipy.sparse as sp

from . import hilbert
from .errors import (
    DimensionMismatchError,
    NotHermitianError,
    ParameterDomainError,
    UnknownModelError,
)

__all__ = [
    "OscillatorParams",
    "MeasurementParams",
    "ModelSpec",
    "build_model",
    "effective_drift",
    "conservativity_residual",
    "preset",
    "oscillator",
    "damped",
    "two_photon",
    "measurement",
    "model_from_mapping",
    "PRESETS",
]


@dataclass(frozen=True)
class OscillatorParams:
    """Coefficients of the forced and damped oscillator.

    ``H = iβ1(a† - a) + β2 N + β3 (a†)² a²`` and channels
    ``α1 a, α2 a†, α3 N, α4 a², α5 (a†)², α6 N²``.
    """

    beta1: float = 0.0
    beta2: float = 0.0
    beta3: float = 0.0
    alpha1: complex = 0.0
    alpha2: complex = 0.0
    alpha3: complex = 0.0
    alpha4: complex = 0.0
    alpha5: complex = 0.0
    alpha6: complex = 0.0

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if f.name.startswith("beta") and np.iscomplexobj(v) and np.imag(v) != 0:
                raise ParameterDomainError(f"{f.name} must be real, got {v!r}")
            if not np.isfinite(v):
                raise ParameterDomainError(f"{f.name} must be finite, got {v!r}")

    @property
    def alphas(self):
        return (self.alpha1, self.alpha2, self.alpha3, self.alpha4, self.alpha5, self.alpha6)

    @classmethod
    def damped(cls, omega, A, nu):
        if not (omega > 0 and A > 0 and nu > 0):
            raise ParameterDomainError("damped oscillator needs omega, A, nu > 0")
        return cls(beta2=omega, alpha1=math.sqrt(A * (nu + 1)), alpha2=math.sqrt(A * nu))

    @classmethod
    def two_photon(cls, beta3, alpha4, alpha5):
        if not (alpha4 > 0 and alpha5 >= 0):
            raise ParameterDomainError("two-photon model needs alpha4 > 0 and alpha5 >= 0")
        return cls(beta3=beta3, alpha4=alpha4, alpha5=alpha5)


@dataclass(frozen=True)
class MeasurementParams:
    """Position/momentum monitoring with ``H = h_alpha P² + h_beta Q²``."""

    kappa: float
    sigma: float
    h_alpha: float = 1.0
    h_beta: float = 0.0

    def __post_init__(self):
        if not (self.kappa > 0 and self.sigma > 0):
            raise ParameterDomainError("measurement model needs kappa, sigma > 0")
        if self.h_alpha < 0:
            raise ParameterDomainError("h_alpha must be >= 0")
        for name in ("kappa", "sigma", "h_alpha", "h_beta"):
            if not np.isfinite(getattr(self, name)):
                raise ParameterDomainError(f"{name} must be finite")


@dataclass(frozen=True, eq=False)
class ModelSpec:
    """Immutable model on ``dim`` Fock levels.

    ``extended_channels`` holds the same channels built on ``dim + pad``
    levels.  When present, ``conservativity_residual`` measures the exact
    (untruncated) channel norms against the truncated drift, which exposes
    the truncation defect at the top levels.
    """

    dim: int
    H: sp.csr_matrix
    channels: tuple
    G: sp.csr_matrix
    label: str = "custom"
    params: object = None
    channel_labels: tuple = ()
    extended_channels: tuple = field(default=None, repr=False)

    @property
    def K(self):
        return len(self.channels)

    @property
    def maxdeg(self):
        """Largest ladder bandwidth among H and the channels (at least 1)."""
        ops = (self.H,) + tuple(self.channels)
        return max([1] + [hilbert.bandwidth(op) for op in ops])

    @property
    def interior(self):
        """Highest level whose images stay inside the truncated space."""
        return self.dim - 1 - self.maxdeg

    def rebuild_drift(self):
        return effective_drift(self.H, self.channels)


def effective_drift(H, channels):
    G = (-1j) * sp.csr_matrix(H, dtype=complex)
    for L in channels:
        G = G - 0.5 * (hilbert.adjoint(L) @ L)
    return sp.csr_matrix(G)


def build_model(dim, H, channels, label="custom", params=None, channel_labels=None,
                extended_channels=None):
    """Assemble a :class:`ModelSpec` and derive its effective drift ``G``."""
    H = sp.csr_matrix(H, dtype=complex)
    channels = tuple(sp.csr_matrix(L, dtype=complex) for L in channels)
    for op in (H,) + channels:
        if op.shape != (dim, dim):
            raise DimensionMismatchError(f"operator of shape {op.shape}, expected {(dim, dim)}")
    if not hilbert.is_hermitian(H):
        raise NotHermitianError("Hamiltonian is not Hermitian")
    if channel_labels is None:
        channel_labels = tuple(f"L{k + 1}" for k in range(len(channels)))
    if extended_channels is not None:
        extended_channels = tuple(sp.csr_matrix(L, dtype=complex) for L in extended_channels)
        if len(extended_channels) != len(channels):
            raise DimensionMismatchError("extended_channels must match channels one to one")
    return ModelSpec(
        dim=dim,
        H=H,
        channels=channels,
        G=effective_drift(H, channels),
        label=label,
        params=params,
        channel_labels=tuple(channel_labels),
        extended_channels=extended_channels,
    )


def conservativity_residual(m, x, untruncated=True):
    """``2 Re<x, Gx> + sum_k ||L_k x||²``.

    Vanishes for states supported on interior levels.  With
    ``untruncated`` (the default) and a model carrying extended channels,
    ``||L_k x||`` is taken before truncation, so the value at the top levels
    is the norm that truncation removes.  With ``untruncated=False`` the
    truncated channels are used; the truncated system then conserves the
    norm and the residual is zero for every state up to rounding.
    """
    x = hilbert.as_state(x, m.dim)
    r = 2.0 * np.real(np.vdot(x, m.G @ x))
    if m.extended_channels is None or not untruncated:
        for L in m.channels:
            r += np.linalg.norm(L @ x) ** 2
    else:
        n_ext = m.extended_channels[0].shape[0]
        xe = np.zeros(n_ext, dtype=complex)
        xe[: m.dim] = x
        for L in m.extended_channels:
            r += np.linalg.norm(L @ xe) ** 2
    return float(r)


# --- presets -----------------------------------------------------------------

_OSC_CHANNELS = ("a", "a†", "N", "a²", "(a†)²", "N²")


def _coef_text(c):
    c = complex(c)
    return f"{c.real:g}" if c.imag == 0 else f"{c:g}"


def _oscillator_ops(params, dim):
    a, ad, N = hilbert.ladder_ops(dim)
    H = 1j * params.beta1 * (ad - a) + params.beta2 * N + params.beta3 * (ad @ ad @ a @ a)
    ops = (a, ad, N, a @ a, ad @ ad, N @ N)
    channels, labels = [], []
    for coef, op, name in zip(params.alphas, ops, _OSC_CHANNELS):
        if coef != 0:
            channels.append(coef * op)
            labels.append(f"{_coef_text(coef)}·{name}")
    return H, channels, labels


def oscillator(params, dim, label="oscillator"):
    """Forced and damped oscillator; channels with zero coefficient are dropped."""
    H, channels, labels = _oscillator_ops(params, dim)
    _, ext, _ = _oscillator_ops(params, dim + 2)
    return build_model(dim, H, channels, label=label, params=params,
                       channel_labels=labels, extended_channels=ext)


def damped(omega, A, nu, dim):
    return oscillator(OscillatorParams.damped(omega, A, nu), dim, label="damped")


def two_photon(beta3, alpha4, alpha5, dim):
    return oscillator(OscillatorParams.two_photon(beta3, alpha4, alpha5), dim, label="two_photon")


def _measurement_ops(params, dim):
    Q, P = hilbert.quadratures(dim)
    H = params.h_alpha * (P @ P) + params.h_beta * (Q @ Q)
    # Hermitize against rounding in the quadrature products.
    H = 0.5 * (H + hilbert.adjoint(H))
    return H, [(params.kappa / params.sigma) * Q, (params.kappa * params.sigma) * P]


def measurement(kappa, sigma, dim, h_alpha=1.0, h_beta=0.0):
    params = MeasurementParams(kappa, sigma, h_alpha, h_beta)
    H, channels = _measurement_ops(params, dim)
    _, ext = _measurement_ops(params, dim + 2)
    return build_model(dim, H, channels, label="measurement", params=params,
                       channel_labels=("(κ/σ)Q", "κσP"), extended_channels=ext)


PRESETS = ("oscillator", "damped", "two_photon", "measurement")


def preset(name, dim, params=None, **kwargs):
    """Build a named preset.

    ``params`` may be an :class:`OscillatorParams` (for ``oscillator``), a
    :class:`MeasurementParams` (for ``measurement``) or a mapping of keyword
    arguments; extra keyword arguments are merged into it.

    >>> m = preset("damped", 20, omega=1.0, A=1.0, nu=0.5)
    >>> m.K
    2
    """
    if params is not None and not isinstance(params, dict):
        if name == "oscillator" and isinstance(params, OscillatorParams):
            return oscillator(params, dim)
        if name == "measurement" and isinstance(params, MeasurementParams):
            return measurement(params.kappa, params.sigma, dim, params.h_alpha, params.h_beta)
        raise ParameterDomainError(f"params of type {type(params).__name__} do not fit {name!r}")
    kw = dict(params or {})
    kw.update(kwargs)
    try:
        if name == "oscillator":
            return oscillator(OscillatorParams(**kw), dim)
        if name == "damped":
            return damped(kw.pop("omega"), kw.pop("A"), kw.pop("nu"), dim, **kw)
        if name == "two_photon":
            return two_photon(kw.pop("beta3", 0.0), kw.pop("alpha4"), kw.pop("alpha5", 0.0), dim, **kw)
        if name == "measurement":
            return measurement(kw.pop("kappa"), kw.pop("sigma"), dim, **kw)
    except (KeyError, TypeError) as exc:
        raise ParameterDomainError(f"bad parameters for preset {name!r}: {exc}") from None
    raise UnknownModelError(f"unknown preset {name!r}; choose one of {', '.join(PRESETS)}")


_REAL_KEYS = {"omega", "A", "nu", "beta1", "beta2", "beta3", "kappa", "sigma", "h_alpha", "h_beta"}


def model_from_mapping(mapping):
    """Build a preset from string key/value pairs (``name``, ``dim`` and parameters)."""
    kw = {}
    name = None
    dim = None
    for key, raw in mapping.items():
        if key == "name":
            name = raw.strip()
        elif key == "dim":
            dim = int(raw)
        elif key in _REAL_KEYS:
            kw[key] = float(raw)
        elif key.startswith("alpha"):
            c = complex(raw.replace(" ", ""))
            kw[key] = c.real if c.imag == 0 else c
    if name is None or dim is None:
        raise ParameterDomainError("model description needs 'name' and 'dim'")
    return preset(name, dim, **kw)
