import numpy as np
import pytest

from nsselab import hilbert, lindblad, model, nsse, oracles
from nsselab.model import OscillatorParams

from conftest import free_model

DIM = 16


def _presets():
    return [
        model.damped(1.0, 1.0, 0.5, DIM),
        model.two_photon(0.3, 1.0, 0.4, DIM),
        model.measurement(1.0, 0.7, DIM, h_alpha=1.0, h_beta=0.5),
        model.oscillator(OscillatorParams(beta1=0.5, beta2=1.0, beta3=0.1, alpha1=1.0, alpha2=0.3,
                                          alpha3=0.2, alpha4=0.5, alpha5=0.2, alpha6=0.1), DIM),
    ]


@pytest.mark.parametrize("m", _presets(), ids=lambda m: m.label)
def test_fields_match_dense_oracle(m):
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(1000):
        y = hilbert.random_state(DIM, rng)
        d, g = oracles.dense_field_oracle(y, m)
        worst = max(worst, np.max(np.abs(nsse.drift_nonlinear(y, m) - d)))
        for k in range(m.K):
            worst = max(worst, np.max(np.abs(nsse.diffusion_nonlinear(y, m, k) - g[k])))
    assert worst <= 1e-13


def test_oracle_no_channels(rng):
    m = free_model(6)
    y = hilbert.random_state(6, rng)
    d, g = oracles.dense_field_oracle(y, m)
    np.testing.assert_array_equal(d, -1j * (m.H.toarray() @ y))
    assert g == []


def test_oracle_number_eigenstate():
    N = hilbert.ladder_ops(6)[2]
    m = model.build_model(6, hilbert.zero(6), [N])
    _, g = oracles.dense_field_oracle(hilbert.basis(6, 3), m)
    assert np.all(g[0] == 0)


def test_dense_ladder_independent_construction():
    a = oracles.dense_ladder(5)
    assert np.array_equal(a, hilbert.ladder_ops(5)[0].toarray())


@pytest.mark.parametrize("m", _presets(), ids=lambda m: m.label)
def test_truncation_defect_matches_residual(m):
    for level in range(DIM):
        r = model.conservativity_residual(m, hilbert.basis(DIM, level))
        assert abs(r - oracles.truncation_defect(m, level)) <= 1e-10


def test_damped_top_level_defect():
    m = model.damped(1.0, 1.0, 0.5, 30)
    assert oracles.truncation_defect(m, 29) == pytest.approx(0.5 * 30, abs=1e-10)


def test_dense_lindblad_rhs(rng):
    for m in _presets():
        x = hilbert.random_state(DIM, rng)
        rho = lindblad.pure_density(x)
        np.testing.assert_allclose(lindblad.lindblad_rhs(rho, m), oracles.dense_lindblad_rhs(rho, m),
                                   atol=1e-11)


def test_dense_cap():
    m = model.damped(1.0, 1.0, 0.5, 65)
    with pytest.raises(ValueError):
        oracles.dense_field_oracle(hilbert.basis(65, 0), m)


def test_richardson_helpers():
    assert oracles.refinement_ratio(4.0, 2.0) == 2.0
    # Exact for an error linear in dt.
    assert oracles.richardson(1.0 + 0.2, 1.0 + 0.1) == pytest.approx(1.0)
    assert oracles.richardson(1.0 + 16 * 1e-4, 1.0 + 1e-4, order=4) == pytest.approx(1.0)
