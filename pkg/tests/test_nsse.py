import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nsselab import hilbert, lindblad, model
from nsselab.criteria import estimate_h13_constants
from nsselab.nsse import diffusion_nonlinear, drift_nonlinear, moment_bound_check, simulate_nsse
from nsselab.oracles import dense_field_oracle
from nsselab.trajectory import SolverConfig

from conftest import free_model


def _number_channel(dim, H=None):
    N = hilbert.ladder_ops(dim)[2]
    return model.build_model(dim, hilbert.zero(dim) if H is None else H, [N])


def test_drift_without_channels(rng):
    m = free_model(8)
    y = hilbert.random_state(8, rng)
    np.testing.assert_allclose(drift_nonlinear(y, m), -1j * (m.H @ y), atol=1e-15)


@pytest.mark.parametrize("j", [0, 1, 4, 7])
def test_drift_number_channel_eigenstate(j):
    m = _number_channel(8, H=hilbert.ladder_ops(8)[2])
    e = hilbert.basis(8, j)
    np.testing.assert_allclose(drift_nonlinear(e, m), m.G @ e + 0.5 * j**2 * e, atol=1e-12)


def test_drift_and_diffusion_against_oracle():
    m = model.damped(1.0, 1.0, 0.5, 12)
    y = (hilbert.basis(12, 0) + hilbert.basis(12, 1)) / np.sqrt(2)
    d, g = dense_field_oracle(y, m)
    np.testing.assert_allclose(drift_nonlinear(y, m), d, atol=1e-13)
    for k in range(m.K):
        np.testing.assert_allclose(diffusion_nonlinear(y, m, k), g[k], atol=1e-13)


def test_diffusion_vanishes():
    m = _number_channel(6)
    for j in range(6):
        assert np.all(diffusion_nonlinear(hilbert.basis(6, j), m, 0) == 0)
    a = hilbert.ladder_ops(6)[0]
    ma = model.build_model(6, hilbert.zero(6), [a])
    assert np.all(diffusion_nonlinear(hilbert.basis(6, 0), ma, 0) == 0)


def test_diffusion_annihilation_superposition():
    a = hilbert.ladder_ops(6)[0]
    m = model.build_model(6, hilbert.zero(6), [a])
    y = (hilbert.basis(6, 0) + hilbert.basis(6, 1)) / np.sqrt(2)
    # a y = e_0/√2 and Re<y, a y> = 1/2.
    expected = hilbert.basis(6, 0) / np.sqrt(2) - 0.5 * y
    np.testing.assert_allclose(diffusion_nonlinear(y, m, 0), expected, atol=1e-15)


def test_channel_index_range(ex3):
    with pytest.raises(IndexError):
        diffusion_nonlinear(hilbert.basis(20, 0), ex3, 2)
    with pytest.raises(IndexError):
        diffusion_nonlinear(hilbert.basis(20, 0), ex3, -1)


def test_field_dimension_mismatch(ex3):
    with pytest.raises(ValueError):
        drift_nonlinear(np.ones(3), ex3)


def test_hamiltonian_eigenstate_stays():
    m = free_model(6)
    ens = simulate_nsse(m, hilbert.basis(6, 2), SolverConfig(dt=1e-3, t_final=1.0, n_traj=2))
    np.testing.assert_allclose(np.abs(ens.states[:, :, 2]), 1.0, atol=1e-12)


@pytest.mark.parametrize("j", [0, 3, 5])
def test_number_channel_eigenstate_stays(j):
    m = _number_channel(6)
    ens = simulate_nsse(m, hilbert.basis(6, j), SolverConfig(dt=1e-3, t_final=0.5, n_traj=3, seed=1))
    np.testing.assert_allclose(np.abs(ens.states[:, :, j]), 1.0, atol=1e-12)


def test_norm_preserved_exactly(ex3, rng):
    x0 = hilbert.random_state(20, rng, support=6)
    ens = simulate_nsse(ex3, x0, SolverConfig(dt=1e-3, t_final=1.0, n_traj=20, seed=2))
    assert np.max(np.abs(np.linalg.norm(ens.states, axis=2) - 1.0)) <= 1e-12
    np.testing.assert_array_equal(ens.weight, 1.0)


def test_requires_normalized_start(ex3):
    with pytest.raises(ValueError):
        simulate_nsse(ex3, 2 * hilbert.basis(20, 0))


def test_without_renormalization_norm_drifts(ex3):
    cfg = SolverConfig(dt=2e-3, t_final=1.0, n_traj=50, seed=3, renormalize=False)
    ens = simulate_nsse(ex3, hilbert.basis(20, 0), cfg)
    dev = np.abs(np.linalg.norm(ens.states[:, -1], axis=1) - 1)
    assert dev.max() > 1e-6
    np.testing.assert_allclose(ens.sq_norm[:, -1], np.linalg.norm(ens.states[:, -1], axis=1) ** 2)


def test_mean_number_matches_master_equation(ex3):
    cfg = SolverConfig(dt=1e-3, t_final=1.0, n_traj=1000, seed=8, record_stride=100)
    ens = simulate_nsse(ex3, hilbert.basis(20, 0), cfg)
    N = hilbert.ladder_ops(20)[2]
    vals = np.real(np.einsum("ni,ij,nj->n", ens.states[:, -1].conj(), N.toarray(), ens.states[:, -1]))
    rho = lindblad.evolve_density(lindblad.pure_density(hilbert.basis(20, 0)), ex3, 1.0)
    ref = np.trace(N.toarray() @ rho).real
    assert abs(vals.mean() - ref) <= 3 * vals.std(ddof=1) / np.sqrt(vals.size) + 5 * cfg.dt


def test_moment_bound_trivial():
    m = free_model(6)
    N = hilbert.ladder_ops(6)[2]
    ens = simulate_nsse(m, hilbert.basis(6, 2), SolverConfig(dt=1e-2, t_final=1.0, n_traj=3))
    rep = moment_bound_check(ens, N, 0.5, 1.0)
    np.testing.assert_allclose(rep.lhs, 4.0, atol=1e-12)
    assert np.all(rep.rhs >= 4.0) and rep.n_flags == 0


def test_moment_bound_thermal_and_negative_control(ex3):
    N = hilbert.ladder_ops(20)[2]
    alpha, beta = estimate_h13_constants(N, ex3)
    ens = simulate_nsse(ex3, hilbert.basis(20, 0),
                        SolverConfig(dt=1e-3, t_final=1.0, n_traj=400, seed=4, record_stride=50))
    assert moment_bound_check(ens, N, alpha, beta).n_flags == 0
    assert moment_bound_check(ens, N, 0.0, 0.0).n_flags > 0


def test_moment_bound_rejects_negative_constants(ex3):
    ens = simulate_nsse(ex3, hilbert.basis(20, 0), SolverConfig(dt=1e-3, t_final=0.01))
    with pytest.raises(ValueError):
        moment_bound_check(ens, hilbert.ladder_ops(20)[2], -1.0, 0.0)


def _models():
    return [model.damped(1.0, 1.0, 0.5, 16), model.two_photon(0.2, 1.0, 0.5, 16),
            model.measurement(1.0, 0.8, 16),
            model.oscillator(model.OscillatorParams(beta1=0.4, alpha1=1.0, alpha3=0.3j,
                                                    alpha6=0.1), 16)]


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 16))
def test_ito_norm_balance(seed, support):
    rng = np.random.default_rng(seed)
    for m in _models():
        y = hilbert.random_state(m.dim, rng, support=support)
        drift = drift_nonlinear(y, m)
        lhs = 2 * np.vdot(y, drift).real
        lhs += sum(np.linalg.norm(diffusion_nonlinear(y, m, k)) ** 2 for k in range(m.K))
        scale = max(1.0, *(np.linalg.norm(L @ y) ** 2 for L in m.channels))
        res = model.conservativity_residual(m, y, untruncated=False)
        assert abs(lhs - res) <= 1e-11 * scale
        if support <= m.interior + 1:
            assert abs(lhs - model.conservativity_residual(m, y)) <= 1e-11 * scale
