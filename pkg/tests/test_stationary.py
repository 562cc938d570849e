import numpy as np
import pytest

from nsselab import hilbert, lindblad, model
from nsselab.criteria import estimate_lyapunov_constants
from nsselab.errors import GridMismatchError
from nsselab.model import OscillatorParams
from nsselab.nsse import simulate_nsse
from nsselab.stationary import (
    batch_means,
    default_burn_in,
    empirical_measure_summary,
    lyapunov_diagnostic,
    time_average,
    window_average,
    windows_agree,
)
from nsselab.trajectory import SolverConfig

from conftest import free_model


@pytest.fixture(scope="module")
def thermal_run():
    m = model.damped(1.0, 1.0, 0.5, 20)
    cfg = SolverConfig(dt=2e-3, t_final=50.0, n_traj=16, seed=101, record_stride=5, store_noise=False)
    return m, simulate_nsse(m, hilbert.basis(20, 0), cfg)


def test_constant_trajectory_average_exact():
    m = free_model(5, hilbert.zero(5))
    # Exactly unit norm in floating point, so renormalization is a no-op.
    x = np.array([0, 0.5, 0.5, 0.5, 0.5], dtype=complex)
    ens = simulate_nsse(m, x, SolverConfig(dt=0.01, t_final=2.0, n_traj=2))
    N = hilbert.ladder_ops(5)[2]
    val = float(np.vdot(x, N @ x).real)
    ta = time_average(ens, N, 0.5)
    assert ta.value == val
    assert np.all(ta.running == val)
    assert len(ta.checkpoints) >= 8 and ta.n_batches >= 16


@pytest.mark.parametrize("c", [0.1, 1 / 3, 7.25, -2.0])
def test_constant_function_exact(thermal_run, c):
    _, ens = thermal_run
    ta = time_average(ens, lambda s: np.full(len(s), c), 10.0)
    assert ta.value == c


def test_burn_in_error(thermal_run):
    _, ens = thermal_run
    with pytest.raises(ValueError):
        time_average(ens, hilbert.identity(20), 50.0)


def test_thermal_time_average(thermal_run):
    m, ens = thermal_run
    N = hilbert.ladder_ops(20)[2]
    ta = time_average(ens, N, 10.0)
    ref = np.trace(N.toarray() @ lindblad.steady_state(m)).real
    assert abs(ta.value - ref) <= 3 * ta.stderr
    assert ta.running[-1] == pytest.approx(ta.value)


def test_consecutive_windows_agree(thermal_run):
    _, ens = thermal_run
    ok, rows = windows_agree(ens, hilbert.ladder_ops(20)[2], [(10, 30), (30, 50)])
    assert ok and len(rows) == 2


def test_window_outside_grid(thermal_run):
    _, ens = thermal_run
    with pytest.raises(GridMismatchError):
        window_average(ens, hilbert.identity(20), 60, 70)


def test_batch_means_iid():
    rng = np.random.default_rng(3)
    v = rng.standard_normal((4, 1600))
    mean, se, bm = batch_means(np.arange(1600.0), v, 16)
    assert bm.shape == (4, 4)
    assert se == pytest.approx(1 / np.sqrt(6400), rel=0.3)
    with pytest.raises(ValueError):
        batch_means(np.arange(10.0), np.ones(10), 16)


def test_lyapunov_trivial():
    m = free_model(6)
    ens = simulate_nsse(m, hilbert.basis(6, 2), SolverConfig(dt=0.01, t_final=1.0, n_traj=3))
    rep = lyapunov_diagnostic(ens, hilbert.zero(6), hilbert.ladder_ops(6)[2], 0.0)
    assert np.all(rep.lhs == 0) and rep.n_flags == 0 and rep.k_hat == 0


def test_lyapunov_thermal(ex3):
    N = hilbert.ladder_ops(20)[2]
    alpha, D, beta = estimate_lyapunov_constants(N, ex3)
    ens = simulate_nsse(ex3, hilbert.basis(20, 0),
                        SolverConfig(dt=1e-3, t_final=1.0, n_traj=300, seed=5, record_stride=20))
    rep = lyapunov_diagnostic(ens, D, N, beta)
    assert rep.n_flags == 0
    assert rep.k_hat > 0


def test_lyapunov_negative_control():
    m = model.oscillator(OscillatorParams(beta1=1.0, beta2=1.0, alpha1=1.0), 20)
    N = hilbert.ladder_ops(20)[2]
    alpha, D, _ = estimate_lyapunov_constants(N, m)
    ens = simulate_nsse(m, hilbert.basis(20, 0),
                        SolverConfig(dt=1e-3, t_final=1.0, n_traj=200, seed=6, record_stride=20))
    assert lyapunov_diagnostic(ens, D, N, 0.0).n_flags > 0


def test_lyapunov_dimension_mismatch(ex3):
    ens = simulate_nsse(ex3, hilbert.basis(20, 0), SolverConfig(dt=1e-3, t_final=0.01))
    with pytest.raises(GridMismatchError):
        lyapunov_diagnostic(ens, hilbert.identity(5), hilbert.identity(20), 0.0)


def test_summary_norm_column(thermal_run):
    m, ens = thermal_run
    s = empirical_measure_summary(ens, {"N": hilbert.ladder_ops(20)[2]}, 10.0)
    name, mean, se, wins = s.column("norm")
    assert abs(mean - 1.0) <= 1e-12 and np.all(np.abs(wins - 1.0) <= 1e-12)
    _, nmean, nse, _ = s.column("N")
    assert abs(nmean - 0.5) <= 3 * nse


def test_summary_includes_lyapunov_column(thermal_run):
    _, ens = thermal_run
    N = hilbert.ladder_ops(20)[2]
    s = empirical_measure_summary(ens, {"N": N}, 10.0, D=N)
    _, mean, _, wins = s.column("|Dx|^2")
    assert mean > 0 and wins.shape == (3,)


def test_summary_empty_battery(thermal_run):
    _, ens = thermal_run
    with pytest.raises(ValueError):
        empirical_measure_summary(ens, {}, 10.0)


def test_default_burn_in():
    assert default_burn_in(model.damped(1.0, 1.0, 0.5, 10)) == pytest.approx(20.0)
    assert default_burn_in(free_model(4)) == 0.0
