"""Damped oscillator in a thermal bath: trajectories against the master equation.

Runs the norm-preserving equation from the vacuum, averages |X_t><X_t|
over the ensemble and compares it with the density matrix from the
master equation, then relaxes to the thermal steady state.
"""

import numpy as np

from nsselab import (SolverConfig, basis, compare_mc_density, damped, evolve_density, ladder_ops,
                     observable, simulate_nsse, steady_state, time_average)
from nsselab.lindblad import pure_density

dim = 20
m = damped(omega=1.0, A=1.0, nu=0.5, dim=dim)
N = ladder_ops(dim)[2]
x0 = basis(dim, 0)

ens = simulate_nsse(m, x0, SolverConfig(dt=1e-3, t_final=1.0, n_traj=1000, seed=1, record_stride=100))
rho = pure_density(x0)
print(" t     <N> MC   <N> ME   trace dist   3 sigma")
t_prev = 0.0
for t in ens.times[1:]:
    rho = evolve_density(rho, m, t - t_prev)
    t_prev = t
    c = compare_mc_density(ens, t, rho)
    n_mc = np.real(np.trace(N.toarray() @ c.rho_mc))
    n_me = np.real(np.trace(N.toarray() @ rho))
    print(f"{t:4.1f}  {n_mc:8.4f} {n_me:8.4f}   {c.trace_distance:8.4f}   {3 * c.sigma:7.4f}")

rho_inf = steady_state(m)
p = np.real(np.diag(rho_inf))
print(f"\nsteady state: <N> = {np.real(np.trace(N.toarray() @ rho_inf)):.6f}, "
      f"p1/p0 = {p[1] / p[0]:.6f}, p2/p1 = {p[2] / p[1]:.6f}")

long = simulate_nsse(m, x0, SolverConfig(dt=2e-3, t_final=40.0, n_traj=16, seed=2, record_stride=5,
                                         store_noise=False))
ta = time_average(long, observable(N), burn_in=10.0)
print(f"time average of <N> over [10, 40]: {ta.value:.4f} +- {ta.stderr:.4f}")
print("running averages:", np.round(ta.running, 4))
