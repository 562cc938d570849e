"""Two-photon absorption and emission: stationarity evidence from windows.

With alpha4 > alpha5 the averages of <N> and ||N^4 X||² settle; the
master equation kernel shows the parity sectors.
"""

import numpy as np

from nsselab import SolverConfig, basis, number_power, observable, simulate_nsse, two_photon
from nsselab.lindblad import stationary_kernel
from nsselab.stationary import empirical_measure_summary, windows_agree

dim = 20
m = two_photon(beta3=0.0, alpha4=1.0, alpha5=0.3, dim=dim)
print("kernel dimension with alpha5 = 0.3:", len(stationary_kernel(m)))
print("kernel dimension with alpha5 = 0:  ", len(stationary_kernel(two_photon(0.0, 1.0, 0.0, dim))))

ens = simulate_nsse(m, basis(dim, 0), SolverConfig(dt=1e-3, t_final=50.0, n_traj=16, seed=5,
                                                    record_stride=10, store_noise=False))
N = number_power(dim, 1)
ok, rows = windows_agree(ens, observable(N), [(20, 35), (35, 50)])
for a, b, mean, se in rows:
    print(f"<N> over [{a}, {b}]: {mean:.4f} +- {se:.4f}")
print("windows agree:", ok)

summary = empirical_measure_summary(ens, {"N": observable(N)}, burn_in=20.0, D=number_power(dim, 4))
for name, mean, se, wins in summary.rows:
    print(f"{name:<7} {mean:10.4f} +- {se:8.4f}   windows {np.round(wins, 3)}")
