"""Two routes to the same law.

The linear equation is integrated, its paths are normalized and weighted
by ||phi_T||², and expectations are compared with direct simulation of the
nonlinear equation.
"""

import numpy as np

from nsselab import (SolverConfig, basis, compare_estimators, damped, ladder_ops, normalize_and_weight,
                     observable, quadratures, simulate_linear, simulate_nsse, weight_report)

dim = 20
m = damped(1.0, 1.0, 0.5, dim)
x0 = basis(dim, 0)
cfg = SolverConfig(dt=1e-3, t_final=1.0, n_traj=2000, record_stride=250, store_noise=False)

direct = simulate_nsse(m, x0, cfg.replace(seed=10))
weighted = normalize_and_weight(simulate_linear(m, x0, cfg.replace(seed=11)))

w, se = weight_report(weighted)
print(f"mean weight {w:.4f} +- {se:.4f} (should be 1)")
print(f"effective sample size {weighted.weight.sum() ** 2 / np.sum(weighted.weight ** 2):.0f} of {len(weighted)}")

N = ladder_ops(dim)[2]
Q, P = quadratures(dim)
obs = {"N": observable(N), "Q": observable(Q), "N2": observable(N @ N)}
table = compare_estimators(direct, weighted, obs, weighted.times[1:], slack=5 * cfg.dt)
print("\nobs  t     direct    weighted  |diff|   tol     ok")
for name, t, a, sa, b, sb, diff, tol, ok in table.rows:
    print(f"{name:<4} {t:4.2f}  {a:8.4f}  {b:8.4f}  {diff:7.4f} {tol:7.4f}  {ok}")
