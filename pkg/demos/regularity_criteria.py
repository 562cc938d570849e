"""Growth of the drift form for C = N^4 across the alpha4 / alpha5 regimes.

The coefficient c_j of the diagonal form behaves like
4p(|alpha5|² - |alpha4|²) j^(2p+1); its sign separates the regimes.
"""

from nsselab import OscillatorParams, criteria_report

cases = {
    "alpha4 only": OscillatorParams(alpha4=1.0),
    "alpha5 only": OscillatorParams(alpha5=1.0),
    "equal": OscillatorParams(alpha4=1.0, alpha5=1.0),
    "equal + damping": OscillatorParams(alpha1=7.0, alpha4=1.0, alpha5=1.0),
    "thermal": OscillatorParams.damped(1.0, 1.0, 0.5),
}
print(f"{'model':<16} {'c_200/200^9':>12} {'slope':>9} {'alpha':>10} {'beta':>10}  t7     t8")
for name, params in cases.items():
    rep = criteria_report(params, p=4, dim=256)
    a = "-" if rep.alpha is None else f"{rep.alpha:.4g}"
    b = "-" if rep.beta is None else f"{rep.beta:.4g}"
    print(f"{name:<16} {rep.ratio(200):12.4f} {rep.leading_slope:9.4f} {a:>10} {b:>10}  "
          f"{rep.predicates['theorem7']!s:<6} {rep.predicates['theorem8']}")
