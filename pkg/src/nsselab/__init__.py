"""Nonlinear stochastic Schrödinger equations on truncated Fock spaces.

Simulation of the linear and norm-preserving equations, the change of
measure between them, a master-equation reference, invariant-measure
diagnostics and the regularity criteria of the forced and damped
oscillator.
"""

from .criteria import (
    CriteriaReport,
    criteria_report,
    drift_form_diagonal,
    estimate_h13_constants,
    estimate_lyapunov_constants,
    leading_slope,
    lyapunov_form,
    theorem7_predicate,
    theorem8_predicate,
)
from .errors import *  # noqa: F401,F403
from .girsanov import (
    compare_estimators,
    normalize_and_weight,
    observable,
    shifted_noise,
    weight_report,
    weighted_expectation,
)
from .hilbert import (
    basis,
    identity,
    ladder_ops,
    number_power,
    quadratures,
    random_state,
)
from .lindblad import (
    compare_mc_density,
    evolve_density,
    liouvillian,
    lindblad_rhs,
    mc_density,
    stationary_kernel,
    steady_state,
    trace_distance,
)
from .model import (
    MeasurementParams,
    ModelSpec,
    OscillatorParams,
    build_model,
    conservativity_residual,
    damped,
    measurement,
    oscillator,
    preset,
    two_photon,
)
from .nsse import diffusion_nonlinear, drift_nonlinear, moment_bound_check, simulate_nsse
from .sse_linear import second_moment_report, simulate_linear, step_linear
from .stationary import (
    empirical_measure_summary,
    lyapunov_diagnostic,
    time_average,
    windows_agree,
)
from .trajectory import Ensemble, SolverConfig, Trajectory, brownian_increments, default_dt

__version__ = "0.1.0"
