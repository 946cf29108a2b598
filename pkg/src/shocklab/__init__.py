"""Numerical laboratory for L2 contraction of viscous shocks.

Scalar viscous conservation laws u_t + A(u)_x = nu u_xx with strictly
convex flux: shock-profile computation, shift-coupled evolution,
relative-entropy dissipation diagnostics, a weighted Poincare inequality,
an explicit flux defeating contraction, and vanishing-viscosity rate
experiments.
"""

__version__ = "0.1.0"

from .counterexample import (AdversarialReport, CounterexampleBuild, CounterexampleSpec,
                             adversarial_shift_test, build_counterexample,
                             exact_integrals, initial_dissipation, mollify,
                             piecewise_A, piecewise_psi, smoothed_integrals)
from .diagnostics import (DissipationReport, PerturbationY, change_of_variable,
                          dissipation_x, dissipation_y, evaluate_dissipation,
                          fit_drift_constant, gagliardo_nirenberg_ratio, norms,
                          poincare_check, shift_drift_diagnostic)
from .fluxes import (FluxError, FluxModel, contraction_admissible, flux_from_spec,
                     make_perturbed_quadratic, sine_perturbation, tabulated_perturbation)
from .profiles import (ProfileTailError, ShockProfile, StepProfile, compute_profile,
                       profile_l2_norms, profile_sample, shock_speed, write_profile_csv)
from .solver import (BoundaryLeakError, Field, ShiftTrajectory, SolveOptions,
                     SolverBlowupError, Trajectory, evolve, evolve_shifted,
                     field_from_callable, resample, shift_rhs)
from .experiments import (ExperimentConfig, RateFit, emit_results, make_initial_data,
                          run_contraction, run_counterexample, run_decay,
                          run_inviscid, run_poincare_suite)
