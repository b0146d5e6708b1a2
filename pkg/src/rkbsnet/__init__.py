"""Feature-space geometry of gradient steps on scaled networks.

The package follows one pipeline: a scaled network (:mod:`~rkbsnet.network`)
takes a gradient step; the step's effect on the function is an exact inner
product between input-side and step-side feature maps
(:mod:`~rkbsnet.features`); those features induce kernels and norms with
closed-form recursions (:mod:`~rkbsnet.geometry`); canonical scale factors
turn the step-side norm into an exact regulariser (:mod:`~rkbsnet.scaling`);
and the resulting caps yield sample-complexity bounds
(:mod:`~rkbsnet.complexity`).  Power-series machinery shared by all of it
lives in :mod:`~rkbsnet.series`, and :mod:`~rkbsnet.cli` exposes the
analyses as a command line.
"""

from .complexity import (MeasuredDiagnostics, TrainingBound, TwoLayerReport,
                         rademacher_asymptote, rademacher_step_bound,
                         training_rademacher_bound, two_layer_tanh_example)
from .errors import (BudgetError, CapError, ConfigError, DomainError,
                     FeasibilityError, RkbsnetError)
from .features import (ScalingConfig, TruncatedFeature, bilinear_delta,
                       feature_inner, flat_dims, flatten_feature,
                       phi_features, psi_features, validity_margin)
from .geometry import (KernelGradients, banach_kernel, kernel_grads,
                       kernel_ww, kernel_xx, phi_norm_profile, phi_norm_sq,
                       phi_norm_sq_grad_x, psi_norm_profile, psi_norm_sq,
                       psi_norm_sq_grad)
from .network import (BackpropTrace, Forward, LossSpec, NetworkSpec,
                      StepMagnitudes, WeightStep, Weights, apply_step,
                      backprop_step, cascade_width, empirical_risk, forward,
                      init_lecun, loss_grad, loss_value, network_delta,
                      preact_shifts, s_squared, sample_inputs,
                      step_magnitudes)
from .scaling import (AlphaSolveResult, CanonicalReport, CanonicalScaling,
                      CapCheck, ConditionRecord, ConvergenceProfile,
                      CorollaryConstants, JointReport, canonical_construct,
                      check_phi_cap, check_psi_cap, corollary_constants,
                      coupled_synthetic_step, joint_convergence,
                      solve_alpha_for_chi, verify_canonical)
from .series import (TANH_ROC, SeriesCoeffs, TruncationPolicy,
                     act_deriv_coeffs, bisect_root, kappa, kappa_inv, sigma,
                     sigma_bar, sigma_bar_inv, sigma_dz, sigma_dzeta,
                     tanh_coeff_closed_form, theta, theta_inv, theta_prime,
                     theta_prime_inv)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    # errors
    "RkbsnetError", "DomainError", "BudgetError", "CapError",
    "FeasibilityError", "ConfigError",
    # series
    "TANH_ROC", "TruncationPolicy", "SeriesCoeffs", "act_deriv_coeffs",
    "tanh_coeff_closed_form", "theta", "theta_inv", "theta_prime",
    "theta_prime_inv", "kappa", "kappa_inv", "sigma", "sigma_dzeta",
    "sigma_dz", "sigma_bar", "sigma_bar_inv", "bisect_root",
    # network
    "NetworkSpec", "Weights", "WeightStep", "Forward", "LossSpec",
    "BackpropTrace", "StepMagnitudes", "init_lecun", "sample_inputs",
    "forward", "apply_step", "network_delta", "preact_shifts", "loss_value",
    "loss_grad", "empirical_risk", "cascade_width", "backprop_step",
    "step_magnitudes", "s_squared",
    # features
    "ScalingConfig", "TruncatedFeature", "phi_features", "psi_features",
    "feature_inner", "bilinear_delta", "flat_dims", "flatten_feature",
    "validity_margin",
    # geometry
    "kernel_xx", "kernel_ww", "banach_kernel", "phi_norm_sq",
    "phi_norm_profile", "psi_norm_sq", "psi_norm_profile",
    "psi_norm_sq_grad", "phi_norm_sq_grad_x", "kernel_grads",
    "KernelGradients",
    # scaling
    "CorollaryConstants", "CanonicalScaling", "CanonicalReport",
    "ConditionRecord", "CapCheck", "ConvergenceProfile", "JointReport",
    "AlphaSolveResult", "corollary_constants", "canonical_construct",
    "verify_canonical", "check_phi_cap", "check_psi_cap",
    "joint_convergence", "solve_alpha_for_chi", "coupled_synthetic_step",
    # complexity
    "TrainingBound", "MeasuredDiagnostics", "TwoLayerReport",
    "rademacher_step_bound", "rademacher_asymptote",
    "training_rademacher_bound", "two_layer_tanh_example",
]
