"""Uniqueness of ground states for a quasi-linear Schroedinger equation via its dual transform."""

from .coefficient import (CoefficientSpec, Constant, External, HypothesisReport, SmoothBump,
                          check_hypotheses, eval_a)
from .criterion import (CriterionReport, ProblemParams, Thresholds, eval_aux, eval_h,
                        find_thresholds, k_direct, k_numerator, kh, s_zero, verify_criterion)
from .dual import DualTransform, asymptotic_diagnostics, build_dual, eval_g, g_inverse
from .numerics import IntegrationError, find_root_bracketed, fd_derivative, integrate_ode
from .shooting import (RadialProfile, ShootingOutcome, classify_shot, decay_check, energy,
                       find_ground_state, integrate_radial, pullback_and_residual,
                       radial_energy, uniqueness_scan)

__version__ = "0.1.0"
