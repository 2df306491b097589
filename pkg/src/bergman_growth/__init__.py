"""Numerical diagonal Bergman kernel of ``{Im w > f(|z|)}`` for flat radial ``f``.

The kernel is computed from weighted moments of ``f`` and compared with the
envelope ``t^-2 [f^-1(t)]^-2`` along ladders ``w = it``, ``t -> 0``.
"""

from .errors import (BergmanError, ConfigError, DomainError, InvariantViolation, NumericError,
                     PoleError, RangeError, UnconvergedError)
from .geometry import (ApproachRegion, Polydisc, PsiAudit, Thresholds, audit_psi, compute_H,
                       in_approach_region, in_domain, log_envelope, log_upper_bound_env,
                       polydisc_at, psi_bounds, psi_map, sample_domain, upper_bound_env)
from .kernel import (PHI_CONSTANT, KernelEvaluation, MomentTable, PhiNorm, k_tau_diag, kernel_diag,
                     moment, moment_table, phi_norm_sq)
from .profile import (DerivedConstants, FlatnessWitness, RadialProfile, StarParams,
                      check_conditions, check_doubling, check_ratio_fact, custom_table,
                      derive_constants, double_exp, exp_beta, g_f, inv_f, lambda_f,
                      lambda_witness, power_type, table_witness)
from .sweep import SweepReport, SweepSpec, VerdictPolicy, ZChoice, run_sweep

__version__ = "0.1.0"
