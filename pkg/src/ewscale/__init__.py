"""Early-warning-sign variance scaling under time-correlated noise.

Simulates fast-slow bifurcation models driven by white, coloured
(Ornstein-Uhlenbeck), fractional-Brownian, or Rosenblatt forcing and
verifies the variance scaling laws near the bifurcation, both by
closed-form theory and by Monte Carlo ensembles with log-log exponent
fits. The coloured case saturates at sigma^2 tau / 2 instead of diverging
(the warning sign goes "colour blind"); the long-memory cases diverge
with H-dependent exponents.
"""

from .analysis import (MisclassificationReport, ScalingFit, TheoryComparison,
                       Verdict, compare_to_theory, fit_power_law, loglog_fit,
                       misclassification_demo)
from .models import (Bifurcation, BifurcationPoint, ModelKind, ModelSpec,
                     attracting_branch, bifurcation_point, drift,
                     fold_point_stommel, linearization, manifold_table,
                     normal_form_linearization)
from .noise import (FgnSampler, NoiseKind, NoisePath, NoiseSpec, RngStream,
                    RosenblattSampler, TruncationConfig, generate_brownian,
                    generate_fbm, generate_ou, generate_rosenblatt,
                    write_path_csv)
from .simulate import (EnsembleStats, PathRecord, SimConfig, detect_jump,
                       euler_maruyama, integrate_path, run_ensemble)
from .theory import (TheoryPrediction, c_alpha, scaling_exponent,
                     solve_lyapunov_2x2, solve_lyapunov_ode, theory_prediction,
                     v_infinity_coloured, v_infinity_volterra, v_infinity_white,
                     volterra_limit_integral)

__version__ = "0.1.0"

__all__ = [
    "Bifurcation", "BifurcationPoint", "EnsembleStats", "FgnSampler",
    "MisclassificationReport", "ModelKind", "ModelSpec", "NoiseKind",
    "NoisePath", "NoiseSpec", "PathRecord", "RngStream", "RosenblattSampler",
    "ScalingFit", "SimConfig", "TheoryComparison", "TheoryPrediction",
    "TruncationConfig", "Verdict", "attracting_branch", "bifurcation_point",
    "c_alpha", "compare_to_theory", "detect_jump", "drift", "euler_maruyama",
    "fit_power_law", "fold_point_stommel", "generate_brownian", "generate_fbm",
    "generate_ou", "generate_rosenblatt", "integrate_path", "linearization",
    "loglog_fit", "manifold_table", "misclassification_demo",
    "normal_form_linearization", "run_ensemble", "scaling_exponent",
    "solve_lyapunov_2x2", "solve_lyapunov_ode", "theory_prediction",
    "v_infinity_coloured", "v_infinity_volterra", "v_infinity_white",
    "volterra_limit_integral", "write_path_csv",
]
