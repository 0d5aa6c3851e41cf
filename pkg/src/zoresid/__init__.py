"""Zeroth-order optimization with one-point residual feedback.

Library layout:
  streams      seeded forkable RNG streams and direction samplers
  problems     benchmark objectives with certified constants
  estimators   the five gradient estimators
  smoothing    uniform-ball smoothed surrogate and its checks
  optimizer    descent loop plus per-setting (eta, alpha, T) schedules
  diagnostics  empirical verification of the variance bounds
  sweeps       sample-complexity scaling experiments
  figures      matplotlib rendering of curves and sweeps
  cli          command-line entry point (`zoresid`)
"""

from .diagnostics import (
    C0Estimate,
    cache_c0,
    check_pl_inequality,
    check_proposition1,
    check_variance_nonsmooth,
    check_variance_smooth,
    conditional_second_moment,
    estimate_c0,
    get_cached_c0,
    value_gradient_variance_exact,
    variance_comparison_table,
)
from .estimators import (
    ESTIMATOR_IDS,
    EstimatorState,
    GradientEstimate,
    bandit_one_point,
    residual_step,
    spsa1,
    two_point,
)
from .optimizer import (
    SETTINGS,
    ConfigurationError,
    RunRecord,
    Schedule,
    make_schedule,
    run_deterministic,
    run_stochastic,
    weighted_average,
)
from .problems import (
    PROBLEM_IDS,
    LeastSquaresData,
    Problem,
    ProblemConstants,
    add_value_noise,
    estimate_sigma,
    make_constant_problem,
    make_least_squares,
    make_logsumexp_problem,
    make_nonconvex_problem,
    make_norm_problem,
    make_problem,
    make_quadratic_problem,
)
from .reports import BoundCheckReport
from .smoothing import (
    SmoothedSurrogate,
    check_inherited_properties,
    check_smoothing_bounds,
    eval_falpha_mc,
    eval_grad_falpha_mc,
    falpha_exact,
    gaussian_gradient_gap,
    grad_falpha_exact,
    has_exact_falpha,
)
from .streams import (
    Distribution,
    RandomStream,
    sample_ball,
    sample_ball_batch,
    sample_gaussian,
    sample_gaussian_batch,
    sample_rademacher,
    sample_rademacher_batch,
    sample_sphere,
    sample_sphere_batch,
)
from .sweeps import (
    SweepCell,
    dimension_sweep,
    find_T_eps,
    fit_loglog_slope,
    fit_semilog,
    precision_sweep,
)

__version__ = "0.1.0"
