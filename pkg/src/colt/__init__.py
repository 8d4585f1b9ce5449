"""Constrained online learning toolkit.

Online optimization with long-term budget constraints for approximately
convex costs: geometry primitives, approximate-convexity verifiers, instance
generators, full-information and bandit learners, offline benchmarks, and an
experiment harness with CSV/figure reporting.
"""

from .approx_convex import (
    Direction,
    SubgradientOracle,
    ViolationReport,
    biconjugate_grid,
    check_approx_jensen,
    check_linearization,
    check_sandwich,
    combine,
    estimate_norm_bound,
    linearization_margin,
    subgrad_from_witness,
)
from .bandit import (
    BanditState,
    bandit_bounds,
    bandit_params,
    exploration_rate,
    ftrl_update,
    ips_estimate,
    learning_rate,
    mixed_sampling,
    run_bandit,
    stability_term,
    surrogate_loss,
)
from .full_info import (
    Exponential,
    FullInfoState,
    PowerLaw,
    adagrad_step,
    run_full_info,
    run_olo,
    surrogate_subgrad,
    schedule_guarantees,
    penalty_schedule,
)
from .geometry import Box, DecisionSet, Interval, Simplex, diameter, grid_points, project
from .harness import (
    ConfigError,
    ExperimentConfig,
    fit_loglog_slope,
    lowerbound_experiment,
    make_config,
    run_experiment,
    sweep_scaling,
)
from .instances import (
    InstanceTrace,
    PhaseRetrievalProblem,
    RoundData,
    gen_bandit,
    gen_bwk_lowerbound,
    gen_linear,
    gen_phase_retrieval,
    gen_vertex_cover,
    load_trace,
    non_oblivious_grad,
    operator_norm,
    save_trace,
)
from .oracle import (
    BenchmarkResult,
    InfeasibleInstanceError,
    UnsupportedBenchmarkError,
    best_fixed_feasible,
    competitive_kappa,
    cumulative_consumption,
    regret_alpha,
)
from .reports import RunReport, read_report_csv, write_report_csv

__version__ = "0.1.0"
