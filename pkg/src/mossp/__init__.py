"""Momentum-based single-loop stochastic penalty solvers for nonconvex
equality-constrained problems with difference-of-convex regularization."""

from .baselines import BaselineConfig, BaselineResult, run_salm, run_spdc
from .errors import DivergedError, ParseError, ScheduleValidationError
from .estimators import (
    GradientOracle,
    MomentumState,
    deterministic_oracle,
    error_diagnostic,
    full_estimate,
    polyak_step,
    storm_init,
    storm_step,
)
from .penalty import (
    ConstraintMap,
    PenaltyConstants,
    lipschitz_bound,
    penalty_gradient,
    penalty_value,
    potential,
)
from .problems import (
    Dataset,
    ProblemInstance,
    QuadEqInstance,
    estimate_constants,
    gen_quadeq,
    logistic_problem,
    quadeq_constraints,
    quadeq_problem,
    sphere_gradc_c,
    synthetic_logistic_dataset,
)
from .prox import (
    MoreauPoint,
    ProxOracle,
    dme_certificate,
    dme_gradient,
    l1_oracle,
    l2_oracle,
    moreau_eval,
    prox_l2_norm,
    soft_threshold,
    zero_oracle,
)
from .solver import (
    IterationRecord,
    KKTCertificate,
    RunResult,
    ScheduleParams,
    SolverConfig,
    SolverState,
    kkt_measures,
    make_schedule,
    residual_u,
    run,
    x_update,
    z_update,
)

__version__ = "0.1.0"
