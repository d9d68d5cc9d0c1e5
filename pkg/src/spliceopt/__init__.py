"""Sparsity-constrained optimization via support splicing.

Minimize a differentiable objective under a hard cardinality constraint
by iteratively exchanging low-relevance active coordinates for
high-relevance inactive ones, accepting only strict objective decreases.
Ships with quadratic / logistic / pairwise-network objectives,
hard-thresholding baselines, synthetic data generators, an exhaustive
enumeration oracle, and a CSV benchmark harness.
"""

from .baselines import (
    GRAHTP_STEP_GRID,
    HTConfig,
    grahtp_auto_step,
    grahtp_solve,
    grasp_solve,
    iht_solve,
)
from .bench import (
    ExperimentConfig,
    GridPoint,
    TrialRecord,
    accuracy,
    parse_config,
    run_grid,
    run_trial,
    trial_seed,
)
from .datagen import (
    IsingGenConfig,
    LinearGenConfig,
    ProblemInstance,
    TruthSpec,
    ar1_covariance,
    gen_ising,
    gen_linear,
    gen_logistic,
    ising_exact_distribution,
)
from .io import load_instance, load_matrix, save_instance, save_matrix
from .objectives import (
    IsingObjective,
    LogisticObjective,
    Objective,
    QuadraticObjective,
    pair_index,
    upper_pairs,
)
from .oracle import (
    OracleResult,
    brute_force_best_support,
    fd_gradient_check,
    gap_decay_diagnostics,
    relaxed_sparsity_check,
)
from .splicing import (
    RelevanceScores,
    SpliceConfig,
    exchange_sets,
    hard_threshold,
    init_support,
    relevance_scores,
    scope_solve,
    splice_iteration,
    top_k_indices,
)
from .subsolver import (
    SubsolverConfig,
    solve_quadratic_restricted,
    solve_smooth_restricted,
)
from .types import (
    ConfigError,
    ParamVector,
    SolveResult,
    SolverError,
    SolveTrace,
    SpliceoptError,
    SubsolverError,
    SupportSet,
)

__version__ = "0.1.0"
