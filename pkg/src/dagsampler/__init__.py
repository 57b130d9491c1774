"""Fully-Bayesian structure learning of Gaussian DAGs by MCMC.

Two samplers over the same spike-and-slab linear Gaussian posterior: an
adaptive random-neighborhood informed proposal with reversal blocks and
warm-started tuning, and the classic add-delete-reverse random walk.  Exact
enumeration oracles for up to four nodes support verification.
"""

from .adr import AdrMove, adr_neighborhood, adr_propose
from .data import SyntheticSpec, generate_synthetic, load_csv
from .engine import (
    ChainOutput,
    RunConfig,
    phi_schedule,
    run_chain,
    run_replicated,
    update_eta,
    update_omega,
)
from .evaluate import ExactPosterior, enumerate_exact, pep_mse, pep_to_dag, shd
from .graphs import (
    DagState,
    FlipSet,
    flip,
    hamming,
    incremental_acyclicity,
    is_acyclic,
)
from .informed import (
    NeighborhoodPlan,
    ProposalOutcome,
    TuningState,
    informed_sub_step,
    propose,
    sample_indicator,
    sub_neighborhood,
)
from .scores import (
    DegenerateDataError,
    ModelPrior,
    ScoreCache,
    ScoredDataset,
    delta_log_posterior,
    log_posterior,
    make_state,
    node_log_marginal,
)
from .warmstart import (
    Skeleton,
    WarmStart,
    acyclicity_correct,
    compute_warmstart,
    correlation_skeleton,
    extend_parent_sets,
    full_skeleton,
    unconstrained_marginals,
)

__version__ = "0.1.0"
