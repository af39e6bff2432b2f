"""Sparse binary fault identification from noisy linear measurements.

Recovers a rare-fault pattern x in {0,1}^n from y = A x + noise by belief
propagation over a continuous relaxation with quantized density messages,
alongside discrete BP baselines, rounding/local-search heuristics, an
exhaustive oracle, the large-system scalar-channel limit, and a Monte-Carlo
benchmark harness.
"""

from .density import (
    DisjointSupportError,
    Grid,
    GridSizingError,
    QuantizedDensity,
    choose_range,
    convolve_all,
    gaussian_on_grid,
    leave_one_out,
    mixture_on_grid,
    product,
    rescale,
    uniform_on_grid,
)
from .discrete import maxprod_solve, sumprod_solve
from .experiments import (
    AggregateMetrics,
    SweepConfig,
    TrialRecord,
    pr_curve,
    run_sweep,
    run_trial,
    score,
    trial_seed,
    write_csv,
)
from .heuristics import local_search, naive_round, threshold_round
from .model import (
    FaultModel,
    GeneratorConfig,
    PairwiseModel,
    bipolar_to_binary,
    load_instance,
    log_loss,
    pairwise_energy,
    sample_instance,
    save_instance,
    to_pairwise,
)
from .oracle import exact_marginals, exhaustive_map
from .solver import (
    BeliefResult,
    FactorGraph,
    MessageState,
    NbpSolver,
    SolverConfig,
    build_graph,
    solve,
)
from .theory import bernoulli_mmse, eta_fixed_point, map_test_error, predicted_distortion

__version__ = "0.1.0"

__all__ = [
    "AggregateMetrics",
    "BeliefResult",
    "DisjointSupportError",
    "FactorGraph",
    "FaultModel",
    "GeneratorConfig",
    "Grid",
    "GridSizingError",
    "MessageState",
    "NbpSolver",
    "PairwiseModel",
    "QuantizedDensity",
    "SolverConfig",
    "SweepConfig",
    "TrialRecord",
    "bernoulli_mmse",
    "bipolar_to_binary",
    "build_graph",
    "choose_range",
    "convolve_all",
    "eta_fixed_point",
    "exact_marginals",
    "exhaustive_map",
    "gaussian_on_grid",
    "leave_one_out",
    "load_instance",
    "local_search",
    "log_loss",
    "map_test_error",
    "maxprod_solve",
    "mixture_on_grid",
    "naive_round",
    "pairwise_energy",
    "pr_curve",
    "predicted_distortion",
    "product",
    "rescale",
    "run_sweep",
    "run_trial",
    "sample_instance",
    "save_instance",
    "score",
    "solve",
    "sumprod_solve",
    "threshold_round",
    "to_pairwise",
    "trial_seed",
    "uniform_on_grid",
    "write_csv",
]
