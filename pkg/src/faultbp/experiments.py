"""Monte-Carlo benchmark harness: sweeps, scoring, and plot-ready CSV output.

Trials are independent; per-trial seeds derive from the master seed and the
(grid point, trial) position, so results are reproducible and order-free.
Identical seed and config produce identical result rows; per-trial wall
times are measured but can be left out of the CSV for byte-reproducibility.
"""

import csv
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .discrete import maxprod_solve, sumprod_solve
from .heuristics import local_search, naive_round, threshold_round
from .model import FaultModel, GeneratorConfig, log_loss, sample_instance, to_pairwise
from .oracle import exhaustive_map
from .solver import NbpSolver, SolverConfig

ALGORITHMS = ("nbp", "maxprod", "sumprod", "oracle")
PIPELINES = ("none", "round", "round+local")
SWEEP_PARAMS = ("p", "q", "sigma", "p-reported")

CSV_COLUMNS = (
    "param_name",
    "param_value",
    "algorithm",
    "pipeline",
    "trials",
    "wer",
    "wer_ci",
    "precision",
    "recall",
    "mean_runtime_s",
    "mean_iters",
)

_Z95 = 1.959963984540054


def trial_seed(master_seed: int, point_index: int, trial_index: int) -> int:
    """Stable per-trial seed from the master seed and grid position."""
    ss = np.random.SeedSequence((master_seed, point_index, trial_index))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def score(x_true, x_hat):
    """Per-trial scoring: (exact_match, true/false positives, false negatives)."""
    x_true = np.asarray(x_true)
    x_hat = np.asarray(x_hat)
    if x_true.shape != x_hat.shape:
        raise ValueError(f"length mismatch: {x_true.shape} vs {x_hat.shape}")
    tp = int(np.sum((x_true == 1) & (x_hat == 1)))
    fp = int(np.sum((x_true == 0) & (x_hat == 1)))
    fn = int(np.sum((x_true == 1) & (x_hat == 0)))
    return bool(np.array_equal(x_true, x_hat)), tp, fp, fn


@dataclass
class AlgorithmRun:
    """One algorithm's outputs on one trial."""

    soft: np.ndarray
    patterns: dict
    losses: dict
    runtime: float
    iterations: int
    converged: bool


@dataclass
class TrialRecord:
    """One generated instance plus every algorithm's results on it."""

    seed: int
    generator: GeneratorConfig
    reported_p: float
    x_true: np.ndarray
    runs: dict


@dataclass(frozen=True)
class AggregateMetrics:
    """Per-(grid point, algorithm, pipeline) summary."""

    wer: float
    wer_ci: float
    precision: float
    recall: float
    mean_runtime_s: float
    mean_iters: float
    trials: int


@dataclass(frozen=True)
class SweepConfig:
    """Grid definition plus generator and solver settings."""

    param: str
    values: tuple
    m: int = 100
    n: int = 200
    p: float = 0.12
    q: float = 0.2
    sigma: float = 1.0
    trials: int = 1000
    master_seed: int = 0
    algorithms: tuple = ("nbp",)
    pipelines: tuple = PIPELINES
    bins: int = 1024
    max_iters: int = 50
    tol: float = 1e-5
    relax_var: float | None = None
    damping: float = 0.0
    jobs: int = 1

    def __post_init__(self):
        if self.param not in SWEEP_PARAMS:
            raise ValueError(f"param must be one of {SWEEP_PARAMS}, got {self.param!r}")
        if not self.values:
            raise ValueError("sweep needs at least one grid value")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.jobs < 1:
            raise ValueError("jobs must be >= 1")
        unknown = set(self.algorithms) - set(ALGORITHMS)
        if unknown:
            raise ValueError(f"unknown algorithms: {sorted(unknown)}")
        unknown = set(self.pipelines) - set(PIPELINES)
        if unknown:
            raise ValueError(f"unknown pipelines: {sorted(unknown)}")

    def solver_config(self) -> SolverConfig:
        return SolverConfig(
            bins=self.bins,
            max_iters=self.max_iters,
            tol=self.tol,
            relax_var=self.relax_var,
            damping=self.damping,
        )

    def point_setup(self, value: float):
        """Generator config and reported prior for one grid point."""
        gen = GeneratorConfig(m=self.m, n=self.n, p=self.p, q=self.q, sigma=self.sigma)
        if self.param == "p":
            return replace(gen, p=value), value
        if self.param == "q":
            return replace(gen, q=value), gen.p
        if self.param == "sigma":
            return replace(gen, sigma=value), gen.p
        return gen, value  # p-reported: generate with true p, solve believing `value`


def _apply_pipelines(solve_model: FaultModel, y, soft, pipelines):
    patterns, losses = {}, {}
    rounded = None
    for pipe in pipelines:
        if pipe == "none":
            pat = naive_round(soft)
        elif pipe == "round":
            rounded = threshold_round(solve_model, y, soft)
            pat = rounded
        elif pipe == "round+local":
            if rounded is None:
                rounded = threshold_round(solve_model, y, soft)
            pat = local_search(solve_model, y, rounded)
        else:
            raise ValueError(f"unknown pipeline {pipe!r}")
        patterns[pipe] = pat
        losses[pipe] = log_loss(solve_model, y, pat)
    return patterns, losses


def run_trial(generator: GeneratorConfig, reported_p: float, seed: int,
              algorithms, pipelines, solver_config: SolverConfig) -> TrialRecord:
    """Generate one instance and run every requested algorithm + pipeline."""
    model, x_true, y = sample_instance(generator, seed)
    solve_model = model if reported_p == generator.p else model.with_priors(
        np.full(generator.n, reported_p)
    )
    runs = {}
    pm = None
    for algo in algorithms:
        t0 = time.perf_counter()
        if algo == "nbp":
            res = NbpSolver(solve_model, y, solver_config).run()
            soft, iters, conv = res.soft, res.iterations, res.converged
        elif algo in ("maxprod", "sumprod"):
            if pm is None:
                pm = to_pairwise(solve_model, y)
            fn = maxprod_solve if algo == "maxprod" else sumprod_solve
            res = fn(pm, max_iters=solver_config.max_iters, tol=solver_config.tol,
                     damping=solver_config.damping)
            soft, iters, conv = res.soft, res.iterations, res.converged
        elif algo == "oracle":
            pattern, _ = exhaustive_map(solve_model, y)
            soft, iters, conv = pattern.astype(float), 1, True
        else:
            raise ValueError(f"unknown algorithm {algo!r}")
        runtime = time.perf_counter() - t0
        patterns, losses = _apply_pipelines(solve_model, y, soft, pipelines)
        runs[algo] = AlgorithmRun(
            soft=soft, patterns=patterns, losses=losses,
            runtime=runtime, iterations=iters, converged=conv,
        )
    return TrialRecord(
        seed=seed, generator=generator, reported_p=reported_p, x_true=x_true, runs=runs
    )


def aggregate(records, algorithm: str, pipeline: str) -> AggregateMetrics:
    """Micro-averaged metrics over one grid point's trials."""
    errors = 0
    tp = fp = fn = 0
    runtimes, iters = [], []
    for rec in records:
        run = rec.runs[algorithm]
        exact, t, f, m = score(rec.x_true, run.patterns[pipeline])
        errors += 0 if exact else 1
        tp += t
        fp += f
        fn += m
        runtimes.append(run.runtime)
        iters.append(run.iterations)
    trials = len(records)
    wer = errors / trials
    ci = _Z95 * float(np.sqrt(wer * (1.0 - wer) / trials))
    precision = tp / (tp + fp) if (tp + fp) else 1.0
    recall = tp / (tp + fn) if (tp + fn) else 1.0
    return AggregateMetrics(
        wer=wer, wer_ci=ci, precision=precision, recall=recall,
        mean_runtime_s=float(np.mean(runtimes)), mean_iters=float(np.mean(iters)),
        trials=trials,
    )


@dataclass
class SweepResult:
    config: SweepConfig
    rows: list
    records: list = field(default_factory=list, repr=False)


def run_sweep(config: SweepConfig, keep_records: bool = False,
              progress=None) -> SweepResult:
    """Run every grid point; one result row per (point, algorithm, pipeline)."""
    solver_config = config.solver_config()
    rows = []
    all_records = []
    for point_index, value in enumerate(config.values):
        generator, reported_p = config.point_setup(value)
        records = []
        for trial_index in range(config.trials):
            seed = trial_seed(config.master_seed, point_index, trial_index)
            records.append(
                run_trial(generator, reported_p, seed, config.algorithms,
                          config.pipelines, solver_config)
            )
            if progress is not None:
                progress(point_index, trial_index)
        for algo in config.algorithms:
            for pipe in config.pipelines:
                agg = aggregate(records, algo, pipe)
                rows.append({
                    "param_name": config.param,
                    "param_value": value,
                    "algorithm": algo,
                    "pipeline": pipe,
                    "trials": agg.trials,
                    "wer": agg.wer,
                    "wer_ci": agg.wer_ci,
                    "precision": agg.precision,
                    "recall": agg.recall,
                    "mean_runtime_s": agg.mean_runtime_s,
                    "mean_iters": agg.mean_iters,
                })
        if keep_records:
            all_records.append(records)
    return SweepResult(config=config, rows=rows, records=all_records)


def write_csv(rows, path, include_timing: bool = True) -> None:
    """Write result rows; dropping the timing column makes reruns with the
    same seed and config byte-identical."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_COLUMNS)
        for row in rows:
            out = [row[c] for c in CSV_COLUMNS]
            if not include_timing:
                out[CSV_COLUMNS.index("mean_runtime_s")] = ""
            writer.writerow(out)


def pr_curve(records, algorithm: str, thresholds) -> list:
    """Micro-averaged precision/recall sweeping a threshold over the soft
    decisions; returns (threshold, precision, recall) triples."""
    points = []
    for theta in thresholds:
        tp = fp = fn = 0
        for rec in records:
            hat = (rec.runs[algorithm].soft > theta).astype(int)
            _, t, f, m = score(rec.x_true, hat)
            tp += t
            fp += f
            fn += m
        precision = tp / (tp + fp) if (tp + fp) else 1.0
        recall = tp / (tp + fn) if (tp + fn) else 1.0
        points.append((float(theta), precision, recall))
    return points
