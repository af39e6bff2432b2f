"""Problem instances: sparse signature matrix, priors, loss, and transformations.

A fault pattern is a length-n binary vector; measurements are
``y = A x + noise`` with ``A`` the m-by-n sparse signature matrix whose
column s is the noiseless response to fault s alone.  Patterns, soft
decisions and measurement vectors are plain numpy arrays throughout.
"""

import json
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp


def as_pattern(x) -> np.ndarray:
    """Validate and return a {0,1} int array."""
    x = np.asarray(x)
    if not np.all((x == 0) | (x == 1)):
        raise ValueError("fault pattern entries must be 0 or 1")
    return x.astype(np.int64)


class FaultModel:
    """Immutable problem instance: signature matrix A, fault priors, noise level.

    The matrix is stored in both row-major and column-major sparse form so
    factor-side and variable-side iteration are both cheap.
    """

    def __init__(self, signature_matrix, fault_priors, noise_std: float):
        a = sp.csr_array(signature_matrix, dtype=float)
        if a.ndim != 2:
            raise ValueError("signature matrix must be two-dimensional")
        self.a_rows = a
        self.a_cols = sp.csc_array(a)
        self.m, self.n = a.shape
        if self.m < 1 or self.n < 1:
            raise ValueError(f"matrix must be at least 1x1, got {a.shape}")
        p = np.asarray(fault_priors, dtype=float)
        if p.ndim == 0:
            p = np.full(self.n, float(p))
        if p.shape != (self.n,):
            raise ValueError(f"fault_priors has shape {p.shape}, expected ({self.n},)")
        if np.any(p <= 0) or np.any(p >= 1):
            raise ValueError("fault priors must lie strictly inside (0, 1)")
        if not noise_std > 0:
            raise ValueError(f"noise_std must be positive, got {noise_std}")
        self.fault_priors = p
        self.noise_std = float(noise_std)
        self.log_odds = np.log((1.0 - p) / p)
        assert self.a_rows.nnz == self.a_cols.nnz

    @property
    def nonzero_fraction(self) -> float:
        return self.a_rows.nnz / (self.m * self.n)

    def with_priors(self, fault_priors) -> "FaultModel":
        """Same instance matrix and noise, different prior (mismatch experiments)."""
        return FaultModel(self.a_rows, fault_priors, self.noise_std)

    def residual(self, y, x) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        if y.shape != (self.m,):
            raise ValueError(f"y has shape {y.shape}, expected ({self.m},)")
        x = np.asarray(x, dtype=float)
        if x.shape != (self.n,):
            raise ValueError(f"x has shape {x.shape}, expected ({self.n},)")
        return y - self.a_rows @ x


def log_loss(model: FaultModel, y, x) -> float:
    """Negative log posterior up to an additive constant.

    lambda^T x + ||y - A x||^2 / (2 sigma^2) with lambda_s = log((1-p_s)/p_s).
    Only loss differences between patterns are meaningful; the dropped
    constant absorbs the Gaussian normalizer and the prior normalization.
    """
    x = np.asarray(x, dtype=float)
    r = model.residual(y, x)
    return float(model.log_odds @ x + (r @ r) / (2.0 * model.noise_std**2))


@dataclass(frozen=True)
class PairwiseModel:
    """Couplings ``j`` (symmetric, zero diagonal) and fields ``h``.

    For every binary x,
    ``sum_{s<t} J_st x_s x_t + sum_s h_s x_s == log_loss(x) + const``.
    """

    j: sp.csr_array
    h: np.ndarray

    @property
    def n(self) -> int:
        return self.h.shape[0]


def to_pairwise(model: FaultModel, y) -> PairwiseModel:
    """Expand the quadratic loss into pairwise couplings and local fields."""
    y = np.asarray(y, dtype=float)
    if y.shape != (model.m,):
        raise ValueError(f"y has shape {y.shape}, expected ({model.m},)")
    inv_var = 1.0 / model.noise_std**2
    gram = (model.a_cols.T @ model.a_cols).tocsr()
    diag = gram.diagonal().copy()
    j = (gram * inv_var).tolil()
    j.setdiag(0.0)
    h = model.log_odds - inv_var * (model.a_rows.T @ y) + 0.5 * inv_var * diag
    return PairwiseModel(j=sp.csr_array(j), h=np.asarray(h, dtype=float))


def pairwise_energy(pm: PairwiseModel, x) -> float:
    """Evaluate the pairwise expansion at a binary pattern."""
    x = np.asarray(x, dtype=float)
    return float(0.5 * (x @ (pm.j @ x)) + pm.h @ x)


def bipolar_to_binary(x_bipolar, a_matrix, y):
    """Map a {-1,+1} problem to the equivalent {0,1} problem.

    Returns (x_binary, 2A, y + A*ones); the residual ||Ax - y|| is preserved
    exactly under the transformation.
    """
    x = np.asarray(x_bipolar)
    if not np.all((x == -1) | (x == 1)):
        raise ValueError("input pattern must be bipolar (-1/+1)")
    x_bin = ((x + 1) // 2).astype(np.int64)
    ones = np.ones(x.shape[0])
    if sp.issparse(a_matrix):
        a2 = (a_matrix * 2.0).tocsr()
        shift = np.asarray(a_matrix @ ones).ravel()
    else:
        a2 = np.asarray(a_matrix, dtype=float) * 2.0
        shift = np.asarray(a_matrix, dtype=float) @ ones
    y_bar = np.asarray(y, dtype=float) + shift
    return x_bin, a2, y_bar


@dataclass(frozen=True)
class GeneratorConfig:
    """Random-instance generator settings."""

    m: int = 100
    n: int = 200
    p: float = 0.12
    q: float = 0.2
    sigma: float = 1.0

    def __post_init__(self):
        if self.m < 1 or self.n < 1:
            raise ValueError("m and n must be >= 1")
        if not 0.0 < self.p < 1.0:
            raise ValueError(f"p must be in (0, 1), got {self.p}")
        if not 0.0 < self.q <= 1.0:
            raise ValueError(f"q must be in (0, 1], got {self.q}")
        if not self.sigma > 0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")


def sample_instance(config: GeneratorConfig, seed):
    """Draw (model, true pattern, measurements) reproducibly from ``seed``.

    Each matrix entry is independently non-zero with probability q, taking
    values +-1 equiprobably; faults are iid Bernoulli(p); measurement noise
    is iid N(0, sigma^2).
    """
    rng = np.random.default_rng(seed)
    mask = rng.random((config.m, config.n)) < config.q
    signs = rng.integers(0, 2, size=(config.m, config.n)) * 2 - 1
    a = sp.csr_array(mask * signs, dtype=float)
    x = (rng.random(config.n) < config.p).astype(np.int64)
    noise = rng.normal(0.0, config.sigma, size=config.m)
    y = a @ x.astype(float) + noise
    model = FaultModel(a, np.full(config.n, config.p), config.sigma)
    return model, x, y


def save_instance(path, model: FaultModel, y, x_true=None) -> None:
    """Write an instance as JSON; float round-trip is exact (repr-based)."""
    coo = sp.coo_array(model.a_rows)
    payload = {
        "m": model.m,
        "n": model.n,
        "sigma": model.noise_std,
        "p": model.fault_priors.tolist(),
        "A": [[int(r), int(c), float(v)] for r, c, v in zip(coo.row, coo.col, coo.data)],
        "y": np.asarray(y, dtype=float).tolist(),
    }
    if x_true is not None:
        payload["x_true"] = as_pattern(x_true).tolist()
    with open(path, "w") as fh:
        json.dump(payload, fh)


def load_instance(path):
    """Read an instance written by :func:`save_instance`.

    Returns (model, y, x_true) with x_true None when absent.
    """
    with open(path) as fh:
        payload = json.load(fh)
    m, n = int(payload["m"]), int(payload["n"])
    entries = payload["A"]
    rows = [int(e[0]) for e in entries]
    cols = [int(e[1]) for e in entries]
    vals = [float(e[2]) for e in entries]
    a = sp.coo_array((vals, (rows, cols)), shape=(m, n)).tocsr()
    model = FaultModel(a, np.asarray(payload["p"], dtype=float), float(payload["sigma"]))
    y = np.asarray(payload["y"], dtype=float)
    x_true = None
    if "x_true" in payload:
        x_true = as_pattern(payload["x_true"])
    return model, y, x_true
