"""Rounding and local search: soft decisions into hard patterns.

Both heuristics evaluate loss deltas incrementally through the cached
residual r = y - A x, so a full threshold sweep or search pass costs
O(nnz) instead of O(n * nnz).
"""

import numpy as np

from .model import FaultModel, as_pattern

_FLIP_CAP_FACTOR = 100


def _column(model: FaultModel, s: int):
    a = model.a_cols
    lo, hi = a.indptr[s], a.indptr[s + 1]
    return a.indices[lo:hi], a.data[lo:hi]


def threshold_round(model: FaultModel, y, xstar) -> np.ndarray:
    """Best pattern over every rounding threshold of the soft decision.

    Sorts entries of ``xstar`` descending (ties by ascending index) and
    evaluates the n+1 prefix patterns, returning the one with least loss.
    """
    xstar = np.asarray(xstar, dtype=float)
    if xstar.shape != (model.n,):
        raise ValueError(f"soft decision has shape {xstar.shape}, expected ({model.n},)")
    y = np.asarray(y, dtype=float)
    order = np.argsort(-xstar, kind="stable")
    inv_two_var = 1.0 / (2.0 * model.noise_std**2)

    r = y.copy()
    loss = (r @ r) * inv_two_var  # all-zeros candidate
    best_loss, best_k = loss, 0
    for k, s in enumerate(order, start=1):
        rows, vals = _column(model, s)
        col_sq = vals @ vals
        loss += model.log_odds[s] + (col_sq - 2.0 * (vals @ r[rows])) * inv_two_var
        r[rows] -= vals
        if loss < best_loss:
            best_loss, best_k = loss, k
    pattern = np.zeros(model.n, dtype=np.int64)
    pattern[order[:best_k]] = 1
    return pattern


def local_search(model: FaultModel, y, x0) -> np.ndarray:
    """Single-bit-flip descent from ``x0`` until no flip decreases the loss.

    Accepts only strict decreases, so the search terminates; the result is
    1-OPT.  A hard cap of 100*n accepted flips guards against cycles, which
    strict descent makes unreachable.
    """
    x = as_pattern(x0).copy()
    if x.shape != (model.n,):
        raise ValueError(f"pattern has shape {x.shape}, expected ({model.n},)")
    y = np.asarray(y, dtype=float)
    inv_two_var = 1.0 / (2.0 * model.noise_std**2)
    r = model.residual(y, x)
    flips = 0
    cap = _FLIP_CAP_FACTOR * model.n
    improved = True
    while improved:
        improved = False
        for s in range(model.n):
            rows, vals = _column(model, s)
            col_sq = vals @ vals
            dot = vals @ r[rows]
            if x[s] == 0:
                delta = model.log_odds[s] + (col_sq - 2.0 * dot) * inv_two_var
            else:
                delta = -model.log_odds[s] + (col_sq + 2.0 * dot) * inv_two_var
            if delta < 0.0:
                if x[s] == 0:
                    x[s] = 1
                    r[rows] -= vals
                else:
                    x[s] = 0
                    r[rows] += vals
                improved = True
                flips += 1
                if flips > cap:
                    raise RuntimeError(
                        f"local search exceeded {cap} accepted flips; "
                        "loss deltas are inconsistent"
                    )
    return x


def naive_round(xstar) -> np.ndarray:
    """Round at 1/2; exact ties fall to no-fault."""
    xstar = np.asarray(xstar, dtype=float)
    return (xstar > 0.5).astype(np.int64)
