"""Exhaustive ground truth for small instances.

Enumerates all 2^n patterns to get the exact MAP pattern and exact
per-variable posterior marginals; every approximate solver is tested
against these.
"""

import numpy as np
from scipy.special import logsumexp

from .model import FaultModel

_MAP_LIMIT = 25
_MARGINAL_LIMIT = 20
_CHUNK_BITS = 16


def _pattern_block(codes: np.ndarray, n: int) -> np.ndarray:
    """Decode integer codes into patterns; bit 0 of the code is x_0 so that
    ascending codes with reversed bit weights enumerate patterns in
    lexicographic order."""
    shifts = np.arange(n - 1, -1, -1)
    return ((codes[:, None] >> shifts[None, :]) & 1).astype(float)


def _losses(model: FaultModel, y: np.ndarray, block: np.ndarray) -> np.ndarray:
    a_dense = model.a_rows.toarray()
    resid = y[None, :] - block @ a_dense.T
    return block @ model.log_odds + (resid * resid).sum(axis=1) / (
        2.0 * model.noise_std**2
    )


def exhaustive_map(model: FaultModel, y):
    """Minimum-loss pattern over all 2^n patterns (ties: lexicographically
    smallest).  Guarded to n <= 25."""
    if model.n > _MAP_LIMIT:
        raise ValueError(f"exhaustive search limited to n <= {_MAP_LIMIT}, got {model.n}")
    y = np.asarray(y, dtype=float)
    best_loss = np.inf
    best_pattern = None
    total = 1 << model.n
    step = 1 << min(_CHUNK_BITS, model.n)
    for start in range(0, total, step):
        codes = np.arange(start, min(start + step, total), dtype=np.int64)
        block = _pattern_block(codes, model.n)
        losses = _losses(model, y, block)
        k = int(np.argmin(losses))
        # strict < keeps the first (lexicographically smallest) minimizer
        if losses[k] < best_loss:
            best_loss = float(losses[k])
            best_pattern = block[k].astype(np.int64)
    return best_pattern, best_loss


def exact_marginals(model: FaultModel, y) -> np.ndarray:
    """P(x_s = 1 | y) for every s by full enumeration with log-sum-exp
    accumulation.  Guarded to n <= 20."""
    if model.n > _MARGINAL_LIMIT:
        raise ValueError(
            f"exact marginals limited to n <= {_MARGINAL_LIMIT}, got {model.n}"
        )
    y = np.asarray(y, dtype=float)
    total = 1 << model.n
    step = 1 << min(_CHUNK_BITS, model.n)
    log_z_parts = []
    log_one_parts = []
    for start in range(0, total, step):
        codes = np.arange(start, min(start + step, total), dtype=np.int64)
        block = _pattern_block(codes, model.n)
        log_w = -_losses(model, y, block)
        log_z_parts.append(logsumexp(log_w))
        with np.errstate(divide="ignore"):
            sel = np.where(block > 0, log_w[:, None], -np.inf)
        log_one_parts.append(logsumexp(sel, axis=0))
    log_z = logsumexp(log_z_parts)
    log_one = logsumexp(np.stack(log_one_parts, axis=0), axis=0)
    return np.exp(log_one - log_z)
