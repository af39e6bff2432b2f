"""Fused hot-loop kernels for the message-passing solver.

These are plain loops compiled with numba; each one replaces a chain of
full-array numpy passes in the per-iteration critical path.  Shapes:
E edges, F factors, n variables, b grid bins, K = transform length // 2 + 1.
"""

import numba
import numpy as np

_jit = numba.njit(cache=True, fastmath=True)


@_jit
def factor_spectrum_products(spec, kernel_spec, indptr, out):
    """out[f] = kernel_spec[f] * prod of spec rows for factor f's edges."""
    num_factors = kernel_spec.shape[0]
    width = kernel_spec.shape[1]
    for f in range(num_factors):
        for k in range(width):
            out[f, k] = kernel_spec[f, k]
        for e in range(indptr[f], indptr[f + 1]):
            for k in range(width):
                out[f, k] *= spec[e, k]


@_jit
def leave_one_out_spectra(prod, spec, edge_factor, conv_edges, eps_sq, out):
    """out[i] = prod[factor(e)] / spec[e] with the divisor magnitude floored,
    for each convolving edge e = conv_edges[i]."""
    width = spec.shape[1]
    for i in range(conv_edges.shape[0]):
        e = conv_edges[i]
        p = prod[edge_factor[e]]
        s = spec[e]
        for k in range(width):
            f = s[k]
            denom = f.real * f.real + f.imag * f.imag
            if denom < eps_sq:
                denom = eps_sq
            out[i, k] = p[k] * f.conjugate() / denom


@_jit
def window_normalize(full, win_lo, win_hi, w_hi, conv_edges, flip_out, out, bad):
    """Crop each full transform row back to the grid window (with the
    half-bin blend), clamp negative dust, reverse rows whose outgoing
    coefficient is -1, and normalize to unit mass.  Rows that lose all
    mass are flagged in ``bad``."""
    rows = win_lo.shape[0]
    bins = win_lo.shape[1]
    for i in range(rows):
        e = conv_edges[i]
        wh = w_hi[i]
        wl = 1.0 - wh
        acc = 0.0
        if flip_out[e]:
            for r in range(bins):
                v = wl * full[i, win_lo[i, r]] + wh * full[i, win_hi[i, r]]
                if v < 0.0:
                    v = 0.0
                out[e, bins - 1 - r] = v
                acc += v
        else:
            for r in range(bins):
                v = wl * full[i, win_lo[i, r]] + wh * full[i, win_hi[i, r]]
                if v < 0.0:
                    v = 0.0
                out[e, r] = v
                acc += v
        if acc <= 0.0:
            bad[0] = e
        else:
            inv = 1.0 / acc
            for r in range(bins):
                out[e, r] *= inv


@_jit
def refresh_beliefs(f_to_v, var_edge_order, var_indptr, prior, belief_un, belief, bad):
    """belief_un[s] = prior[s] * prod of incoming messages (max-rescaled
    against underflow); belief[s] is the normalized copy."""
    n = prior.shape[0]
    bins = prior.shape[1]
    for s in range(n):
        for k in range(bins):
            belief_un[s, k] = prior[s, k]
        for idx in range(var_indptr[s], var_indptr[s + 1]):
            e = var_edge_order[idx]
            peak = 0.0
            for k in range(bins):
                belief_un[s, k] *= f_to_v[e, k]
                if belief_un[s, k] > peak:
                    peak = belief_un[s, k]
            if peak <= 0.0:
                bad[0] = s
                peak = 1.0
            inv = 1.0 / peak
            for k in range(bins):
                belief_un[s, k] *= inv
        acc = 0.0
        for k in range(bins):
            acc += belief_un[s, k]
        if acc <= 0.0:
            bad[0] = s
            acc = 1.0
        inv = 1.0 / acc
        for k in range(bins):
            belief[s, k] = belief_un[s, k] * inv


@_jit
def divide_out_messages(belief_un, edge_var, f_to_v, eps, damping, blend_old,
                        v_to_f, bad):
    """v_to_f[e] = belief_un[var(e)] / max(f_to_v[e], eps), normalized, with
    optional damping against the previous message."""
    num_edges = edge_var.shape[0]
    bins = f_to_v.shape[1]
    scratch = np.empty(bins, dtype=np.float64)
    for e in range(num_edges):
        s = edge_var[e]
        acc = 0.0
        for k in range(bins):
            m = f_to_v[e, k]
            if m < eps:
                m = eps
            v = belief_un[s, k] / m
            acc += v
            scratch[k] = v
        if acc <= 0.0:
            bad[0] = e
            acc = 1.0
        if blend_old:
            inv = (1.0 - damping) / acc
            total = 0.0
            for k in range(bins):
                v = scratch[k] * inv + damping * v_to_f[e, k]
                v_to_f[e, k] = v
                total += v
            inv2 = 1.0 / total
            for k in range(bins):
                v_to_f[e, k] *= inv2
        else:
            inv = 1.0 / acc
            for k in range(bins):
                v_to_f[e, k] = scratch[k] * inv
