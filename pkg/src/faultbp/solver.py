"""Belief propagation on the bipartite factor graph of the signature matrix.

Variables are the (relaxed, real-valued) fault indicators; each measurement
row contributes one factor N(y_i; a_i.x, sigma^2).  Messages are quantized
densities on a shared grid.  Factor-to-variable updates are convolutions,
done as pointwise products in the transform domain; variable-to-factor
updates are pointwise products computed once per variable and divided per
edge.
"""

import json
from dataclasses import dataclass, field

import numpy as np
import scipy.fft as _fft

from . import _kernels
from .density import (
    DIVISION_EPS,
    DisjointSupportError,
    Grid,
    QuantizedDensity,
    choose_range,
    gaussian_weights,
    sum_conv_offset,
)
from .model import FaultModel


@dataclass(frozen=True)
class SolverConfig:
    """Knobs for one solver run.

    ``relax_var`` is the variance of the Gaussians that relax the binary
    prior; None picks (4 * grid spacing)^2 so each prior lobe spans a few
    bins.  ``damping`` blends each new variable-to-factor message with the
    previous one.  Internal message storage uses ``dtype`` (float32 is
    plenty for message passing and halves the transform cost).
    """

    bins: int = 1024
    max_iters: int = 50
    tol: float = 1e-5
    relax_var: float | None = None
    damping: float = 0.0
    dtype: type = np.float32

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if not 0.0 <= self.damping < 1.0:
            raise ValueError("damping must lie in [0, 1)")
        if self.relax_var is not None and not self.relax_var > 0:
            raise ValueError("relax_var must be positive")


class FactorGraph:
    """Bipartite adjacency of the non-zeros of A, in both directions.

    Edges are stored factor-major (CSR order); ``var_edge_order`` permutes
    them variable-major.  All-zero rows produce no factor; all-zero columns
    leave the variable attached only to its prior.
    """

    def __init__(self, model: FaultModel):
        a = model.a_rows
        self.n = model.n
        row_degree = np.diff(a.indptr)
        self.active_rows = np.flatnonzero(row_degree > 0)
        self.num_factors = self.active_rows.size
        keep = np.repeat(row_degree > 0, row_degree)
        self.edge_var = a.indices[keep].astype(np.int64)
        self.edge_coef = a.data[keep].astype(float)
        self.factor_degree = row_degree[self.active_rows]
        self.factor_indptr = np.concatenate(([0], np.cumsum(self.factor_degree)))
        self.edge_factor = np.repeat(np.arange(self.num_factors), self.factor_degree)
        self.num_edges = self.edge_var.size

        self.var_edge_order = np.argsort(self.edge_var, kind="stable")
        self.var_degree = np.bincount(self.edge_var, minlength=self.n)
        self.var_indptr = np.concatenate(([0], np.cumsum(self.var_degree)))
        assert self.var_indptr[-1] == self.num_edges == self.factor_indptr[-1]

    def factor_edges(self, i: int) -> slice:
        return slice(self.factor_indptr[i], self.factor_indptr[i + 1])

    def variable_edges(self, s: int) -> np.ndarray:
        return self.var_edge_order[self.var_indptr[s] : self.var_indptr[s + 1]]


def build_graph(model: FaultModel) -> FactorGraph:
    return FactorGraph(model)


@dataclass
class MessageState:
    """Per-edge messages plus convergence bookkeeping.

    Rows of ``v_to_f`` / ``f_to_v`` are quantized densities in factor-major
    edge order, normalized after every half-iteration.
    """

    v_to_f: np.ndarray
    f_to_v: np.ndarray
    belief: np.ndarray
    belief_unnorm: np.ndarray
    prev_belief: np.ndarray | None = None
    residuals: np.ndarray | None = None
    iteration: int = 0


@dataclass
class BeliefResult:
    """Converged (or truncated) beliefs and the decisions they imply."""

    grid: Grid
    beliefs: np.ndarray = field(repr=False)
    soft: np.ndarray
    pattern: np.ndarray
    iterations: int
    converged: bool

    def belief_density(self, s: int) -> QuantizedDensity:
        return QuantizedDensity(self.grid, np.asarray(self.beliefs[s], dtype=float))

    def fault_probabilities(self) -> np.ndarray:
        """Belief mass above 1/2 per variable: the estimate of P(x_s = 1)."""
        mask = self.grid.centers > 0.5
        return self.beliefs[:, mask].sum(axis=1)


class NbpSolver:
    """One solve: grid sizing, precomputed factor kernels, message passing."""

    def __init__(self, model: FaultModel, y, config: SolverConfig | None = None):
        self.config = config or SolverConfig()
        self.model = model
        y = np.asarray(y, dtype=float)
        if y.shape != (model.m,):
            raise ValueError(f"y has shape {y.shape}, expected ({model.m},)")
        self.y = y
        self.graph = build_graph(model)
        b = self.config.bins
        self.grid = Grid(b, choose_range(y, model.nonzero_fraction, model.n))
        self.relax_var = (
            self.config.relax_var
            if self.config.relax_var is not None
            else (4.0 * self.grid.spacing) ** 2
        )
        self._dt = self.config.dtype
        self._length = 1 << (2 * b - 1).bit_length() if b & (b - 1) else 2 * b

        centers = self.grid.centers
        p = model.fault_priors
        prior = p[:, None] * gaussian_weights(centers, 1.0, self.relax_var)[None, :]
        prior += (1.0 - p)[:, None] * gaussian_weights(centers, 0.0, self.relax_var)[None, :]
        self.prior = prior / prior.sum(axis=1, keepdims=True)

        g = self.graph
        var = model.noise_std**2
        fk = np.empty((g.num_factors, b))
        for k, row in enumerate(g.active_rows):
            fk[k] = gaussian_weights(centers, y[row], var)
        fk /= fk.sum(axis=1, keepdims=True)
        self.factor_kernel = fk.astype(self._dt)

        self._bipolar = bool(np.all(np.abs(g.edge_coef) == 1.0))
        self._flip_in = g.edge_coef == 1.0  # incoming rescale by -a_it: reversal when a_it=+1
        self._flip_out = g.edge_coef == -1.0  # outgoing rescale by 1/a_is
        self._deg_of_edge = g.factor_degree[g.edge_factor]
        self._kernel_spec = _fft.rfft(self.factor_kernel, n=self._length, axis=-1)
        self._fft_in = np.zeros((g.num_edges, self._length), dtype=self._dt)
        self._prod_spec = np.empty_like(self._kernel_spec)
        self._build_window_indices()
        self.state = self._init_state()

    # -- setup -----------------------------------------------------------

    def _build_window_indices(self):
        """Per-edge gather indices mapping the transform-domain product back
        onto the grid window, folded modulo the (circular) transform length."""
        g = self.graph
        b, length = self.config.bins, self._length
        conv_edges = np.flatnonzero(self._deg_of_edge >= 2)
        self._conv_edges = conv_edges
        self._direct_edges = np.flatnonzero(self._deg_of_edge == 1)
        if conv_edges.size == 0:
            return
        n_inputs = self._deg_of_edge[conv_edges]  # kernel + (deg-1) messages
        off = sum_conv_offset(n_inputs, b)
        lo = np.floor(off).astype(np.int64)
        frac = off - lo  # 0 for odd input counts, 1/2 for even
        r = np.arange(b, dtype=np.int64)
        self._win_lo = ((lo[:, None] + r[None, :]) % length).astype(np.int32)
        self._win_hi = ((lo[:, None] + 1 + r[None, :]) % length).astype(np.int32)
        self._win_whi = frac.astype(np.float64)

    def _init_state(self) -> MessageState:
        g = self.graph
        b = self.config.bins
        shape = (g.num_edges, b)
        f2v = np.full(shape, 1.0 / b, dtype=self._dt)
        belief_un = self.prior.copy()
        belief = belief_un / belief_un.sum(axis=1, keepdims=True)
        v2f = np.empty(shape, dtype=self._dt)
        return MessageState(
            v_to_f=v2f, f_to_v=f2v, belief=belief, belief_unnorm=belief_un
        )

    # -- half iterations ---------------------------------------------------

    def update_var_to_factor(self) -> None:
        """m^v_(s->i) = prior_s * prod_{j != i} m^f_(j->s), via the cached
        full product divided per edge, with optional damping."""
        st = self.state
        g = self.graph
        gamma = self.config.damping
        blend = gamma > 0.0 and st.iteration > 0
        bad = np.full(1, -1, dtype=np.int64)
        _kernels.divide_out_messages(
            st.belief_unnorm, g.edge_var, st.f_to_v, DIVISION_EPS,
            gamma, blend, st.v_to_f, bad,
        )
        if bad[0] >= 0:
            s = int(g.edge_var[int(bad[0])])
            raise DisjointSupportError(
                f"all-zero variable-to-factor message at variable {s}"
            )

    def _rescale_incoming(self) -> None:
        """Fill the transform input buffer with each message as a density of
        -a_it * x_t: the factor argument is y_i minus the weighted sum, so
        incoming messages are rescaled by the negated coefficient."""
        st, g = self.state, self.graph
        b = self.config.bins
        buf = self._fft_in
        buf[:, :b] = st.v_to_f
        flip = self._flip_in
        buf[flip, :b] = st.v_to_f[flip, ::-1]
        if not self._bipolar:
            centers = self.grid.centers
            for e in np.flatnonzero(np.abs(g.edge_coef) != 1.0):
                w = np.interp(
                    centers / (-g.edge_coef[e]),
                    centers,
                    st.v_to_f[e].astype(float),
                    left=0.0,
                    right=0.0,
                )
                s = w.sum()
                if s <= 0:
                    raise DisjointSupportError(
                        f"rescale by {-g.edge_coef[e]} lost all mass on edge {e}"
                    )
                buf[e, :b] = (w / s).astype(self._dt)

    def _unscale_outgoing(self, out: np.ndarray) -> None:
        """Resample non-unit-coefficient edges from the scaled argument
        a_is*x_s back to x_s (the +-1 cases are plain flips, already done)."""
        g = self.graph
        centers = self.grid.centers
        for e in np.flatnonzero(np.abs(g.edge_coef) != 1.0):
            w = np.interp(
                centers * g.edge_coef[e],
                centers,
                out[e].astype(float),
                left=0.0,
                right=0.0,
            )
            s = w.sum()
            if s <= 0:
                raise DisjointSupportError(
                    f"rescale by {1.0 / g.edge_coef[e]} lost all mass on edge {e}"
                )
            out[e] = (w / s).astype(self._dt)

    def update_factor_to_var(self) -> None:
        """m^f_(i->s): convolve the factor's Gaussian with all other incoming
        messages.  Products run in the transform domain; the leave-one-out
        division uses the full product with a floored divisor.  Degree-1
        factors send their kernel directly."""
        st, g = self.state, self.graph
        length = self._length
        out = np.empty_like(st.f_to_v)
        bad = np.full(1, -1, dtype=np.int64)

        de = self._direct_edges
        if de.size:
            out[de] = self.factor_kernel[g.edge_factor[de]]
            flip = self._flip_out.copy()
            flip[self._conv_edges] = False
            out[flip] = out[flip, ::-1]

        ce = self._conv_edges
        if ce.size:
            self._rescale_incoming()
            spec = _fft.rfft(self._fft_in, axis=-1)
            _kernels.factor_spectrum_products(
                spec, self._kernel_spec, g.factor_indptr, self._prod_spec
            )
            quot = np.empty((ce.size, spec.shape[1]), dtype=spec.dtype)
            _kernels.leave_one_out_spectra(
                self._prod_spec, spec, g.edge_factor, ce, DIVISION_EPS**2, quot
            )
            del spec
            full = _fft.irfft(quot, n=length, axis=-1)
            del quot
            _kernels.window_normalize(
                full, self._win_lo, self._win_hi, self._win_whi, ce,
                self._flip_out, out, bad,
            )
            del full
            if bad[0] >= 0:
                e = int(bad[0])
                raise DisjointSupportError(
                    f"all-zero factor-to-variable message on edge {e} "
                    f"(factor {g.edge_factor[e]}, variable {g.edge_var[e]})"
                )

        if not self._bipolar:
            self._unscale_outgoing(out)
        st.f_to_v = out

    def _refresh_belief(self) -> None:
        """belief_s = prior_s * prod over incoming factor messages (float64)."""
        st, g = self.state, self.graph
        st.prev_belief = st.belief
        belief_un = np.empty_like(self.prior)
        belief = np.empty_like(self.prior)
        bad = np.full(1, -1, dtype=np.int64)
        _kernels.refresh_beliefs(
            st.f_to_v, g.var_edge_order, g.var_indptr, self.prior,
            belief_un, belief, bad,
        )
        if bad[0] >= 0:
            raise DisjointSupportError(f"belief at variable {int(bad[0])} lost all mass")
        st.belief_unnorm = belief_un
        st.belief = belief

    def check_convergence(self) -> bool:
        """Largest per-variable relative l2 change of the belief below tol.

        The first iteration has no predecessor and never counts as converged.
        """
        st = self.state
        if st.iteration < 2 or st.residuals is None:
            return False
        return bool(np.max(st.residuals) < self.config.tol)

    def _soft_decision(self) -> np.ndarray:
        centers = self.grid.centers
        soft = centers[np.argmax(self.state.belief, axis=1)]
        return np.clip(soft, 0.0, 1.0)

    def run(self, trace=None) -> BeliefResult:
        st = self.state
        converged = False
        for it in range(1, self.config.max_iters + 1):
            self.update_var_to_factor()
            self.update_factor_to_var()
            self._refresh_belief()
            st.iteration = it
            if it >= 2:
                diff = st.belief - st.prev_belief
                st.residuals = np.sqrt((diff * diff).sum(axis=1)) / np.sqrt(
                    (st.prev_belief * st.prev_belief).sum(axis=1)
                )
            if trace is not None:
                line = {
                    "iteration": it,
                    "max_residual": float(np.max(st.residuals)) if it >= 2 else None,
                    "soft": [round(float(v), 6) for v in self._soft_decision()],
                }
                trace.write(json.dumps(line) + "\n")
            if self.check_convergence():
                converged = True
                break
        soft = self._soft_decision()
        pattern = (soft > 0.5).astype(np.int64)  # ties at 1/2 fall to no-fault
        return BeliefResult(
            grid=self.grid,
            beliefs=st.belief,
            soft=soft,
            pattern=pattern,
            iterations=st.iteration,
            converged=converged,
        )


def solve(model: FaultModel, y, config: SolverConfig | None = None, trace=None) -> BeliefResult:
    """Run belief propagation to convergence and round the beliefs."""
    return NbpSolver(model, y, config).run(trace=trace)
