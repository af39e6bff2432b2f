"""Quantized density algebra on a shared symmetric grid.

All message-like objects in the continuous solver are non-negative mass
vectors over a fixed grid of cell centers covering [-R, R].  Weights are
per-bin masses (not pdf samples), so products, divisions and convolutions
stay normalization-consistent.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.fft as _fft

# Floor applied to divisors in leave-one-out division.
DIVISION_EPS = 1e-12

# Negative round-off from inverse transforms below this magnitude is dust.
NEGATIVE_DUST = 1e-12


class DensityError(Exception):
    """Base error for grid/density operations."""


class GridSizingError(DensityError):
    """A density lost all (or essentially all) of its mass to the grid edges."""


class DisjointSupportError(DensityError):
    """A pointwise product of densities came out identically zero."""


@dataclass(frozen=True)
class Grid:
    """Uniform symmetric grid of ``bins`` cell centers covering [-half_range, half_range].

    Cell k is centered at ``-half_range + (k + 0.5) * spacing`` so the grid is
    symmetric about zero and reversing a weight vector negates its support
    exactly.
    """

    bins: int
    half_range: float

    def __post_init__(self):
        if self.bins < 8:
            raise ValueError(f"need at least 8 bins, got {self.bins}")
        if not self.half_range > 0:
            raise ValueError(f"half_range must be positive, got {self.half_range}")

    @property
    def spacing(self) -> float:
        return 2.0 * self.half_range / self.bins

    @property
    def centers(self) -> np.ndarray:
        d = self.spacing
        return -self.half_range + (np.arange(self.bins) + 0.5) * d


@dataclass
class QuantizedDensity:
    """Non-negative mass vector over a :class:`Grid`."""

    grid: Grid
    weights: np.ndarray = field(repr=False)

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if w.shape != (self.grid.bins,):
            raise ValueError(f"weights shape {w.shape} does not match grid bins {self.grid.bins}")
        if np.any(w < 0) or not np.all(np.isfinite(w)):
            raise ValueError("weights must be finite and non-negative")
        self.weights = w

    def normalized(self) -> "QuantizedDensity":
        s = self.weights.sum()
        if s <= 0:
            raise DisjointSupportError("cannot normalize an all-zero density")
        return QuantizedDensity(self.grid, self.weights / s)

    def mass(self) -> float:
        return float(self.weights.sum())

    def mean(self) -> float:
        d = self.normalized()
        return float(d.weights @ d.grid.centers)

    def argmax_center(self) -> float:
        return float(self.grid.centers[int(np.argmax(self.weights))])

    def to_csv(self, fileobj) -> None:
        """Debug dump as ``center,weight`` rows."""
        for c, w in zip(self.grid.centers, self.weights):
            fileobj.write(f"{float(c)!r},{float(w)!r}\n")


def uniform_on_grid(grid: Grid) -> QuantizedDensity:
    return QuantizedDensity(grid, np.full(grid.bins, 1.0 / grid.bins))


def choose_range(y, q: float, n: int) -> float:
    """Half-range R of the discretization for a problem with measurements ``y``.

    R = 1.2 * max(max_i |y_i|, q*n), clamped from below to 2 so the grid
    always covers {0, 1} plus slack even for tiny instances.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if not 0.0 <= q <= 1.0:
        raise ValueError(f"q must be in [0, 1], got {q}")
    y = np.asarray(y, dtype=float)
    peak = float(np.max(np.abs(y))) if y.size else 0.0
    r = 1.2 * max(peak, q * n)
    return max(r, 2.0)


def gaussian_weights(centers: np.ndarray, mean: float, variance: float) -> np.ndarray:
    """Unnormalized Gaussian mass evaluated at cell centers."""
    if variance <= 0:
        raise ValueError(f"variance must be positive, got {variance}")
    z = (centers - mean) ** 2 / (2.0 * variance)
    return np.exp(-z)


def gaussian_on_grid(grid: Grid, mean: float, variance: float) -> QuantizedDensity:
    w = gaussian_weights(grid.centers, mean, variance)
    s = w.sum()
    if s <= 0:
        raise GridSizingError(
            f"Gaussian at mean={mean} variance={variance} has no mass on "
            f"[-{grid.half_range}, {grid.half_range}]; grid is mis-sized"
        )
    return QuantizedDensity(grid, w / s)


def mixture_on_grid(grid: Grid, components) -> QuantizedDensity:
    """Gaussian mixture from (weight, mean, variance) triples, normalized."""
    comps = list(components)
    if not comps:
        raise ValueError("mixture needs at least one component")
    centers = grid.centers
    w = np.zeros(grid.bins)
    for cw, mu, var in comps:
        if cw < 0:
            raise ValueError(f"mixture weight must be non-negative, got {cw}")
        w += cw * gaussian_weights(centers, mu, var)
    s = w.sum()
    if s <= 0:
        raise GridSizingError("mixture has no mass on the grid; grid is mis-sized")
    return QuantizedDensity(grid, w / s)


def _check_same_grid(a: QuantizedDensity, b: QuantizedDensity) -> None:
    if a.grid != b.grid:
        raise ValueError("densities live on different grids")


def product(a: QuantizedDensity, b: QuantizedDensity) -> QuantizedDensity:
    """Pointwise product, normalized."""
    _check_same_grid(a, b)
    w = a.weights * b.weights
    s = w.sum()
    if s <= 0:
        raise DisjointSupportError("product of disjointly-supported densities is zero")
    return QuantizedDensity(a.grid, w / s)


def leave_one_out(all_product: QuantizedDensity, one_factor: QuantizedDensity) -> QuantizedDensity:
    """Divide a full product by one of its factors, with a floored divisor."""
    _check_same_grid(all_product, one_factor)
    w = all_product.weights / np.maximum(one_factor.weights, DIVISION_EPS)
    s = w.sum()
    if s <= 0:
        raise DisjointSupportError("leave-one-out division produced an all-zero density")
    return QuantizedDensity(all_product.grid, w / s)


def rescale(d: QuantizedDensity, a: float) -> QuantizedDensity:
    """Density of ``a * X`` when ``X ~ d``; represents x -> d(x/a) on the same grid.

    a = 1 is the identity and a = -1 is an exact vector reversal (the grid is
    symmetric about 0).  Other factors resample by linear interpolation and
    renormalize; mass carried outside the grid is dropped.
    """
    if a == 0:
        raise ValueError("rescale factor must be nonzero")
    if a == 1.0:
        return QuantizedDensity(d.grid, d.weights.copy())
    if a == -1.0:
        return QuantizedDensity(d.grid, d.weights[::-1].copy())
    centers = d.grid.centers
    w = np.interp(centers / a, centers, d.weights, left=0.0, right=0.0)
    s = w.sum()
    if s <= 0:
        raise GridSizingError(f"rescale by {a} moved all mass off the grid")
    return QuantizedDensity(d.grid, w / s)


def sum_conv_offset(n_inputs: int, bins: int) -> float:
    """Index offset aligning an ``n_inputs``-fold linear convolution to the grid.

    For mass vectors on cell centers -R + (k+1/2)*spacing, the full linear
    convolution entry K = sum of input indices sits at physical position
    -n*R + (K + n/2)*spacing.  Output bin r therefore reads full-convolution
    index r + offset with offset = (n-1)(bins-1)/2, a half-integer when both
    (n-1) and (bins-1) are odd, in which case the mass is split evenly
    between the two straddling bins.
    """
    return (n_inputs - 1) * (bins - 1) / 2.0


def extract_centered(full: np.ndarray, n_inputs: int, bins: int) -> np.ndarray:
    """Read the grid-aligned window out of a full linear convolution array."""
    off = sum_conv_offset(n_inputs, bins)
    r = np.arange(bins)
    if off == int(off):
        idx = r + int(off)
        out = np.where((idx >= 0) & (idx < full.shape[-1]), full[..., idx % full.shape[-1]], 0.0)
    else:
        lo = r + int(np.floor(off))
        valid_lo = (lo >= 0) & (lo < full.shape[-1])
        valid_hi = (lo + 1 >= 0) & (lo + 1 < full.shape[-1])
        a = np.where(valid_lo, full[..., lo % full.shape[-1]], 0.0)
        b = np.where(valid_hi, full[..., (lo + 1) % full.shape[-1]], 0.0)
        out = 0.5 * (a + b)
    return out


def convolve_all(kernel: QuantizedDensity, others) -> QuantizedDensity:
    """Linear convolution of ``kernel`` with every density in ``others``.

    Transforms are zero-padded to the next power of two covering the full
    linear support, multiplied pointwise, inverted, and the window centered
    per the grid's change of variables is cropped back out.  Convolving n
    densities whose means are m_1..m_n yields a density with mean sum(m_i)
    up to half-bin rounding; mass falling outside [-R, R] is discarded.
    """
    others = list(others)
    if not others:
        return QuantizedDensity(kernel.grid, kernel.weights.copy()).normalized()
    for o in others:
        _check_same_grid(kernel, o)
    b = kernel.grid.bins
    n_inputs = 1 + len(others)
    support = n_inputs * (b - 1) + 1
    length = 1 << (support - 1).bit_length()
    spec = _fft.rfft(kernel.weights, n=length)
    for o in others:
        spec *= _fft.rfft(o.weights, n=length)
    full = _fft.irfft(spec, n=length)
    w = extract_centered(full, n_inputs, b)
    w[w < 0] = 0.0  # IFFT round-off dust
    s = w.sum()
    if s <= 0:
        raise GridSizingError("convolution carried all mass outside the grid")
    return QuantizedDensity(kernel.grid, w / s)
