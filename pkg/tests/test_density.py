"""Grid and quantized-density algebra tests.

The convolution oracle here is a direct O(b^2) accumulation over pairs of
cell centers, splitting each product mass linearly between the two nearest
output bins -- independent of the FFT path it checks.
"""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from faultbp.density import (
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


def direct_convolve(grid: Grid, wa: np.ndarray, wb: np.ndarray) -> np.ndarray:
    """Independent O(b^2) linear convolution of two mass vectors."""
    c = grid.centers
    spacing = grid.spacing
    out = np.zeros(grid.bins)
    pos = c[:, None] + c[None, :]
    frac_idx = (pos - c[0]) / spacing
    lo = np.floor(frac_idx).astype(int)
    frac = frac_idx - lo
    mass = wa[:, None] * wb[None, :]
    for shift, weight in ((lo, (1.0 - frac) * mass), (lo + 1, frac * mass)):
        valid = (shift >= 0) & (shift < grid.bins)
        np.add.at(out, shift[valid], weight[valid])
    return out / out.sum()


def random_density(grid: Grid, rng) -> QuantizedDensity:
    return QuantizedDensity(grid, rng.random(grid.bins)).normalized()


class TestGrid:
    def test_centers_symmetric_about_zero(self):
        g = Grid(16, 3.0)
        np.testing.assert_allclose(g.centers, -g.centers[::-1], atol=0)

    def test_spacing(self):
        g = Grid(10, 5.0)
        assert g.spacing == pytest.approx(1.0)

    def test_too_few_bins_rejected(self):
        with pytest.raises(ValueError):
            Grid(4, 1.0)

    def test_nonpositive_range_rejected(self):
        with pytest.raises(ValueError):
            Grid(16, 0.0)


class TestChooseRange:
    def test_measurement_dominated(self):
        # 1.2 * max(5, 40) with q*n = 0.2*200
        assert choose_range([3.0, -5.0], 0.2, 200) == pytest.approx(48.0)

    def test_degenerate_clamp(self):
        assert choose_range([0.0], 0.0, 1) == pytest.approx(2.0)

    def test_large_measurement(self):
        y = np.zeros(5)
        y[2] = -100.0
        assert choose_range(y, 0.2, 200) == pytest.approx(120.0)

    def test_invalid_q(self):
        with pytest.raises(ValueError):
            choose_range([1.0], 1.5, 10)


class TestGaussianOnGrid:
    def test_symmetric_mean_zero(self):
        g = Grid(64, 2.0)
        d = gaussian_on_grid(g, 0.0, 0.1)
        np.testing.assert_allclose(d.weights, d.weights[::-1], rtol=1e-12)

    def test_normalized(self):
        g = Grid(128, 4.0)
        d = gaussian_on_grid(g, 1.0, 0.3)
        assert d.weights.sum() == pytest.approx(1.0, abs=1e-12)

    def test_off_grid_mean_raises(self):
        g = Grid(64, 2.0)
        with pytest.raises(GridSizingError):
            gaussian_on_grid(g, 1e6, 1e-4)

    def test_bad_variance(self):
        g = Grid(64, 2.0)
        with pytest.raises(ValueError):
            gaussian_on_grid(g, 0.0, 0.0)


class TestMixtureOnGrid:
    def test_two_lobe_mass_ratio(self):
        """Bernoulli-style relaxed prior keeps the 0.12/0.88 lobe ratio."""
        g = Grid(1024, 2.0)
        var = (4 * g.spacing) ** 2
        p = 0.12
        d = mixture_on_grid(g, [(p, 1.0, var), (1.0 - p, 0.0, var)])
        upper = d.weights[g.centers > 0.5].sum()
        lower = d.weights[g.centers <= 0.5].sum()
        assert upper / lower == pytest.approx(p / (1 - p), rel=1e-6)

    def test_wide_variance_approaches_uniform(self):
        g = Grid(256, 2.0)
        d = mixture_on_grid(g, [(1.0, 0.0, (10 * 2.0 * g.half_range) ** 2)])
        u = uniform_on_grid(g)
        kl = np.sum(d.weights * np.log(d.weights / u.weights))
        assert kl < 1e-3

    def test_empty_mixture_rejected(self):
        with pytest.raises(ValueError):
            mixture_on_grid(Grid(16, 1.0), [])


class TestProductAndDivision:
    def test_uniform_is_identity(self):
        g = Grid(64, 2.0)
        rng = np.random.default_rng(1)
        d = random_density(g, rng)
        np.testing.assert_allclose(product(d, uniform_on_grid(g)).weights, d.weights,
                                   rtol=1e-12)

    def test_gaussian_product_recenters(self):
        g = Grid(512, 2.0)
        a = gaussian_on_grid(g, 0.0, 0.1)
        b = gaussian_on_grid(g, 1.0, 0.1)
        expect = gaussian_on_grid(g, 0.5, 0.05)
        np.testing.assert_allclose(product(a, b).weights, expect.weights, atol=1e-9)

    def test_disjoint_support_raises(self):
        g = Grid(16, 2.0)
        a = np.zeros(16)
        a[2] = 1.0
        b = np.zeros(16)
        b[10] = 1.0
        with pytest.raises(DisjointSupportError):
            product(QuantizedDensity(g, a), QuantizedDensity(g, b))

    def test_grid_mismatch_raises(self):
        with pytest.raises(ValueError):
            product(uniform_on_grid(Grid(16, 2.0)), uniform_on_grid(Grid(16, 3.0)))

    def test_leave_one_out_matches_recomputation(self):
        """Divide-out path vs direct product of the remaining factors."""
        g = Grid(128, 2.0)
        rng = np.random.default_rng(7)
        lobes = [random_density(g, rng) for _ in range(3)]
        # keep weights comfortably above the division floor
        lobes = [QuantizedDensity(g, d.weights + 0.1).normalized() for d in lobes]
        full = product(product(lobes[0], lobes[1]), lobes[2])
        loo = leave_one_out(full, lobes[1])
        direct = product(lobes[0], lobes[2])
        assert np.abs(loo.weights - direct.weights).sum() < 1e-8


class TestRescale:
    def test_identity(self):
        g = Grid(64, 2.0)
        d = random_density(g, np.random.default_rng(3))
        np.testing.assert_array_equal(rescale(d, 1.0).weights, d.weights)

    def test_reversal_exact(self):
        g = Grid(64, 2.0)
        d = random_density(g, np.random.default_rng(4))
        np.testing.assert_array_equal(rescale(d, -1.0).weights, d.weights[::-1])

    def test_double_reversal_roundtrip(self):
        g = Grid(64, 2.0)
        d = random_density(g, np.random.default_rng(5))
        np.testing.assert_array_equal(rescale(rescale(d, -1.0), -1.0).weights, d.weights)

    def test_stretch_moves_point_mass(self):
        g = Grid(256, 2.0)
        w = np.zeros(256)
        w[np.argmin(np.abs(g.centers - 0.5))] = 1.0
        d = QuantizedDensity(g, w)
        out = rescale(d, 2.0)
        assert abs(out.mean() - 1.0) <= g.spacing

    def test_zero_factor_rejected(self):
        g = Grid(16, 2.0)
        with pytest.raises(ValueError):
            rescale(uniform_on_grid(g), 0.0)

    @given(st.floats(min_value=0.25, max_value=4.0), st.integers(0, 2**32 - 1))
    @settings(max_examples=25, deadline=None)
    def test_rescale_preserves_normalization(self, factor, seed):
        g = Grid(64, 4.0)
        d = random_density(g, np.random.default_rng(seed))
        out = rescale(d, factor)
        assert out.weights.min() >= 0
        assert out.weights.sum() == pytest.approx(1.0, abs=1e-9)


class TestConvolveAll:
    def test_empty_list_returns_kernel(self):
        g = Grid(32, 2.0)
        d = random_density(g, np.random.default_rng(0))
        np.testing.assert_allclose(convolve_all(d, []).weights, d.weights)

    def test_delta_pair_lands_at_sum(self):
        g = Grid(64, 4.0)
        for i, j in [(20, 30), (32, 32), (10, 45)]:
            a = np.zeros(64)
            a[i] = 1.0
            b = np.zeros(64)
            b[j] = 1.0
            out = convolve_all(QuantizedDensity(g, a), [QuantizedDensity(g, b)])
            assert out.mean() == pytest.approx(g.centers[i] + g.centers[j], abs=1e-9)
            assert out.weights.max() >= 0.5  # at most a two-bin straddle

    def test_gaussian_closure(self):
        g = Grid(1024, 2.0)
        a = gaussian_on_grid(g, 0.0, 0.04)
        b = gaussian_on_grid(g, 0.0, 0.06)
        out = convolve_all(a, [b])
        ref = gaussian_on_grid(g, 0.0, 0.10)
        assert np.abs(out.weights - ref.weights).sum() < 1e-3

    def test_matches_direct_convolution(self):
        g = Grid(64, 3.0)
        rng = np.random.default_rng(11)
        for _ in range(25):
            a = random_density(g, rng)
            b = random_density(g, rng)
            fft_path = convolve_all(a, [b]).weights
            direct = direct_convolve(g, a.weights, b.weights)
            assert np.abs(fft_path - direct).max() < 1e-10

    def test_order_invariance(self):
        g = Grid(64, 6.0)
        rng = np.random.default_rng(13)
        ds = [random_density(g, rng) for _ in range(4)]
        base = convolve_all(ds[0], ds[1:]).weights
        perm = convolve_all(ds[2], [ds[3], ds[0], ds[1]]).weights
        assert np.abs(base - perm).max() < 1e-10

    def test_three_fold_delta_exact(self):
        """Odd input counts land back on the grid with no straddle."""
        g = Grid(64, 4.0)
        w = np.zeros(64)
        w[40] = 1.0  # center 1.0625
        d = QuantizedDensity(g, w)
        out = convolve_all(d, [d, d])
        assert out.weights[np.argmax(out.weights)] == pytest.approx(1.0)
        assert out.mean() == pytest.approx(3 * g.centers[40], abs=1e-12)

    def test_grid_mismatch_raises(self):
        with pytest.raises(ValueError):
            convolve_all(uniform_on_grid(Grid(16, 2.0)), [uniform_on_grid(Grid(32, 2.0))])

    def test_nonnegative_normalized_output(self):
        g = Grid(128, 5.0)
        rng = np.random.default_rng(17)
        ds = [random_density(g, rng) for _ in range(3)]
        out = convolve_all(ds[0], ds[1:])
        assert out.weights.min() >= 0
        assert out.weights.sum() == pytest.approx(1.0, abs=1e-12)


class TestQuantizedDensity:
    def test_rejects_negative_weights(self):
        with pytest.raises(ValueError):
            QuantizedDensity(Grid(16, 1.0), -np.ones(16))

    def test_rejects_wrong_length(self):
        with pytest.raises(ValueError):
            QuantizedDensity(Grid(16, 1.0), np.ones(8))

    def test_normalize_tolerance(self):
        d = QuantizedDensity(Grid(16, 1.0), np.full(16, 3.7)).normalized()
        assert abs(d.weights.sum() - 1.0) < 1e-12

    def test_csv_dump_roundtrips(self, tmp_path):
        g = Grid(16, 1.0)
        d = random_density(g, np.random.default_rng(23))
        path = tmp_path / "density.csv"
        with open(path, "w") as fh:
            d.to_csv(fh)
        rows = np.loadtxt(path, delimiter=",")
        np.testing.assert_array_equal(rows[:, 0], g.centers)
        np.testing.assert_array_equal(rows[:, 1], d.weights)
