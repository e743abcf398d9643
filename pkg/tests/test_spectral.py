import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from numpy.testing import assert_allclose

from psslab.spectral import (
    Field,
    PeriodicGrid,
    SpectralCoeffs,
    _gregory_weights,
    dealias,
    differentiate,
    green_convolve,
    green_kernel,
    helmholtz_solve,
    sobolev_norm,
    transform,
)
from psslab.verification import random_smooth_field

TWO_PI = 2 * np.pi


@pytest.fixture
def grid():
    return PeriodicGrid(256)


class TestGrid:
    def test_nodes_and_modes(self):
        g = PeriodicGrid(8)
        assert_allclose(g.x, np.arange(8) / 8)
        assert list(g.modes) == [0, 1, 2, 3, -4, -3, -2, -1]

    @pytest.mark.parametrize("n", [7, 6, 0, 255])
    def test_rejects_bad_sizes(self, n):
        with pytest.raises(ValueError):
            PeriodicGrid(n)

    def test_field_is_read_only(self, grid):
        f = Field(grid, np.zeros(256))
        with pytest.raises(ValueError):
            f.values[0] = 1.0

    def test_field_rejects_nonfinite_and_wrong_shape(self, grid):
        with pytest.raises(ValueError):
            Field(grid, np.full(256, np.nan))
        with pytest.raises(ValueError):
            Field(grid, np.zeros(128))


class TestTransform:
    def test_constant_single_mode(self, grid):
        c = transform(Field(grid, np.ones(256)))
        assert c.mode(0) == pytest.approx(1.0, abs=1e-15)
        assert np.abs(c.coeffs[1:]).max() < 1e-15

    def test_cosine_modes(self, grid):
        c = transform(Field.from_function(grid, lambda x: np.cos(TWO_PI * 3 * x)))
        assert c.mode(3) == pytest.approx(0.5)
        assert c.mode(-3) == pytest.approx(0.5)
        assert c.is_hermitian()

    def test_roundtrip(self, grid):
        f = Field(grid, np.random.default_rng(0).standard_normal(256))
        back = transform(transform(f), "inverse")
        assert_allclose(back.values, f.values, rtol=0, atol=1e-13 * np.abs(f.values).max())

    def test_direction_errors(self, grid):
        f = Field(grid, np.zeros(256))
        with pytest.raises(TypeError):
            transform(f, "inverse")
        with pytest.raises(ValueError):
            transform(f, "sideways")

    def test_mode_out_of_range(self, grid):
        with pytest.raises(IndexError):
            transform(Field(grid, np.zeros(256))).mode(128)


class TestDifferentiate:
    def test_cos_first_derivative(self, grid):
        f = Field.from_function(grid, lambda x: np.cos(TWO_PI * x))
        assert np.abs(differentiate(f).values + TWO_PI * np.sin(TWO_PI * grid.x)).max() <= 1e-11

    @pytest.mark.parametrize("n", [16, 64, 128])
    def test_sin_second_derivative(self, n):
        g = PeriodicGrid(n)
        f = Field.from_function(g, lambda x: np.sin(2 * TWO_PI * x))
        exact = -16 * np.pi**2 * np.sin(2 * TWO_PI * g.x)
        assert np.abs(differentiate(f, 2).values - exact).max() <= 1e-10

    def test_sin_second_derivative_roundoff_floor(self, grid):
        # Sample round-off is amplified by up to (pi N)^2 ~ 6.5e5 at N = 256.
        f = Field.from_function(grid, lambda x: np.sin(2 * TWO_PI * x))
        exact = -16 * np.pi**2 * np.sin(2 * TWO_PI * grid.x)
        assert np.abs(differentiate(f, 2).values - exact).max() <= 1e-9

    @pytest.mark.parametrize("order", [1, 2, 3, 4, 5])
    def test_constant_has_zero_derivatives(self, grid, order):
        assert np.abs(differentiate(Field(grid, np.full(256, 3.0)), order).values).max() < 1e-12

    def test_nyquist_odd_derivative_is_zero(self):
        g = PeriodicGrid(16)
        f = Field(g, np.cos(np.pi * 16 * g.x))
        assert np.abs(differentiate(f, 1).values).max() < 1e-12
        assert_allclose(differentiate(f, 2).values, -(np.pi * 16) ** 2 * f.values, atol=1e-9)

    @pytest.mark.parametrize("order", [0, 6, -1])
    def test_order_validation(self, grid, order):
        with pytest.raises(ValueError):
            differentiate(Field(grid, np.zeros(256)), order)


class TestHelmholtz:
    def test_constant(self, grid):
        assert_allclose(helmholtz_solve(Field(grid, np.ones(256))).values, 1.0, atol=1e-15)

    def test_eigenfunction(self, grid):
        f = Field.from_function(grid, lambda x: np.cos(TWO_PI * x))
        assert_allclose(helmholtz_solve(f).values, f.values / (1 + 4 * np.pi**2), atol=1e-15)

    def test_forward_operator_oracle(self, grid):
        f = random_smooth_field(grid, np.random.default_rng(3), amplitude=1.0)
        g = helmholtz_solve(f).values
        assert np.abs(g - grid.derivative(g, 2) - f.values).max() <= 1e-10


class TestGreen:
    def test_kernel_values(self):
        s = 2 * np.sinh(0.5)
        assert green_kernel(0.0) == pytest.approx(np.cosh(0.5) / s)
        assert green_kernel(0.5) == pytest.approx(1 / s)
        assert green_kernel(1.25) == pytest.approx(green_kernel(0.25))
        assert green_kernel(-0.25) == pytest.approx(green_kernel(0.75))

    def test_kernel_is_symmetric_and_continuous(self):
        x = np.linspace(0.01, 0.99, 50)
        assert_allclose(green_kernel(x), green_kernel(1 - x), rtol=1e-14)
        assert green_kernel(1e-12) == pytest.approx(green_kernel(1 - 1e-12), rel=1e-10)

    def test_kernel_solves_helmholtz_away_from_kink(self):
        x = np.linspace(0.1, 0.9, 9)
        h = 1e-4
        g2 = (green_kernel(x + h) - 2 * green_kernel(x) + green_kernel(x - h)) / h**2
        assert_allclose(green_kernel(x) - g2, 0.0, atol=1e-6)

    def test_kernel_jump_in_derivative(self):
        # g'(0+) - g'(0-) = -1 is the delta source of 1 - d^2/dx^2.
        h = 1e-7
        right = (green_kernel(2 * h) - green_kernel(h)) / h
        left = (green_kernel(-h) - green_kernel(-2 * h)) / h
        assert right - left == pytest.approx(-1.0, abs=1e-5)

    def test_constant(self, grid):
        assert_allclose(green_convolve(Field(grid, np.ones(256))).values, 1.0, atol=1e-13)

    def test_eigenfunction(self, grid):
        f = Field.from_function(grid, lambda x: np.cos(TWO_PI * x))
        assert np.abs(green_convolve(f).values - f.values / (1 + 4 * np.pi**2)).max() <= 1e-9

    def test_gregory_weights_symmetry_of_low_orders(self):
        # q = 2 gives the classic -1/12, +1/12 corrections.
        assert_allclose(_gregory_weights(2), (-1 / 12, 1 / 12), rtol=1e-14)

    def test_small_grid_falls_back_to_lower_order(self):
        g = PeriodicGrid(8)
        f = Field(g, np.ones(8))
        assert_allclose(green_convolve(f).values, 1.0, atol=1e-5)

    @settings(max_examples=15, deadline=None)
    @given(st.integers(min_value=0, max_value=2**32 - 1))
    def test_matches_spectral_solve(self, seed):
        g = PeriodicGrid(128)
        f = random_smooth_field(g, np.random.default_rng(seed), amplitude=1.0)
        assert np.abs(green_convolve(f).values - helmholtz_solve(f).values).max() <= 1e-10


class TestSobolev:
    @pytest.mark.parametrize("s", [-1.0, 0.0, 1.5, 3.0])
    def test_constant(self, grid, s):
        assert sobolev_norm(Field(grid, np.ones(256)), s) == pytest.approx(1.0)

    def test_cos_l2(self, grid):
        f = Field.from_function(grid, lambda x: np.cos(TWO_PI * x))
        assert sobolev_norm(f, 0.0) == pytest.approx(1 / np.sqrt(2), rel=1e-13)

    def test_cos_h1_weight(self, grid):
        f = Field.from_function(grid, lambda x: np.cos(TWO_PI * 2 * x))
        assert sobolev_norm(f, 1.0) == pytest.approx(np.sqrt(5 / 2), rel=1e-13)

    @settings(max_examples=20, deadline=None)
    @given(st.floats(min_value=-2, max_value=3), st.floats(min_value=0.0, max_value=1.0))
    def test_monotone_in_s(self, s, ds):
        f = random_smooth_field(PeriodicGrid(64), np.random.default_rng(1))
        assert sobolev_norm(f, s + ds) >= sobolev_norm(f, s) * (1 - 1e-12)


class TestDealias:
    def test_truncated_spectrum_unchanged(self, grid):
        coeffs = np.zeros(256, complex)
        coeffs[[0, 5, -5, 85, -85]] = [1.0, 0.5j, -0.5j, 0.25, 0.25]
        c = SpectralCoeffs(grid, coeffs)
        assert np.array_equal(dealias(c).coeffs, c.coeffs)

    def test_high_mode_zeroed(self, grid):
        coeffs = np.zeros(256, complex)
        coeffs[127] = coeffs[-127] = 1.0
        coeffs[85] = 2.0
        out = dealias(SpectralCoeffs(grid, coeffs))
        assert out.mode(127) == 0 and out.mode(-127) == 0
        assert out.mode(85) == 2.0

    def test_cutoff_boundary(self, grid):
        coeffs = np.ones(256, complex)
        kept = np.abs(grid.modes) <= 256 / 3
        assert_allclose(dealias(SpectralCoeffs(grid, coeffs)).coeffs, kept.astype(float))

    def test_mask_matches_rfft_half(self, grid):
        assert grid.dealias_mask.sum() == 86
