import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mzk.spectral import (
    Grid2D,
    RealField,
    SpectralField,
    dealias,
    derivative,
    evaluate_at,
    forward,
    inverse,
    l2_inner,
)


@pytest.fixture
def grid():
    return Grid2D(32, 32, 2 * math.pi, 2 * math.pi)


def random_field(grid, seed):
    return RealField(grid, np.random.default_rng(seed).standard_normal(grid.shape))


class TestGrid:
    def test_rejects_odd_or_small(self):
        with pytest.raises(ValueError, match="even integer >= 8"):
            Grid2D(7, 8)
        with pytest.raises(ValueError, match="even integer >= 8"):
            Grid2D(8, 6)
        with pytest.raises(ValueError, match="positive"):
            Grid2D(8, 8, -1.0, 1.0)

    def test_sample_points_origin_centred(self):
        g = Grid2D(8, 16, 4.0, 8.0)
        assert g.x[0] == -2.0 and g.y[0] == -4.0
        assert np.isclose(g.x[4], 0.0) and np.isclose(g.y[8], 0.0)
        assert g.dx == 0.5 and g.dy == 0.5

    def test_wavenumber_lattice(self):
        g = Grid2D(8, 8, 4 * math.pi, 4 * math.pi)
        assert sorted(g.kx) == pytest.approx([0.5 * k for k in range(-4, 4)])


class TestForwardInverse:
    def test_constant(self, grid):
        F = forward(RealField(grid, np.full(grid.shape, 3.0)))
        assert F.coeffs[0, 0] == pytest.approx(3.0, abs=1e-13)
        rest = F.coeffs.copy()
        rest[0, 0] = 0
        assert np.max(np.abs(rest)) <= 1e-13

    def test_single_cosine(self):
        g = Grid2D(16, 16, 10.0, 10.0)
        X, _ = g.mesh
        F = forward(RealField(g, np.cos(2 * math.pi * X / g.lx)))
        big = np.argwhere(np.abs(F.coeffs) > 1e-12)
        assert len(big) == 2
        for i, j in big:
            assert g.mode_y[j] == 0 and abs(g.mode_x[i]) == 1
            assert abs(F.coeffs[i, j]) == pytest.approx(0.5, abs=1e-13)

    def test_rejects_non_finite(self, grid):
        s = np.zeros(grid.shape)
        s[3, 4] = np.nan
        with pytest.raises(ValueError):
            forward(RealField(grid, s))

    def test_inverse_zero_and_constant(self, grid):
        assert np.all(inverse(SpectralField(grid, np.zeros(grid.shape, complex))).samples == 0)
        c = np.zeros(grid.shape, complex)
        c[0, 0] = 5.0
        assert np.allclose(inverse(SpectralField(grid, c)).samples, 5.0, atol=1e-14)

    def test_inverse_rejects_non_hermitian_and_names_mode(self, grid):
        c = np.zeros(grid.shape, complex)
        c[1, 2] = 1.0
        with pytest.raises(ValueError, match=r"mx=-?1, my=-?2"):
            inverse(SpectralField(grid, c))

    @settings(max_examples=100, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_roundtrip_random(self, seed):
        g = Grid2D(16, 24, 3.0, 7.0)
        f = random_field(g, seed)
        assert np.max(np.abs(inverse(forward(f)).samples - f.samples)) <= 1e-12

    def test_forward_of_inverse(self, grid):
        F = forward(random_field(grid, 1))
        assert np.max(np.abs(forward(inverse(F)).coeffs - F.coeffs)) <= 1e-12


class TestDerivative:
    def test_cosine(self):
        g = Grid2D(32, 32, 2 * math.pi, 2 * math.pi)
        X, _ = g.mesh
        k = 3
        d = inverse(derivative(forward(RealField(g, np.cos(k * X))), "x"))
        assert np.max(np.abs(d.samples + k * np.sin(k * X))) <= 1e-12

    def test_third_order_multiplier(self):
        g = Grid2D(16, 16, 2 * math.pi, 2 * math.pi)
        c = np.zeros(g.shape, complex)
        c[2, 0] = 1.0
        out = derivative(SpectralField(g, c), "x", 3)
        assert out.coeffs[2, 0] == pytest.approx((2j) ** 3)

    def test_constant_gives_zero(self, grid):
        F = forward(RealField(grid, np.full(grid.shape, 2.5)))
        for axis in ("x", "y"):
            for order in (1, 2, 3):
                assert np.all(derivative(F, axis, order).coeffs == 0)

    def test_order_precondition(self, grid):
        F = forward(random_field(grid, 0))
        with pytest.raises(ValueError):
            derivative(F, "x", 4)
        with pytest.raises(ValueError):
            derivative(F, "z", 1)

    def test_trig_polynomial(self):
        g = Grid2D(32, 32, 4 * math.pi, 2 * math.pi)
        X, Y = g.mesh
        f = np.sin(1.5 * X) * np.cos(2 * Y) + np.cos(3 * X + Y)
        dfy = -2 * np.sin(1.5 * X) * np.sin(2 * Y) - np.sin(3 * X + Y)
        d = inverse(derivative(forward(RealField(g, f)), "y"))
        assert np.max(np.abs(d.samples - dfy)) <= 1e-11

    def test_odd_order_keeps_real_fields_real(self, grid):
        F = forward(random_field(grid, 2))
        inverse(derivative(F, "x", 1))
        inverse(derivative(F, "y", 3))

    def test_commutes_with_dealias(self, grid):
        F = forward(random_field(grid, 3))
        a = derivative(dealias(F), "x", 3).coeffs
        b = dealias(derivative(F, "x", 3)).coeffs
        assert np.array_equal(a, b)


class TestDealias:
    def test_low_modes_unchanged(self, grid):
        c = np.zeros(grid.shape, complex)
        c[2, 0], c[-2, 0] = 0.5, 0.5
        c[0, 3], c[0, -3] = -0.5j, 0.5j
        F = SpectralField(grid, c)
        assert np.array_equal(dealias(F).coeffs, F.coeffs)

    def test_nyquist_zeroed(self, grid):
        c = np.zeros(grid.shape, complex)
        c[grid.nx // 2, 0] = 1.0
        assert np.all(dealias(SpectralField(grid, c)).coeffs == 0)

    def test_idempotent(self, grid):
        D = dealias(forward(random_field(grid, 4)))
        assert np.array_equal(dealias(D).coeffs, D.coeffs)


class TestL2Inner:
    def test_gaussian_mass(self):
        g = Grid2D(128, 128, 40.0, 40.0)
        X, Y = g.mesh
        A = 1.7
        f = RealField(g, A * np.exp(-(X**2 + Y**2) / 2))
        assert l2_inner(f, f) == pytest.approx(A**2 * math.pi, rel=1e-10)

    def test_zero(self, grid):
        assert l2_inner(random_field(grid, 5), RealField.zeros(grid)) == 0.0

    def test_parseval(self, grid):
        f = random_field(grid, 6)
        spectral = grid.area * np.sum(np.abs(forward(f).coeffs) ** 2)
        assert spectral == pytest.approx(l2_inner(f, f), rel=1e-12)

    def test_grid_mismatch(self, grid):
        with pytest.raises(ValueError, match="grid"):
            l2_inner(random_field(grid, 0), random_field(Grid2D(16, 16), 0))


def test_evaluate_at_reproduces_samples_and_off_lattice_values():
    g = Grid2D(32, 32, 2 * math.pi, 2 * math.pi)
    X, Y = g.mesh
    F = forward(RealField(g, np.cos(2 * X - Y) + 0.5 * np.sin(X)))
    assert np.allclose(evaluate_at(F, X, Y), np.cos(2 * X - Y) + 0.5 * np.sin(X), atol=1e-13)
    xs, ys = np.array([0.1234, -2.0]), np.array([1.5, 0.77])
    assert np.allclose(evaluate_at(F, xs, ys), np.cos(2 * xs - ys) + 0.5 * np.sin(xs), atol=1e-13)
