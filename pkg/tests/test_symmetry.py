import math

import numpy as np
import pytest

from mzk.functionals import A, B, JACOBIAN, gaussian, mass
from mzk.spectral import Grid2D, RealField, derivative, forward, inverse
from mzk.symmetry import (
    FrameMap,
    edge_fraction,
    energy_transfer_check,
    forward_map,
    from_symmetric,
    inverse_map,
    spectral_tail,
    to_symmetric,
)

GRID = Grid2D(128, 128, 64.0, 64.0)


@pytest.fixture(scope="module")
def v0():
    return gaussian(GRID, 1.0, 2.0, (1.5, -0.5))


@pytest.fixture(scope="module")
def u0(v0):
    return to_symmetric(v0)


def test_frame_map_constants():
    fm = FrameMap(GRID)
    assert fm.a**2 + fm.b**2 == pytest.approx(2 ** (2 / 3), rel=1e-15)
    assert 2 * (fm.a**2 - fm.b**2) / (fm.a**2 + fm.b**2) == pytest.approx(-1.0, rel=1e-15)
    assert fm.jacobian == pytest.approx(1.374730, abs=1e-6)
    assert fm.out is GRID


def test_coordinate_maps_are_inverse():
    rng = np.random.default_rng(0)
    x, y = rng.uniform(-30, 30, (2, 1000))
    xb, yb = inverse_map(*forward_map(x, y))
    assert np.max(np.abs(xb - x)) <= 1e-13 and np.max(np.abs(yb - y)) <= 1e-13


def test_constant_maps_to_constant_where_preimage_is_inside():
    # The preimage of a box of side L/2 lies inside the source box.
    small = Grid2D(32, 32, 32.0, 32.0)
    u = to_symmetric(RealField(GRID, np.full(GRID.shape, 2.5)), FrameMap(GRID, small))
    assert np.allclose(u.samples, 2.5, atol=1e-12)


def test_mass_scales_by_jacobian(v0, u0):
    assert mass(u0) / mass(v0) == pytest.approx(JACOBIAN, rel=1e-6)
    back = from_symmetric(u0)
    assert mass(back) / mass(u0) == pytest.approx(1 / JACOBIAN, rel=1e-6)


def test_roundtrip(v0, u0):
    assert np.max(np.abs(from_symmetric(u0).samples - v0.samples)) <= 1e-8


def test_zero_maps_to_zero():
    assert np.all(from_symmetric(RealField.zeros(GRID)).samples == 0)


def test_threshold_equivalence_on_random_amplitudes():
    phi_mass = 11.700896525
    rng = np.random.default_rng(1)
    base = gaussian(GRID, 1.0, 1.5)
    u_base = to_symmetric(base)
    for amp in rng.uniform(0.5, 2.0, 20):
        mv = amp**2 * mass(base)
        mu = amp**2 * mass(u_base)
        assert (math.sqrt(mu) < math.sqrt(JACOBIAN * phi_mass)) == (math.sqrt(mv) < math.sqrt(phi_mass))


@pytest.mark.parametrize("sigma", [1, -1])
def test_energy_transfer(v0, sigma):
    assert energy_transfer_check(v0, sigma=sigma) <= 1e-6


def test_energy_transfer_zero():
    assert energy_transfer_check(RealField.zeros(GRID)) == 0.0


def test_derivative_identities(v0, u0):
    U = forward(u0)
    ux, uy = derivative(U, "x").coeffs, derivative(U, "y").coeffs
    V = forward(v0)
    dvx = from_symmetric(inverse(type(U)(GRID, A * (ux + uy))))
    dvy = from_symmetric(inverse(type(U)(GRID, B * (ux - uy))))
    assert np.max(np.abs(dvx.samples - inverse(derivative(V, "x")).samples)) <= 1e-8
    assert np.max(np.abs(dvy.samples - inverse(derivative(V, "y")).samples)) <= 1e-8


def test_argmax_maps_to_image(v0, u0):
    i, j = np.unravel_index(np.argmax(v0.samples), GRID.shape)
    xp, yp = forward_map(GRID.x[i], GRID.y[j])
    k, l = np.unravel_index(np.argmax(u0.samples), GRID.shape)
    assert abs(GRID.x[k] - xp) <= GRID.dx and abs(GRID.y[l] - yp) <= GRID.dy


def test_unresolved_field_rejected_with_tail_report():
    rough = RealField(GRID, np.random.default_rng(2).standard_normal(GRID.shape))
    assert spectral_tail(rough) > 1e-4
    with pytest.raises(ValueError, match="not spectrally localized"):
        to_symmetric(rough)


def test_edge_fraction(v0, u0):
    assert edge_fraction(v0) < 1e-10
    assert edge_fraction(u0) < 1e-10
