"""Ground state of ``Δφ - φ + φ^3 = 0`` by Petviashvili iteration.

The radial positive solution (the 2D cubic Townes profile) fixes the mass
threshold for focusing data and is the extremiser of the sharp
Gagliardo-Nirenberg inequality ``||f||_4^4 <= (2/||φ||_2^2) ||f||_2^2 ||∇f||_2^2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.fft as sfft

from .functionals import JACOBIAN, EquationFrame, grad_norm_sq, l4_norm_4, mass
from .spectral import Grid2D, RealField, evaluate_at, forward

PETVIASHVILI_EXPONENT = 1.5  # p/(p-1) for the cubic power


class ConvergenceError(RuntimeError):
    pass


@dataclass
class GroundState:
    phi: RealField
    mass: float
    grad_sq: float
    l4_4: float
    residual: float
    iterations: int
    stabilization: float = 1.0
    tol: float = 1e-8

    @property
    def grid(self) -> Grid2D:
        return self.phi.grid

    @property
    def converged(self) -> bool:
        return self.mass > 0 and self.residual <= self.tol


def residual_norm(phi: RealField) -> float:
    """``||Δφ - φ + φ^3||_2`` with spectral derivatives."""
    g = phi.grid
    lap = sfft.ifft2(-g.k2 * sfft.fft2(phi.samples)).real
    r = lap - phi.samples + phi.samples**3
    return math.sqrt(float(np.sum(r * r)) * g.dx * g.dy)


def petviashvili(
    grid: Grid2D,
    tol: float = 1e-8,
    max_iter: int = 500,
    seed_width: float = 2.0,
) -> GroundState:
    """Normalised fixed-point iteration ``φ <- M^{3/2} (1-Δ)^{-1} φ^3``.

    ``M = <(1-Δ)φ, φ> / <φ^3, φ>`` tends to 1 at the fixed point.
    """
    if not seed_width > 0:
        raise ValueError(f"seed_width must be positive, got {seed_width}")
    X, Y = grid.mesh
    phi = np.exp(-(X**2 + Y**2) / (2 * seed_width**2))
    symbol = 1.0 + grid.k2
    phi_hat = sfft.fft2(phi)
    m_n = math.nan
    for it in range(1, max_iter + 1):
        cube_hat = sfft.fft2(phi**3)
        num = float(np.sum(symbol * np.abs(phi_hat) ** 2))
        den = float(np.real(np.sum(cube_hat * np.conj(phi_hat))))
        if not (den > 0 and num > 0) or not math.isfinite(num / den):
            raise ConvergenceError(
                f"iteration collapsed at step {it} (numerator {num:.3e}, denominator {den:.3e}); "
                f"try a different seed_width than {seed_width}"
            )
        m_n = num / den
        if m_n < 1e-8 or m_n > 1e8:
            raise ConvergenceError(
                f"stabilizing factor M = {m_n:.3e} degenerated at step {it}; "
                f"try a different seed_width than {seed_width}"
            )
        new_hat = m_n**PETVIASHVILI_EXPONENT * cube_hat / symbol
        new = sfft.ifft2(new_hat).real
        step_size = math.sqrt(float(np.sum((new - phi) ** 2)) / float(np.sum(phi**2)))
        phi, phi_hat = new, sfft.fft2(new)
        if step_size <= tol:
            field = RealField(grid, phi)
            res = residual_norm(field)
            if res <= tol:
                return GroundState(
                    phi=field,
                    mass=mass(field),
                    grad_sq=grad_norm_sq(field),
                    l4_4=l4_norm_4(field),
                    residual=res,
                    iterations=it,
                    stabilization=m_n,
                    tol=tol,
                )
    raise ConvergenceError(
        f"no convergence in {max_iter} iterations; last residual "
        f"{residual_norm(RealField(grid, phi)):.3e}, M = {m_n:.12f}"
    )


@lru_cache(maxsize=8)
def ground_state(grid: Grid2D, tol: float = 1e-10) -> GroundState:
    """Cached ground state on ``grid``."""
    return petviashvili(grid, tol=tol, max_iter=2000)


def pohozaev_ratios(phi: RealField) -> tuple[float, float]:
    m = mass(phi)
    if m == 0:
        raise ValueError("Pohozaev ratios are undefined for the zero field")
    return grad_norm_sq(phi) / m - 1.0, l4_norm_4(phi) / (2.0 * m) - 1.0


def pohozaev_check(gs: GroundState) -> tuple[float, float]:
    """``(||∇φ||²/||φ||² - 1, ||φ||_4^4 / (2||φ||²) - 1)``; both vanish for the ground state."""
    if not gs.converged:
        raise ValueError(f"ground state not converged (residual {gs.residual:.3e}, mass {gs.mass})")
    return gs.grad_sq / gs.mass - 1.0, gs.l4_4 / (2.0 * gs.mass) - 1.0


def gn_ratio(f: RealField) -> float:
    """``||f||_4^4 / (||f||_2^2 ||∇f||_2^2)``."""
    return l4_norm_4(f) / (mass(f) * grad_norm_sq(f))


def sharp_gn_constant(gs: GroundState) -> float:
    if not gs.converged:
        raise ValueError("ground state not converged")
    return gs.l4_4 / (gs.mass * gs.grad_sq)


def threshold_mass(frame: EquationFrame, gs: GroundState) -> float:
    """Squared L² threshold: ``||φ||²`` (original) or ``2ab ||φ||²`` (symmetrized)."""
    return gs.mass if frame.frame == "original" else JACOBIAN * gs.mass


def dilate(phi: RealField, c: float, grid: Grid2D | None = None) -> RealField:
    """``sqrt(c) φ(sqrt(c) x, sqrt(c) y)``: profile of the speed-``c`` solitary wave."""
    grid = grid or phi.grid
    r = math.sqrt(c)
    X, Y = grid.mesh
    xs, ys = r * X, r * Y
    g = phi.grid
    inside = (np.abs(xs) < g.lx / 2) & (np.abs(ys) < g.ly / 2)
    vals = evaluate_at(forward(phi), xs, ys)
    return RealField(grid, r * np.where(inside, vals, 0.0))


def anisotropy(phi: RealField) -> float:
    """Relative change of ``phi`` under a 90-degree rotation of a square lattice."""
    g = phi.grid
    if g.nx != g.ny or g.lx != g.ly:
        raise ValueError("rotation check needs a square lattice")
    idx = (-np.arange(g.nx)) % g.nx
    rotated = phi.samples.T[:, idx]  # (x, y) -> (y, -x)
    return float(np.max(np.abs(rotated - phi.samples)) / np.max(np.abs(phi.samples)))
