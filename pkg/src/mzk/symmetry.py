"""Change of variables between the original and the symmetrized mZK frames.

The map is ``(x, y) -> (x', y') = (a x + b y, a x - b y)`` with the fixed
constants ``a = 2^(-2/3)``, ``b = sqrt(3) 2^(-2/3)``; its Jacobian is ``2ab``.
Fields are resampled by exact trigonometric interpolation and treated as zero
outside their own periodic cell (the cell stands in for the whole plane).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .functionals import A, B, JACOBIAN, EquationFrame, energy_original, energy_symmetrized
from .spectral import Grid2D, RealField, forward, evaluate_at

LOCALIZATION_FRACTION = 1e-4


@dataclass(frozen=True)
class FrameMap:
    grid_in: Grid2D
    grid_out: Grid2D | None = None

    @property
    def a(self) -> float:
        return A

    @property
    def b(self) -> float:
        return B

    @property
    def jacobian(self) -> float:
        return JACOBIAN

    @property
    def out(self) -> Grid2D:
        return self.grid_out if self.grid_out is not None else self.grid_in


def forward_map(x, y):
    """Original coordinates -> symmetrized coordinates."""
    return A * x + B * y, A * x - B * y


def inverse_map(xp, yp):
    """Symmetrized coordinates -> original coordinates."""
    return (xp + yp) / (2 * A), (xp - yp) / (2 * B)


def spectral_tail(f: RealField) -> float:
    """Fraction of the discrete mass carried by modes outside the 2/3 band."""
    F = forward(f)
    p = np.abs(F.coeffs) ** 2
    total = float(np.sum(p))
    if total == 0.0:
        return 0.0
    return float(np.sum(p[~f.grid.dealias_mask]) / total)


def _resample(f: RealField, grid_out: Grid2D, coord_map) -> RealField:
    tail = spectral_tail(f)
    if tail > LOCALIZATION_FRACTION:
        raise ValueError(
            f"field is not spectrally localized: {tail:.3e} of its mass lies above "
            f"2/3 Nyquist (limit {LOCALIZATION_FRACTION:g}); refine the grid"
        )
    g = f.grid
    Xo, Yo = grid_out.mesh
    xs, ys = coord_map(Xo, Yo)
    vals = evaluate_at(forward(f), xs, ys)
    # Zero outside the source cell: the cell is a proxy for R^2, not a torus.
    inside = (
        (xs >= -g.lx / 2) & (xs < g.lx / 2) & (ys >= -g.ly / 2) & (ys < g.ly / 2)
    )
    return RealField(grid_out, np.where(inside, vals, 0.0))


def to_symmetric(v: RealField, fmap: FrameMap | None = None) -> RealField:
    """``u(x', y') = v(x, y)``."""
    fmap = fmap or FrameMap(v.grid)
    return _resample(v, fmap.out, inverse_map)


def from_symmetric(u: RealField, fmap: FrameMap | None = None) -> RealField:
    """``v(x, y) = u(a x + b y, a x - b y)``."""
    fmap = fmap or FrameMap(u.grid)
    return _resample(u, fmap.out, forward_map)


def edge_fraction(f: RealField, band: int = 4) -> float:
    """Largest |f| in a ``band``-cell strip along the box edge, relative to max |f|."""
    peak = float(np.max(np.abs(f.samples)))
    if peak == 0.0:
        return 0.0
    s = np.abs(f.samples)
    edge = max(s[:band].max(), s[-band:].max(), s[:, :band].max(), s[:, -band:].max())
    return float(edge / peak)


def energy_transfer_check(v: RealField, fmap: FrameMap | None = None, sigma: int = 1) -> float:
    """Relative mismatch in ``E[u] = 2ab/(a^2+b^2) * Energy[v]`` after resampling."""
    u = to_symmetric(v, fmap)
    e_orig = energy_original(v, EquationFrame("original", sigma))
    e_sym = energy_symmetrized(u, EquationFrame("symmetrized", sigma))
    factor = JACOBIAN / (A**2 + B**2)
    return abs(e_sym - factor * e_orig) / (1.0 + abs(e_orig))
