"""Periodic-box spectral substrate.

Fields live on an origin-centred periodic box ``[-lx/2, lx/2) x [-ly/2, ly/2)``
sampled on an ``nx x ny`` lattice. Arrays are indexed ``[i, j]`` with ``i``
running along x and ``j`` along y; spectral arrays use the standard FFT index
order along both axes.

Coefficients are normalised so that

    f(x, y) = sum_k c(k) exp(i k . x),    c(0) = mean(f),

with the phase referred to the physical origin (not to the lower-left sample),
so ``c`` can be evaluated at arbitrary points by a plain mode sum.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Literal

import numpy as np
import scipy.fft as sfft

Axis = Literal["x", "y"]

HERMITIAN_RTOL = 1e-10


@dataclass(frozen=True)
class Grid2D:
    """Uniform periodic lattice on an origin-centred box."""

    nx: int
    ny: int
    lx: float = 64.0
    ly: float = 64.0

    def __post_init__(self):
        for name, n in (("nx", self.nx), ("ny", self.ny)):
            if int(n) != n or n < 8 or n % 2:
                raise ValueError(f"{name} must be an even integer >= 8, got {n}")
        if not (self.lx > 0 and self.ly > 0):
            raise ValueError(f"box lengths must be positive, got lx={self.lx}, ly={self.ly}")
        object.__setattr__(self, "nx", int(self.nx))
        object.__setattr__(self, "ny", int(self.ny))
        object.__setattr__(self, "lx", float(self.lx))
        object.__setattr__(self, "ly", float(self.ly))

    @property
    def shape(self) -> tuple[int, int]:
        return (self.nx, self.ny)

    @property
    def dx(self) -> float:
        return self.lx / self.nx

    @property
    def dy(self) -> float:
        return self.ly / self.ny

    @property
    def area(self) -> float:
        return self.lx * self.ly

    @cached_property
    def x(self) -> np.ndarray:
        return -self.lx / 2 + self.dx * np.arange(self.nx)

    @cached_property
    def y(self) -> np.ndarray:
        return -self.ly / 2 + self.dy * np.arange(self.ny)

    @cached_property
    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        return np.meshgrid(self.x, self.y, indexing="ij")

    @cached_property
    def mode_x(self) -> np.ndarray:
        """Integer mode numbers along x in FFT order, ``-nx/2 .. nx/2-1``."""
        return np.fft.fftfreq(self.nx, 1.0 / self.nx).astype(np.int64)

    @cached_property
    def mode_y(self) -> np.ndarray:
        return np.fft.fftfreq(self.ny, 1.0 / self.ny).astype(np.int64)

    @cached_property
    def kx(self) -> np.ndarray:
        return 2 * np.pi * self.mode_x / self.lx

    @cached_property
    def ky(self) -> np.ndarray:
        return 2 * np.pi * self.mode_y / self.ly

    @cached_property
    def kx_odd(self) -> np.ndarray:
        """x-wavenumbers with the unmatched Nyquist entry set to zero.

        Used for every odd symbol so that odd multipliers map real fields
        to real fields.
        """
        k = self.kx.copy()
        k[self.nx // 2] = 0.0
        return k

    @cached_property
    def ky_odd(self) -> np.ndarray:
        k = self.ky.copy()
        k[self.ny // 2] = 0.0
        return k

    @cached_property
    def wavenumbers(self) -> tuple[np.ndarray, np.ndarray]:
        """Broadcastable ``(xi, eta)`` pair of shapes (nx, 1) and (1, ny)."""
        return self.kx[:, None], self.ky[None, :]

    @cached_property
    def wavenumbers_odd(self) -> tuple[np.ndarray, np.ndarray]:
        return self.kx_odd[:, None], self.ky_odd[None, :]

    @cached_property
    def k2(self) -> np.ndarray:
        xi, eta = self.wavenumbers
        return xi**2 + eta**2

    @cached_property
    def kabs(self) -> np.ndarray:
        return np.sqrt(self.k2)

    @cached_property
    def dealias_mask(self) -> np.ndarray:
        keep_x = np.abs(self.mode_x) <= self.nx / 3
        keep_y = np.abs(self.mode_y) <= self.ny / 3
        return keep_x[:, None] & keep_y[None, :]

    @cached_property
    def phase(self) -> np.ndarray:
        """``exp(i k . L/2) = (-1)^(mx+my)``: lattice-origin to physical-origin phase."""
        sx = np.where(self.mode_x % 2 == 0, 1.0, -1.0)
        sy = np.where(self.mode_y % 2 == 0, 1.0, -1.0)
        return sx[:, None] * sy[None, :]


@dataclass
class RealField:
    grid: Grid2D
    samples: np.ndarray

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.float64)
        if self.samples.shape != self.grid.shape:
            raise ValueError(
                f"samples shape {self.samples.shape} does not match grid {self.grid.shape}"
            )

    @classmethod
    def zeros(cls, grid: Grid2D) -> "RealField":
        return cls(grid, np.zeros(grid.shape))

    @classmethod
    def from_function(cls, grid: Grid2D, func) -> "RealField":
        X, Y = grid.mesh
        return cls(grid, np.broadcast_to(func(X, Y), grid.shape).astype(np.float64))

    def __neg__(self) -> "RealField":
        return RealField(self.grid, -self.samples)

    def __mul__(self, scalar: float) -> "RealField":
        return RealField(self.grid, self.samples * scalar)

    __rmul__ = __mul__


@dataclass
class SpectralField:
    grid: Grid2D
    coeffs: np.ndarray = field(repr=False)

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs, dtype=np.complex128)
        if self.coeffs.shape != self.grid.shape:
            raise ValueError(
                f"coeffs shape {self.coeffs.shape} does not match grid {self.grid.shape}"
            )

    @classmethod
    def zeros(cls, grid: Grid2D) -> "SpectralField":
        return cls(grid, np.zeros(grid.shape, dtype=np.complex128))


def _check_finite(arr: np.ndarray, what: str) -> None:
    if not np.all(np.isfinite(arr)):
        bad = np.argwhere(~np.isfinite(arr))
        raise ValueError(f"{what} has {len(bad)} non-finite entries, first at index {tuple(bad[0])}")


def forward(f: RealField) -> SpectralField:
    """Physical samples -> Fourier coefficients (``coeffs(0)`` is the mean)."""
    _check_finite(f.samples, "field")
    g = f.grid
    c = sfft.fft2(f.samples) / (g.nx * g.ny)
    return SpectralField(g, c * g.phase)


def hermitian_defect(coeffs: np.ndarray) -> tuple[float, tuple[int, int]]:
    """Largest ``|c(k) - conj c(-k)|`` relative to ``max |c|`` and where it occurs."""
    mirrored = np.conj(np.roll(coeffs[::-1, ::-1], 1, axis=(0, 1)))
    diff = np.abs(coeffs - mirrored)
    scale = np.max(np.abs(coeffs))
    if scale == 0.0:
        return 0.0, (0, 0)
    idx = np.unravel_index(np.argmax(diff), diff.shape)
    return float(diff[idx] / scale), (int(idx[0]), int(idx[1]))


def inverse(F: SpectralField) -> RealField:
    """Fourier coefficients -> real samples; rejects non-Hermitian input."""
    g = F.grid
    _check_finite(F.coeffs, "spectrum")
    defect, (i, j) = hermitian_defect(F.coeffs)
    if defect > HERMITIAN_RTOL:
        raise ValueError(
            f"spectrum is not Hermitian: relative defect {defect:.3e} at mode "
            f"(mx={g.mode_x[i]}, my={g.mode_y[j]})"
        )
    z = sfft.ifft2(F.coeffs * g.phase) * (g.nx * g.ny)
    return RealField(g, z.real)


def derivative(F: SpectralField, axis: Axis, order: int = 1) -> SpectralField:
    """Spectral derivative ``d^order/d(axis)^order``."""
    if order not in (1, 2, 3):
        raise ValueError(f"order must be 1, 2 or 3, got {order}")
    g = F.grid
    if axis == "x":
        k = (g.kx_odd if order % 2 else g.kx)[:, None]
    elif axis == "y":
        k = (g.ky_odd if order % 2 else g.ky)[None, :]
    else:
        raise ValueError(f"axis must be 'x' or 'y', got {axis!r}")
    return SpectralField(g, F.coeffs * (1j * k) ** order)


def dealias(F: SpectralField) -> SpectralField:
    """Two-thirds truncation along each axis."""
    return SpectralField(F.grid, np.where(F.grid.dealias_mask, F.coeffs, 0.0))


def l2_inner(f: RealField, g: RealField) -> float:
    if f.grid != g.grid:
        raise ValueError(f"grid mismatch: {f.grid} vs {g.grid}")
    return float(np.sum(f.samples * g.samples) * f.grid.dx * f.grid.dy)


def evaluate_at(
    F: SpectralField,
    x: np.ndarray,
    y: np.ndarray,
    *,
    trim: float = 1e-17,
    chunk: int = 8192,
) -> np.ndarray:
    """Trigonometric interpolant of ``F`` at arbitrary points.

    Rows and columns of the spectrum whose largest coefficient is below
    ``trim * max|c|`` are dropped before the mode sum; the interpolant is
    otherwise exact. Points are interpreted periodically.
    """
    g = F.grid
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    out_shape = np.broadcast(x, y).shape
    xs = np.broadcast_to(x, out_shape).ravel()
    ys = np.broadcast_to(y, out_shape).ravel()
    c = F.coeffs
    scale = np.max(np.abs(c))
    if scale == 0.0:
        return np.zeros(out_shape)
    rows = np.max(np.abs(c), axis=1) > trim * scale
    cols = np.max(np.abs(c), axis=0) > trim * scale
    c = c[np.ix_(rows, cols)]
    kx = g.kx[rows]
    ky = g.ky[cols]
    out = np.empty(xs.size)
    for start in range(0, xs.size, chunk):
        sl = slice(start, start + chunk)
        ey = np.exp(1j * np.outer(ys[sl], ky))
        ex = np.exp(1j * np.outer(xs[sl], kx))
        out[sl] = np.einsum("pk,pk->p", ey @ c.T, ex).real
    return out.reshape(out_shape)
