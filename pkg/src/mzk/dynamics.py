"""Time integration of mZK in either frame.

The linear part is propagated exactly in Fourier space and the cubic term is
handled by classical RK4 in the interaction picture (integrating-factor RK4).
Internally the state is the half spectrum of an ``rfft2`` along y, normalised
by ``nx*ny`` and referred to the lattice origin; conversion to the public
:class:`SpectralField` (full, physically phased) is exact, so snapshots can be
used for bit-exact restarts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Literal

import numpy as np
import scipy.fft as sfft

from .functionals import EquationFrame, InvariantRecord, record
from .spectral import Grid2D, RealField, SpectralField, forward

StopReason = Literal["completed", "blowup_detected", "instability"]


class InstabilityError(FloatingPointError):
    """Non-finite values appeared during a step."""


class AmplitudeCapExceeded(FloatingPointError):
    """The physical-space amplitude exceeded the configured cap."""

    def __init__(self, amplitude: float, cap: float):
        super().__init__(f"max|u| = {amplitude:.3e} exceeds cap {cap:.3e}")
        self.amplitude = amplitude


@dataclass(frozen=True)
class IntegratorConfig:
    dt: float = 1e-3
    t_end: float = 1.0
    scheme: str = "if_rk4"
    dealias: bool = True
    diag_stride: int = 100
    snapshot_stride: int = 0
    blowup_grad_factor: float = 10.0
    blowup_amp_cap: float = 1e6

    def __post_init__(self):
        errors = []
        if not (self.dt > 0 and math.isfinite(self.dt)):
            errors.append(f"dt must be positive, got {self.dt}")
        if not (self.t_end > 0 and math.isfinite(self.t_end)):
            errors.append(f"t_end must be positive, got {self.t_end}")
        elif self.dt > 0 and abs(self.t_end / self.dt - round(self.t_end / self.dt)) > 1e-9 * max(
            1.0, self.t_end / self.dt
        ):
            errors.append(f"t_end={self.t_end} is not an integer multiple of dt={self.dt}")
        if self.scheme != "if_rk4":
            errors.append(f"unknown scheme {self.scheme!r} (only 'if_rk4')")
        if self.diag_stride < 1:
            errors.append(f"diag_stride must be >= 1, got {self.diag_stride}")
        if self.snapshot_stride < 0:
            errors.append(f"snapshot_stride must be >= 0, got {self.snapshot_stride}")
        if not self.blowup_grad_factor > 1:
            errors.append(f"blowup_grad_factor must exceed 1, got {self.blowup_grad_factor}")
        if not self.blowup_amp_cap > 0:
            errors.append(f"blowup_amp_cap must be positive, got {self.blowup_amp_cap}")
        if errors:
            raise ValueError("; ".join(errors))

    @property
    def n_steps(self) -> int:
        return int(round(self.t_end / self.dt))


@dataclass
class Trajectory:
    frame: EquationFrame
    grid: Grid2D
    snapshots: list[tuple[float, SpectralField]] = field(default_factory=list)
    records: list[InvariantRecord] = field(default_factory=list)
    stop_reason: StopReason = "completed"
    message: str = ""

    @property
    def final(self) -> SpectralField:
        return self.snapshots[-1][1]

    @property
    def t_final(self) -> float:
        return self.snapshots[-1][0]


# -- symbols -----------------------------------------------------------------


def _symbols(grid: Grid2D, frame: EquationFrame, half: bool):
    xi = grid.kx_odd[:, None]
    xi2 = grid.kx[:, None] ** 2
    eta = grid.ky_odd[None, :]
    eta2 = grid.ky[None, :] ** 2
    if half:
        h = grid.ny // 2 + 1
        eta, eta2 = eta[:, :h], eta2[:, :h]
    if frame.frame == "symmetrized":
        lin = 1j * (xi**3 + eta**3)
        kappa = frame.a * (xi + eta)
    else:
        lin = 1j * xi * (xi2 + eta2)
        kappa = xi + 0.0 * eta
    return lin, kappa


def linear_symbol(frame: EquationFrame, grid: Grid2D) -> np.ndarray:
    """``L`` with ``d/dt c = L c`` for the linear part (full spectrum layout)."""
    lin, _ = _symbols(grid, frame, half=False)
    return np.broadcast_to(lin, grid.shape).copy()


def nonlinear_symbol(frame: EquationFrame, grid: Grid2D) -> np.ndarray:
    """Real factor ``kappa`` with ``N(c) = -i sigma kappa F[u^3]``."""
    _, kappa = _symbols(grid, frame, half=False)
    return np.broadcast_to(kappa, grid.shape).copy()


def dt_max(grid: Grid2D, frame: EquationFrame, amplitude: float) -> float:
    """Largest step keeping the explicit cubic sub-step well inside RK4 stability."""
    kappa = np.abs(nonlinear_symbol(frame, grid))[grid.dealias_mask]
    rate = float(kappa.max()) * amplitude**2
    return math.inf if rate == 0 else 0.5 / rate


def suggest_dt(grid: Grid2D, frame: EquationFrame, amplitude: float) -> float:
    return min(1e-3, dt_max(grid, frame, amplitude))


# -- layout conversion ---------------------------------------------------------


def to_half(F: SpectralField) -> np.ndarray:
    g = F.grid
    return (F.coeffs * g.phase)[:, : g.ny // 2 + 1].copy()


def from_half(c: np.ndarray, grid: Grid2D) -> SpectralField:
    nx, ny = grid.shape
    h = ny // 2 + 1
    full = np.empty(grid.shape, dtype=np.complex128)
    full[:, :h] = c
    # Negative-ky columns from Hermitian symmetry: c(i, j) = conj c(-i, -j).
    cols = np.arange(h, ny)
    rows = (-np.arange(nx)) % nx
    full[:, h:] = np.conj(c[rows][:, ny - cols])
    return SpectralField(grid, full * grid.phase)


def half_to_physical(c: np.ndarray, grid: Grid2D) -> np.ndarray:
    return sfft.irfft2(c * (grid.nx * grid.ny), s=grid.shape)


def physical_to_half(u: np.ndarray, grid: Grid2D) -> np.ndarray:
    return sfft.rfft2(u) / (grid.nx * grid.ny)


# -- stepping ----------------------------------------------------------------


class Stepper:
    """Precomputed IF-RK4 stepper for one grid, frame and step size."""

    def __init__(self, grid: Grid2D, frame: EquationFrame, dt: float, *,
                 dealias: bool = True, amp_cap: float = math.inf):
        self.grid = grid
        self.frame = frame
        self.dt = dt
        self.amp_cap = amp_cap
        lin, kappa = _symbols(grid, frame, half=True)
        h = grid.ny // 2 + 1
        mask = grid.dealias_mask[:, :h] if dealias else np.ones((grid.nx, h), bool)
        sign = frame.nonlinear_sign
        self.nl_factor = np.where(mask, -1j * sign * kappa, 0.0)
        self.e_half = np.exp(0.5 * dt * lin)
        self.e_full = self.e_half**2
        self.last_amplitude = 0.0

    def nonlinear(self, c: np.ndarray, track: bool = False) -> np.ndarray:
        if not np.any(self.nl_factor):
            return np.zeros_like(c)
        u = half_to_physical(c, self.grid)
        if track:
            amp = float(np.max(np.abs(u)))
            self.last_amplitude = amp
            if not math.isfinite(amp):
                raise InstabilityError("non-finite field during nonlinear evaluation")
            if amp > self.amp_cap:
                raise AmplitudeCapExceeded(amp, self.amp_cap)
        return self.nl_factor * physical_to_half(u * u * u, self.grid)

    def step(self, c: np.ndarray) -> np.ndarray:
        h = self.dt
        E, E2 = self.e_half, self.e_full
        k1 = self.nonlinear(c, track=True)
        k2 = self.nonlinear(E * (c + 0.5 * h * k1))
        k3 = self.nonlinear(E * c + 0.5 * h * k2)
        k4 = self.nonlinear(E2 * c + h * E * k3)
        out = E2 * c + (h / 6.0) * (E2 * k1 + 2.0 * E * (k2 + k3) + k4)
        if not np.all(np.isfinite(out)):
            raise InstabilityError("non-finite spectrum after step")
        return out


def nonlinear_rhs(F: SpectralField, frame: EquationFrame, *, dealias: bool = True,
                  amp_cap: float = 1e6) -> SpectralField:
    """``-i sigma kappa P F[u^3]`` in the public spectral layout."""
    st = Stepper(F.grid, frame, 1.0, dealias=dealias, amp_cap=amp_cap)
    return from_half(st.nonlinear(to_half(F), track=True), F.grid)


def step(F: SpectralField, cfg: IntegratorConfig, frame: EquationFrame) -> SpectralField:
    st = Stepper(F.grid, frame, cfg.dt, dealias=cfg.dealias, amp_cap=cfg.blowup_amp_cap)
    return from_half(st.step(to_half(F)), F.grid)


# -- driver ------------------------------------------------------------------


def _grad_growth_is_monotone(records: list[InvariantRecord], window: int = 3) -> bool:
    g = [r.grad_norm_sq for r in records]
    if len(g) < window + 1:
        return False
    tail = g[-(window + 1):]
    return all(b > a for a, b in zip(tail, tail[1:])) and g[-1] > 2.0 * g[0]


def evolve(
    u0: RealField | SpectralField,
    cfg: IntegratorConfig,
    frame: EquationFrame,
    *,
    s: float = 0.8,
    modified_energy: Callable[[RealField], float] | None = None,
    t0: float = 0.0,
    on_record: Callable[[InvariantRecord], None] | None = None,
    on_field: Callable[[float, RealField], None] | None = None,
    check_dt: bool = True,
) -> Trajectory:
    """Integrate from ``t0`` to ``t0 + cfg.t_end``.

    Diagnostics are emitted whenever the global step index (``t / dt``) is a
    multiple of ``diag_stride``, and at the final time, so that a run resumed
    from a checkpoint reproduces the records of an uninterrupted run.
    """
    F0 = u0 if isinstance(u0, SpectralField) else forward(u0)
    grid = F0.grid
    c = to_half(F0)
    step0 = int(round(t0 / cfg.dt))
    if abs(step0 * cfg.dt - t0) > 1e-9 * max(1.0, abs(t0)):
        raise ValueError(f"t0={t0} is not a multiple of dt={cfg.dt}")

    amp0 = float(np.max(np.abs(half_to_physical(c, grid))))
    if check_dt and frame.nonlinear_sign and cfg.dt > dt_max(grid, frame, amp0):
        raise ValueError(
            f"dt={cfg.dt} exceeds the stability limit {dt_max(grid, frame, amp0):.3e} "
            f"for initial amplitude {amp0:.3g}"
        )

    stepper = Stepper(grid, frame, cfg.dt, dealias=cfg.dealias, amp_cap=cfg.blowup_amp_cap)
    traj = Trajectory(frame=frame, grid=grid)

    def emit(n: int, c: np.ndarray) -> InvariantRecord:
        t = n * cfg.dt
        f = RealField(grid, half_to_physical(c, grid))
        me = modified_energy(f) if modified_energy is not None else math.nan
        rec = record(f, frame, t, s=s, modified_energy=me)
        traj.records.append(rec)
        if on_record is not None:
            on_record(rec)
        if on_field is not None:
            on_field(t, f)
        return rec

    def snapshot(n: int, c: np.ndarray) -> None:
        traj.snapshots.append((n * cfg.dt, from_half(c, grid)))

    rec0 = emit(step0, c)
    grad0 = rec0.grad_norm_sq
    if cfg.snapshot_stride:
        snapshot(step0, c)

    n_end = step0 + cfg.n_steps
    n = step0
    while n < n_end:
        try:
            c_next = stepper.step(c)
        except AmplitudeCapExceeded as exc:
            traj.stop_reason = "blowup_detected"
            traj.message = str(exc)
            break
        except InstabilityError as exc:
            if _grad_growth_is_monotone(traj.records):
                traj.stop_reason = "blowup_detected"
                traj.message = f"{exc} after monotone gradient growth"
            else:
                traj.stop_reason = "instability"
                traj.message = str(exc)
            break
        c = c_next
        n += 1
        if n % cfg.diag_stride == 0 or n == n_end:
            rec = emit(n, c)
            if grad0 > 0 and rec.grad_norm_sq > cfg.blowup_grad_factor**2 * grad0:
                traj.stop_reason = "blowup_detected"
                traj.message = (
                    f"grad_norm_sq grew by {rec.grad_norm_sq / grad0:.1f}x at t={rec.t:.6g}"
                )
                break
        if cfg.snapshot_stride and n % cfg.snapshot_stride == 0 and n != n_end:
            snapshot(n, c)
    if not traj.snapshots or traj.snapshots[-1][0] != n * cfg.dt:
        snapshot(n, c)
    return traj
