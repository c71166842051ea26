"""I-method machinery: the smoothing multiplier, the modified energy and its
exact time derivative, and the almost-conservation experiment.

For a field ``u`` with coefficients ``c`` the modified energy is
``E1[u] = E[I u]`` where ``I`` multiplies ``c(k)`` by ``m(|k|)``. Along the
(dealiased, semi-discrete) flow of the symmetrized equation its derivative
splits into a quartic and a sextic lattice sum,

    dE1/dt = Λ4 + Λ6,
    Λ4 = σ a i |box| Σ_k [m² ω c(k) P W(-k) - m ω c(k) W_I(-k)],
    Λ6 = σ² a² i |box| Σ_k W_I(-k) m (ξ+η) P W(k),

with ``ω = ξ³ + η³``, ``W = F[u³]``, ``W_I = F[(Iu)³]`` and ``P`` the
dealiasing projector. Both sums are evaluated with a few FFTs; the quartic
one is also available as an exhaustive sum over ``k1+k2+k3+k4 = 0``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dynamics import IntegratorConfig, Trajectory, evolve
from .functionals import EquationFrame, energy_symmetrized
from .spectral import RealField, SpectralField, evaluate_at, forward, inverse

BRUTE_FORCE_MAX_MODES = 256
IMAG_RTOL = 1e-10


@dataclass(frozen=True)
class MultiplierProfile:
    n_cut: float
    s: float = 0.8
    blend: str = "smoothstep_log"

    def __post_init__(self):
        if not self.n_cut > 0:
            raise ValueError(f"n_cut must be positive, got {self.n_cut}")
        if not 0.75 < self.s < 1.0:
            raise ValueError(f"s must lie in (3/4, 1), got {self.s}")
        if self.blend != "smoothstep_log":
            raise ValueError(f"unknown blend {self.blend!r}")


def multiplier(r, prof: MultiplierProfile):
    """``m(r)``: 1 up to N, ``(N/r)^(1-s)`` beyond 2N, smoothstep blend of the exponent between."""
    r = np.asarray(r, dtype=np.float64)
    if np.any(r < 0):
        raise ValueError("multiplier needs r >= 0")
    n = prof.n_cut
    t = np.clip((r - n) / n, 0.0, 1.0)
    h = t * t * (3.0 - 2.0 * t)
    with np.errstate(divide="ignore"):
        log_ratio = np.log(n / np.maximum(r, n))
    out = np.exp((1.0 - prof.s) * h * log_ratio)
    return float(out) if out.ndim == 0 else out


def apply_I(F: SpectralField, prof: MultiplierProfile) -> SpectralField:
    return SpectralField(F.grid, F.coeffs * multiplier(F.grid.kabs, prof))


def modified_energy(u: RealField, prof: MultiplierProfile, frame: EquationFrame) -> float:
    """``E[I u]`` with the symmetrized-frame energy."""
    if frame.frame != "symmetrized":
        raise ValueError("the modified energy is defined in the symmetrized frame")
    return energy_symmetrized(inverse(apply_I(forward(u), prof)), frame)


def _reflect(arr: np.ndarray) -> np.ndarray:
    """``arr(-k)`` on the FFT-ordered lattice."""
    return np.roll(arr[::-1, ::-1], 1, axis=(0, 1))


@dataclass
class DerivativeParts:
    quartic: float
    sextic: float

    @property
    def total(self) -> float:
        return self.quartic + self.sextic


def de1_dt_parts(
    u: RealField,
    prof: MultiplierProfile,
    frame: EquationFrame,
    *,
    dealias: bool = True,
) -> DerivativeParts:
    if frame.frame != "symmetrized":
        raise ValueError("dE1/dt is evaluated in the symmetrized frame")
    g = u.grid
    sigma = frame.nonlinear_sign
    a = frame.a
    xi, eta = g.wavenumbers_odd
    omega = xi**3 + eta**3
    kappa = xi + eta
    m = multiplier(g.kabs, prof)

    F = forward(u)
    c = F.coeffs
    Iu = inverse(SpectralField(g, m * c))
    W = forward(RealField(g, u.samples**3)).coeffs
    WI = forward(RealField(g, Iu.samples**3)).coeffs
    PW = np.where(g.dealias_mask, W, 0.0) if dealias else W
    PW_neg = _reflect(PW)
    WI_neg = _reflect(WI)

    q_terms = m * m * omega * c * PW_neg - m * omega * c * WI_neg
    s_terms = WI_neg * m * kappa * PW
    quartic = sigma * a * 1j * g.area * np.sum(q_terms)
    sextic = sigma**2 * a**2 * 1j * g.area * np.sum(s_terms)

    scale = g.area * (abs(sigma) * a * np.sum(np.abs(q_terms)) + a**2 * np.sum(np.abs(s_terms)))
    total = quartic + sextic
    if scale > 0 and abs(total.imag) > IMAG_RTOL * scale:
        raise ArithmeticError(
            f"dE1/dt has imaginary residue {total.imag:.3e} (scale {scale:.3e}); "
            "the input is not real or the symbols lost their symmetry"
        )
    return DerivativeParts(float(quartic.real), float(sextic.real))


def de1_dt_spectral(u: RealField, prof: MultiplierProfile, frame: EquationFrame,
                    *, dealias: bool = True) -> float:
    return de1_dt_parts(u, prof, frame, dealias=dealias).total


def de1_dt_bruteforce_g4(u: RealField, prof: MultiplierProfile,
                         frame: EquationFrame | None = None) -> float:
    """Quartic part of dE1/dt as a direct sum over ``k1 + k2 + k3 + k4 = 0``.

    The bracket ``m1/(m2 m3 m4) - 1`` multiplies ``ω1 Î1 Î2 Î3 Î4`` with
    ``Î = m c``; quadruples whose fourth mode leaves the lattice are skipped.
    """
    frame = frame or EquationFrame("symmetrized", 1)
    g = u.grid
    n_modes = g.nx * g.ny
    if n_modes > BRUTE_FORCE_MAX_MODES:
        raise ValueError(
            f"brute-force sum on {g.nx}x{g.ny} needs {n_modes**3:.2e} terms; "
            f"limit is {BRUTE_FORCE_MAX_MODES} modes ({BRUTE_FORCE_MAX_MODES**3:.2e} terms)"
        )
    c = forward(u).coeffs.ravel()
    mx = np.repeat(g.mode_x, g.ny)
    my = np.tile(g.mode_y, g.nx)
    kx = np.repeat(g.kx, g.ny)
    ky = np.tile(g.ky, g.nx)
    m = multiplier(np.hypot(kx, ky), prof)
    Ic = m * c
    omega = kx**3 + ky**3

    def flat(ix, iy):
        return (ix % g.nx) * g.ny + (iy % g.ny)

    lo_x, hi_x = -g.nx // 2, g.nx // 2 - 1
    lo_y, hi_y = -g.ny // 2, g.ny // 2 - 1
    total = 0.0 + 0.0j
    # Pairs (k2, k3) as outer-product arrays.
    m23 = m[:, None] * m[None, :]
    I23 = Ic[:, None] * Ic[None, :]
    sx23 = mx[:, None] + mx[None, :]
    sy23 = my[:, None] + my[None, :]
    for p in range(n_modes):
        if Ic[p] == 0:
            continue
        n4x = -mx[p] - sx23
        n4y = -my[p] - sy23
        ok = (n4x >= lo_x) & (n4x <= hi_x) & (n4y >= lo_y) & (n4y <= hi_y)
        q = flat(n4x[ok], n4y[ok])
        bracket = m[p] / (m23[ok] * m[q]) - 1.0
        total += omega[p] * Ic[p] * np.sum(bracket * I23[ok] * Ic[q])
    value = frame.nonlinear_sign * frame.a * 1j * g.area * total
    return float(value.real)


# -- scaling ------------------------------------------------------------------


def rescale(u0: RealField, lam: float, *, leak_tol: float = 1e-12) -> RealField:
    """``lam^-1 u0(x/lam, y/lam)`` on the same lattice (L²-critical scaling)."""
    if not lam >= 1:
        raise ValueError(f"lam must be >= 1, got {lam}")
    g = u0.grid
    if lam == 1:
        return RealField(g, u0.samples.copy())
    X, Y = g.mesh
    outside = (np.abs(X) >= g.lx / (2 * lam)) | (np.abs(Y) >= g.ly / (2 * lam))
    total = float(np.sum(u0.samples**2))
    leak = float(np.sum(u0.samples[outside] ** 2)) / total if total else 0.0
    if leak > leak_tol:
        raise ValueError(
            f"rescaled support overflows the box ({leak:.2e} of the mass would leave it); "
            f"need a box of at least {lam * g.lx:g} x {lam * g.ly:g}"
        )
    vals = evaluate_at(forward(u0), X / lam, Y / lam)
    return RealField(g, vals / lam)


def n_for_lambda(lam: float, s: float) -> float:
    """Invert ``lam ~ N^((1-s)/s)``."""
    return lam ** (s / (1.0 - s))


def lambda_for_n(n_cut: float, s: float) -> float:
    return n_cut ** ((1.0 - s) / s)


def growth_exponent(s: float) -> float:
    """Exponent ``(1-s)/(4s-3)`` of the polynomial H^s bound."""
    if not 0.75 < s < 1:
        raise ValueError(f"s must lie in (3/4, 1), got {s}")
    return (1.0 - s) / (4.0 * s - 3.0)


# -- almost-conservation sweep -----------------------------------------------


@dataclass
class DriftSample:
    n_cut: float
    s: float
    delta: float
    drift: float
    e1_initial: float

    def __post_init__(self):
        if not self.drift >= 0:
            raise ValueError(f"drift must be >= 0, got {self.drift}")


@dataclass
class SweepResult:
    samples: list[DriftSample]
    slope: float
    trajectory: Trajectory | None = field(default=None, repr=False)
    e1_series: dict[float, list[float]] = field(default_factory=dict, repr=False)


class SweepAborted(RuntimeError):
    def __init__(self, message: str, partial: list[DriftSample]):
        super().__init__(message)
        self.partial = partial


def loglog_slope(n_values, drifts) -> float:
    x = np.log(np.asarray(n_values, dtype=float))
    y = np.log(np.asarray(drifts, dtype=float))
    return float(np.polyfit(x, y, 1)[0])


def almost_conservation_sweep(
    u0: RealField,
    s: float,
    n_list,
    delta: float,
    cfg: IntegratorConfig,
    sigma: int = 1,
) -> SweepResult:
    """Drift of ``E1`` over ``[0, delta]`` for each cutoff, and the log-log slope.

    The flow does not depend on the cutoff, so one symmetrized-frame trajectory
    is computed and every ``E1`` is evaluated on the same diagnostic samples.
    """
    n_list = [float(n) for n in n_list]
    if len(n_list) < 3 or any(b <= a for a, b in zip(n_list, n_list[1:])):
        raise ValueError(f"n_list must be ascending with at least 3 entries, got {n_list}")
    if not 0.75 < s < 1:
        raise ValueError(f"s must lie in (3/4, 1), got {s}")
    frame = EquationFrame("symmetrized", sigma)
    profiles = [MultiplierProfile(n, s) for n in n_list]
    series: dict[float, list[float]] = {n: [] for n in n_list}
    m_arrays = [multiplier(u0.grid.kabs, p) for p in profiles]

    def all_e1(f: RealField) -> float:
        F = forward(f)
        for n, mk in zip(n_list, m_arrays):
            series[n].append(energy_symmetrized(inverse(SpectralField(f.grid, mk * F.coeffs)), frame))
        return series[n_list[0]][-1]

    run_cfg = IntegratorConfig(
        dt=cfg.dt, t_end=delta, scheme=cfg.scheme, dealias=cfg.dealias,
        diag_stride=cfg.diag_stride, blowup_grad_factor=cfg.blowup_grad_factor,
        blowup_amp_cap=cfg.blowup_amp_cap,
    )
    traj = evolve(u0, run_cfg, frame, s=s, modified_energy=all_e1)
    samples = [
        DriftSample(n, s, delta, float(np.max(np.abs(np.array(e) - e[0]))), e[0])
        for n, e in series.items()
    ]
    if traj.stop_reason != "completed":
        raise SweepAborted(
            f"trajectory stopped early ({traj.stop_reason}: {traj.message})", samples
        )
    slope = loglog_slope([x.n_cut for x in samples], [max(x.drift, 1e-300) for x in samples])
    return SweepResult(samples=samples, slope=slope, trajectory=traj, e1_series=series)
