"""Reduced-size invariant suite run by ``mzk selfcheck``."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np

from ..dynamics import IntegratorConfig, evolve
from ..functionals import EquationFrame, energy, gn_deficit, mass
from ..groundstate import petviashvili, pohozaev_check
from ..imethod import (
    MultiplierProfile,
    de1_dt_bruteforce_g4,
    de1_dt_parts,
    modified_energy,
    multiplier,
)
from ..spectral import Grid2D, RealField, forward, inverse, l2_inner
from .config import RunConfig
from .io import write_table_csv
from .manifest import RunManifest
from .scenarios import RunResult, _guarded

Multiplier = Callable[[np.ndarray, MultiplierProfile], np.ndarray]


@dataclass
class CheckResult:
    name: str
    passed: bool
    value: float
    limit: float
    seconds: float


def faulty_multiplier(r, prof: MultiplierProfile):
    """Fault-injection hook: the multiplier with ``m(N)`` forced to 0.5."""
    m = np.asarray(multiplier(r, prof), dtype=float)
    return np.where(np.asarray(r) == prof.n_cut, 0.5, m)


def low_mode_field(grid: Grid2D, rng: np.random.Generator, kmax: int, amplitude: float) -> RealField:
    coeffs = np.zeros(grid.shape, dtype=np.complex128)
    low = (np.abs(grid.mode_x)[:, None] <= kmax) & (np.abs(grid.mode_y)[None, :] <= kmax)
    coeffs[low] = rng.standard_normal(low.sum()) + 1j * rng.standard_normal(low.sum())
    f = np.fft.ifft2(coeffs).real
    return RealField(grid, amplitude * f / np.max(np.abs(f)))


# -- individual checks; each returns (value, limit) and passes when value <= limit --


def check_roundtrip(n: int, rng) -> tuple[float, float]:
    g = Grid2D(n, n, 2 * math.pi, 2 * math.pi)
    f = RealField(g, rng.standard_normal(g.shape))
    return float(np.max(np.abs(inverse(forward(f)).samples - f.samples))), 1e-12


def check_parseval(n: int, rng) -> tuple[float, float]:
    g = Grid2D(n, n, 3.0, 5.0)
    f = RealField(g, rng.standard_normal(g.shape))
    spectral = g.area * float(np.sum(np.abs(forward(f).coeffs) ** 2))
    return abs(spectral - l2_inner(f, f)) / l2_inner(f, f), 1e-12


def check_conservation(n: int, rng) -> tuple[float, float]:
    g = Grid2D(n, n, 2 * math.pi, 2 * math.pi)
    u0 = low_mode_field(g, rng, max(1, n // 8), 0.3)
    frame = EquationFrame("symmetrized", -1)
    traj = evolve(u0, IntegratorConfig(dt=1e-3, t_end=0.1, diag_stride=100), frame)
    r0, r1 = traj.records[0], traj.records[-1]
    drift = max(abs(r1.mass - r0.mass) / r0.mass, abs(r1.energy - r0.energy) / (1 + abs(r0.energy)))
    return drift, 1e-8


def check_pohozaev(n: int, rng) -> tuple[float, float]:
    gs = petviashvili(Grid2D(max(n, 64), max(n, 64), 20.0, 20.0), tol=1e-9, max_iter=1000)
    return max(abs(x) for x in pohozaev_check(gs)), 1e-4


def check_gn_deficit(n: int, rng) -> tuple[float, float]:
    g = Grid2D(max(n, 16), max(n, 16), 10.0, 10.0)
    worst = 0.0
    for _ in range(20):
        f = low_mode_field(g, rng, 3, 1.0)
        d = gn_deficit(f, 11.700896525)
        worst = max(worst, -d / (mass(f) * 1.0 + 1e-300))
    return worst, 1e-9


def check_gamma4(n: int, rng) -> tuple[float, float]:
    g = Grid2D(16, 16, 2 * math.pi, 2 * math.pi)
    u = low_mode_field(g, rng, 2, 1.0)
    prof = MultiplierProfile(1.0, 0.8)
    frame = EquationFrame("symmetrized", 1)
    fast = de1_dt_parts(u, prof, frame).quartic
    slow = de1_dt_bruteforce_g4(u, prof, frame)
    return abs(fast - slow) / max(abs(slow), 1e-300), 1e-10


def check_fd_derivative(n: int, rng) -> tuple[float, float]:
    g = Grid2D(64, 64, 4 * math.pi, 4 * math.pi)
    X, Y = g.mesh
    u0 = RealField(g, 2.0 * np.exp(-(X**2 + Y**2) / (2 * 0.7**2)))
    frame = EquationFrame("symmetrized", 1)
    prof = MultiplierProfile(2.0, 0.8)
    h = 1e-3
    traj = evolve(u0, IntegratorConfig(dt=h, t_end=0.052, diag_stride=1, snapshot_stride=1), frame,
                  check_dt=False)
    snaps = {int(round(t / h)): F for t, F in traj.snapshots}
    mid = 51
    e_plus = modified_energy(inverse(snaps[mid + 1]), prof, frame)
    e_minus = modified_energy(inverse(snaps[mid - 1]), prof, frame)
    exact = de1_dt_parts(inverse(snaps[mid]), prof, frame).total
    return abs(exact - (e_plus - e_minus) / (2 * h)) / max(abs(exact), 1e-300), 1e-3


def check_multiplier(mult: Multiplier) -> Callable[[int, np.random.Generator], tuple[float, float]]:
    def run(n: int, rng) -> tuple[float, float]:
        prof = MultiplierProfile(4.0, 0.8)
        r = np.unique(np.concatenate([np.linspace(0.0, 40.0, 40001), [4.0, 8.0]]))
        m = np.asarray(mult(r, prof), dtype=float)
        rise = float(np.max(np.diff(m)))  # > 0 violates monotonicity
        jump = float(np.max(np.abs(np.diff(m)))) / (r[1] - r[0])
        outer = np.minimum(1.0, (prof.n_cut / np.maximum(r, 1e-300)) ** (1 - prof.s))
        sandwich = float(np.max(np.maximum(outer - m, m - 1.0)))
        # Slopes are O(1); a jump shows up as an O(1/dr) difference quotient.
        return max(rise, sandwich, 0.0) + max(jump - 1.0, 0.0), 1e-12

    return run


def check_modified_energy_limit(n: int, rng) -> tuple[float, float]:
    g = Grid2D(max(n, 16), max(n, 16), 2 * math.pi, 2 * math.pi)
    u = low_mode_field(g, rng, 1, 1.0)
    frame = EquationFrame("symmetrized", 1)
    return abs(modified_energy(u, MultiplierProfile(8.0, 0.8), frame) - energy(u, frame)), 1e-12


def run_checks(cfg: RunConfig) -> list[CheckResult]:
    rng = np.random.default_rng(cfg.seed)
    mult = faulty_multiplier if cfg.fault == "multiplier" else multiplier
    checks = [
        ("transform roundtrip", check_roundtrip),
        ("parseval", check_parseval),
        ("conservation smoke", check_conservation),
        ("pohozaev identities", check_pohozaev),
        ("gn deficit sweep", check_gn_deficit),
        ("multiplier monotone/continuous", check_multiplier(mult)),
        ("E1 equals E below cutoff", check_modified_energy_limit),
        ("gamma4 oracle match", check_gamma4),
        ("finite-difference dE1/dt", check_fd_derivative),
    ]
    out = []
    for name, fn in checks:
        t = time.perf_counter()
        try:
            value, limit = fn(cfg.nx, rng)
            passed = bool(value <= limit)
        except Exception:  # a crashing check is a failing check
            value, limit, passed = math.nan, math.nan, False
        out.append(CheckResult(name, passed, value, limit, time.perf_counter() - t))
    return out


def format_table(results: list[CheckResult]) -> str:
    width = max(len(r.name) for r in results)
    lines = [f"{'check':<{width}}  status  value       limit     seconds"]
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        lines.append(f"{r.name:<{width}}  {status:<6}  {r.value:<10.3e}  {r.limit:<8.1e}  {r.seconds:7.2f}")
    return "\n".join(lines)


def run_selfcheck(cfg: RunConfig) -> RunResult:
    def body(out: Path, manifest: RunManifest) -> RunResult:
        results = run_checks(cfg)
        path = out / "selfcheck.csv"
        write_table_csv(path, ("check", "passed", "value", "limit"),
                        [(r.name, r.passed, r.value, r.limit) for r in results])
        manifest.add_file(path)
        manifest.summary["passed"] = sum(r.passed for r in results)
        manifest.summary["failed"] = sum(not r.passed for r in results)
        return RunResult(manifest, out, report={"results": results, "table": format_table(results)})

    return _guarded(cfg, body)
