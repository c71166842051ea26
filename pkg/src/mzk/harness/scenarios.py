"""Experiment drivers behind the ``mzk`` command line."""

from __future__ import annotations

import dataclasses
import functools
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable

import numpy as np

from ..dynamics import IntegratorConfig, Trajectory, evolve
from ..functionals import (
    EquationFrame,
    focusing_gradient_bound,
    gaussian,
    grad_norm_sq,
    mass,
    energy_original,
    sobolev_norm,
)
from ..groundstate import ground_state, pohozaev_check, sharp_gn_constant, threshold_mass
from ..imethod import (
    MultiplierProfile,
    SweepAborted,
    almost_conservation_sweep,
    growth_exponent,
    modified_energy,
)
from ..spectral import Grid2D, RealField, SpectralField, forward, inverse
from ..symmetry import to_symmetric
from .config import ConfigError, RunConfig
from .io import Checkpoint, read_checkpoint, write_checkpoint, write_records_csv, write_table_csv
from .manifest import RunManifest


@dataclass
class RunResult:
    manifest: RunManifest
    out_dir: Path
    trajectory: Trajectory | None = None
    report: dict[str, Any] = field(default_factory=dict)


def grid_of(cfg: RunConfig) -> Grid2D:
    return Grid2D(cfg.nx, cfg.ny, cfg.lx, cfg.ly)


def frame_of(cfg: RunConfig) -> EquationFrame:
    return EquationFrame(cfg.frame, cfg.sigma, linear_only=(cfg.sigma == 0))


def integrator_of(cfg: RunConfig, t_end: float | None = None) -> IntegratorConfig:
    return IntegratorConfig(
        dt=cfg.dt,
        t_end=cfg.t_end if t_end is None else t_end,
        dealias=cfg.dealias,
        diag_stride=cfg.diag_stride,
        snapshot_stride=cfg.snapshot_stride,
        blowup_grad_factor=cfg.blowup_grad_factor,
        blowup_amp_cap=cfg.blowup_amp_cap,
    )


def _noise(grid: Grid2D, seed: int, kmax: int = 4) -> np.ndarray:
    """Seeded smooth random field with unit peak, built from modes ``|m| <= kmax``."""
    rng = np.random.default_rng(seed)
    coeffs = np.zeros(grid.shape, dtype=np.complex128)
    low = (np.abs(grid.mode_x)[:, None] <= kmax) & (np.abs(grid.mode_y)[None, :] <= kmax)
    coeffs[low] = rng.standard_normal(low.sum()) + 1j * rng.standard_normal(low.sum())
    f = np.fft.ifft2(coeffs).real
    return f / np.max(np.abs(f))


@dataclass
class InitialData:
    field: RealField | SpectralField
    t0: float = 0.0


def initial_data(cfg: RunConfig) -> InitialData:
    """Build ``u0`` in the configured frame (ground-state data are mapped if needed)."""
    grid = grid_of(cfg)
    frame = frame_of(cfg)
    if cfg.init_kind == "checkpoint":
        ck = read_checkpoint(cfg.init_path)
        errs = []
        if ck.grid != grid:
            errs.append(f"init.path: checkpoint grid {ck.grid} differs from configured grid {grid}")
        if ck.frame != frame:
            errs.append(f"init.path: checkpoint frame {ck.frame} differs from configured {frame}")
        if not cfg.t_end > ck.t:
            errs.append(f"integrator.t_end: {cfg.t_end} must exceed the checkpoint time {ck.t}")
        if errs:
            raise ConfigError(errs)
        return InitialData(ck.field, ck.t)
    if cfg.init_kind == "zero":
        u = RealField.zeros(grid)
    elif cfg.init_kind == "gaussian":
        u = gaussian(grid, cfg.amplitude, cfg.width, (cfg.center_x, cfg.center_y))
    else:
        gs = ground_state(grid)
        v = RealField(grid, cfg.factor * gs.phi.samples)
        u = to_symmetric(v) if cfg.frame == "symmetrized" else v
    if cfg.noise > 0:
        u = RealField(grid, u.samples + cfg.noise * _noise(grid, cfg.seed))
    return InitialData(u)


def _prepare(cfg: RunConfig) -> tuple[Path, RunManifest]:
    cfg.checked()
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    return out, RunManifest(cfg)


def _guarded(cfg: RunConfig, body: Callable[[Path, RunManifest], RunResult]) -> RunResult:
    """Run ``body``; on any failure leave a partial manifest behind and re-raise."""
    out, manifest = _prepare(cfg)
    try:
        result = body(out, manifest)
    except BaseException as exc:
        manifest.summary["error"] = f"{type(exc).__name__}: {exc}"
        manifest.write(out, "partial")
        raise
    manifest.write(out, "complete")
    return result


# -- simulate ---------------------------------------------------------------------


def run_simulate(cfg: RunConfig) -> RunResult:
    def body(out: Path, manifest: RunManifest) -> RunResult:
        frame = frame_of(cfg)
        init = initial_data(cfg)
        icfg = integrator_of(cfg, t_end=cfg.t_end - init.t0)
        me = None
        if cfg.n_cut > 0:
            prof = MultiplierProfile(cfg.n_cut, cfg.s)
            me = lambda f: modified_energy(f, prof, frame)  # noqa: E731
        traj = evolve(init.field, icfg, frame, s=cfg.s, modified_energy=me, t0=init.t0,
                      check_dt=False)
        csv = out / "diagnostics.csv"
        write_records_csv(csv, traj.records)
        manifest.add_file(csv)
        for t, F in traj.snapshots:
            step = int(round(t / cfg.dt))
            name = "final.ckpt" if F is traj.final else f"snap_{step:09d}.ckpt"
            path = out / name
            write_checkpoint(path, Checkpoint(F, t, frame, cfg.s, cfg.n_cut))
            manifest.add_file(path)
        r0, r1 = traj.records[0], traj.records[-1]
        manifest.summary.update(
            stop_reason=traj.stop_reason,
            message=traj.message or "-",
            t_final=traj.t_final,
            mass_drift=_rel(r1.mass, r0.mass),
            energy_drift=_rel(r1.energy, r0.energy),
            max_grad_growth=_max_growth(traj),
        )
        return RunResult(manifest, out, traj)

    return _guarded(cfg, body)


def _rel(x: float, x0: float) -> float:
    return abs(x - x0) / abs(x0) if x0 != 0 else abs(x - x0)


def _max_growth(traj: Trajectory) -> float:
    g0 = traj.records[0].grad_norm_sq
    gmax = max(r.grad_norm_sq for r in traj.records)
    return gmax / g0 if g0 > 0 else 0.0


# -- ground state -------------------------------------------------------------------


def run_groundstate(cfg: RunConfig) -> RunResult:
    def body(out: Path, manifest: RunManifest) -> RunResult:
        gs = ground_state(grid_of(cfg))
        p1, p2 = pohozaev_check(gs)
        path = out / "groundstate.ckpt"
        write_checkpoint(path, Checkpoint(forward(gs.phi), 0.0, EquationFrame("original", 1)))
        manifest.add_file(path)
        report = dict(
            mass=gs.mass,
            residual=gs.residual,
            iterations=gs.iterations,
            stabilization=gs.stabilization,
            pohozaev_gradient=p1,
            pohozaev_quartic=p2,
            gn_constant=sharp_gn_constant(gs),
            threshold_original=threshold_mass(EquationFrame("original", 1), gs),
            threshold_symmetrized=threshold_mass(EquationFrame("symmetrized", 1), gs),
        )
        manifest.summary.update(report)
        return RunResult(manifest, out, report=report)

    return _guarded(cfg, body)


# -- almost-conservation sweep --------------------------------------------------------


def run_isweep(cfg: RunConfig) -> RunResult:
    def body(out: Path, manifest: RunManifest) -> RunResult:
        if cfg.frame != "symmetrized":
            raise ConfigError(["frame: isweep evolves the symmetrized equation; set frame = symmetrized"])
        init = initial_data(cfg)
        u0 = init.field if isinstance(init.field, RealField) else inverse(init.field)
        icfg = integrator_of(cfg, t_end=cfg.delta)
        try:
            res = almost_conservation_sweep(u0, cfg.s, cfg.n_list, cfg.delta, icfg, sigma=cfg.sigma)
            samples, slope, status = res.samples, res.slope, "completed"
        except SweepAborted as exc:
            samples, slope, status = exc.partial, math.nan, f"aborted: {exc}"
        path = out / "sweep.csv"
        write_table_csv(
            path, ("n_cut", "s", "delta", "drift", "e1_initial"),
            [(d.n_cut, d.s, d.delta, d.drift, d.e1_initial) for d in samples],
        )
        manifest.add_file(path)
        drifts = [d.drift for d in samples]
        h1 = sobolev_norm(forward(u0), 1.0)
        report = dict(
            status=status,
            slope=slope,
            drifts=drifts,
            strictly_decreasing=all(b < a for a, b in zip(drifts, drifts[1:])),
            mass=mass(u0),
            h1_norm=h1,
        )
        manifest.summary.update(report)
        if status != "completed":
            raise SweepAborted(status, samples)
        return RunResult(manifest, out, report=report)

    return _guarded(cfg, body)


# -- threshold ladder ---------------------------------------------------------------


@dataclass
class RungResult:
    rung: float
    dt: float
    stop_reason: str
    t_final: float
    max_grad_growth: float
    max_grad: float
    bound: float
    bound_ratio: float
    records: list = field(default_factory=list, repr=False)


# Every rung of a ladder shares one ground state per process.
_ground_state = functools.lru_cache(maxsize=2)(ground_state)


def _run_rung(args: tuple[RunConfig, float]) -> RungResult:
    cfg, c = args
    grid = grid_of(cfg)
    frame = EquationFrame("original", 1)
    gs = _ground_state(grid)
    v0 = RealField(grid, c * gs.phi.samples)
    m0 = mass(v0)
    icfg = integrator_of(cfg)
    if m0 >= gs.mass:
        icfg = dataclasses.replace(
            icfg,
            dt=cfg.collapse_dt or cfg.dt,
            t_end=cfg.collapse_t_end or cfg.t_end,
            diag_stride=cfg.collapse_stride or cfg.diag_stride,
        )
    traj = evolve(v0, icfg, frame, s=cfg.s, check_dt=False)
    gmax = max(r.grad_norm_sq for r in traj.records)
    bound = math.nan
    if m0 < gs.mass:
        bound = focusing_gradient_bound(m0, gs.mass, energy_original(v0, frame))
    return RungResult(
        rung=c,
        dt=icfg.dt,
        stop_reason=traj.stop_reason,
        t_final=traj.t_final,
        max_grad_growth=gmax / grad_norm_sq(v0),
        max_grad=gmax,
        bound=bound,
        bound_ratio=gmax / bound if math.isfinite(bound) else math.nan,
        records=traj.records,
    )


def map_bounded(fn, items: list, workers: int) -> list:
    """``map`` over a process pool of at most ``workers`` (in-process when 1)."""
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=min(workers, len(items))) as pool:
        return list(pool.map(fn, items))


def run_threshold(cfg: RunConfig) -> RunResult:
    """Focusing ladder ``v0 = c * phi`` in the original frame (``||v0|| = c ||phi||``)."""

    def body(out: Path, manifest: RunManifest) -> RunResult:
        gs = _ground_state(grid_of(cfg))
        rungs = map_bounded(_run_rung, [(cfg, c) for c in cfg.rungs], cfg.workers)
        for r in rungs:
            path = out / f"rung_{r.rung:g}.csv"
            write_records_csv(path, r.records)
            manifest.add_file(path)
        path = out / "threshold.csv"
        write_table_csv(
            path,
            ("rung", "dt", "stop_reason", "t_final", "max_grad_growth", "max_grad", "bound", "bound_ratio"),
            [(r.rung, r.dt, r.stop_reason, r.t_final, r.max_grad_growth, r.max_grad, r.bound, r.bound_ratio)
             for r in rungs],
        )
        manifest.add_file(path)
        manifest.summary["phi_mass"] = gs.mass
        for r in rungs:
            key = f"rung_{r.rung:g}"
            manifest.summary[f"{key}.stop_reason"] = r.stop_reason
            manifest.summary[f"{key}.t_final"] = r.t_final
            manifest.summary[f"{key}.max_grad_growth"] = r.max_grad_growth
            manifest.summary[f"{key}.bound_ratio"] = r.bound_ratio
        return RunResult(manifest, out, report={"rungs": rungs, "phi_mass": gs.mass})

    return _guarded(cfg, body)


# -- H^s growth ----------------------------------------------------------------------


@dataclass
class GrowthSeries:
    s: float
    exponent: float
    t: np.ndarray
    hs: np.ndarray
    reference: np.ndarray
    constant: float

    @property
    def max_ratio(self) -> float:
        return float(np.max(self.hs / self.reference))


def reference_curve(t: np.ndarray, hs: np.ndarray, s: float, t_fit: float = 1.0):
    """``C (1+t)^p`` with ``p = (1-s)/(4s-3)`` and ``C`` matched at ``t_fit``."""
    p = growth_exponent(s)
    i = int(np.argmin(np.abs(t - t_fit)))
    if abs(t[i] - t_fit) > 1e-9 * max(1.0, t_fit):
        raise ValueError(f"no diagnostic sample at t = {t_fit}; adjust diag_stride")
    c = hs[i] / (1.0 + t_fit) ** p
    return c * (1.0 + t) ** p, c


def run_growth(cfg: RunConfig) -> RunResult:
    def body(out: Path, manifest: RunManifest) -> RunResult:
        frame = frame_of(cfg)
        init = initial_data(cfg)
        times: list[float] = []
        norms: dict[float, list[float]] = {s: [] for s in cfg.growth_s}

        def on_field(t: float, f: RealField) -> None:
            F = forward(f)
            times.append(t)
            for s in cfg.growth_s:
                norms[s].append(sobolev_norm(F, s))

        traj = evolve(init.field, integrator_of(cfg, cfg.t_end - init.t0), frame, s=cfg.s,
                      t0=init.t0, check_dt=False, on_field=on_field)
        t = np.array(times)
        series = []
        for s in cfg.growth_s:
            hs = np.array(norms[s])
            ref, c = reference_curve(t, hs, s)
            series.append(GrowthSeries(s, growth_exponent(s), t, hs, ref, c))
        cols = ["t"]
        for g in series:
            cols += [f"hs_{g.s:g}", f"reference_{g.s:g}"]
        rows = [[float(t[i])] + [float(v) for g in series for v in (g.hs[i], g.reference[i])]
                for i in range(len(t))]
        path = out / "growth.csv"
        write_table_csv(path, cols, rows)
        manifest.add_file(path)
        path = out / "diagnostics.csv"
        write_records_csv(path, traj.records)
        manifest.add_file(path)
        manifest.summary["stop_reason"] = traj.stop_reason
        for g in series:
            manifest.summary[f"s_{g.s:g}.exponent"] = g.exponent
            manifest.summary[f"s_{g.s:g}.constant"] = g.constant
            manifest.summary[f"s_{g.s:g}.max_ratio"] = g.max_ratio
        return RunResult(manifest, out, traj, report={"series": series})

    return _guarded(cfg, body)
