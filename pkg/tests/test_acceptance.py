"""End-to-end acceptance checks, one test per criterion.

Each test prints a single ``criterion N PASS|FAIL`` line (collected again in
the terminal summary) and then asserts the same condition.
"""

import math

import numpy as np
import pytest

from mzk.dynamics import IntegratorConfig, evolve
from mzk.functionals import EquationFrame, gaussian, gn_deficit, grad_norm_sq, mass
from mzk.groundstate import ground_state, pohozaev_check
from mzk.harness.config import preset
from mzk.harness.io import read_checkpoint
from mzk.harness.manifest import MANIFEST_NAME, read_manifest
from mzk.harness.scenarios import run_growth, run_isweep, run_simulate, run_threshold
from mzk.imethod import (
    MultiplierProfile,
    de1_dt_bruteforce_g4,
    de1_dt_parts,
    modified_energy,
)
from mzk.spectral import Grid2D, RealField, inverse
from mzk.symmetry import energy_transfer_check, from_symmetric, to_symmetric

pytestmark = pytest.mark.slow


def _max_rel_drift(records, name):
    x0 = getattr(records[0], name)
    return max(abs(getattr(r, name) - x0) for r in records) / abs(x0)


def test_1_conservation(report):
    grid = Grid2D(256, 256, 64.0, 64.0)
    u0 = gaussian(grid, 1.0, 2.0)
    cfg = IntegratorConfig(dt=1e-3, t_end=5.0, diag_stride=100)
    parts, ok = [], True
    for name in ("original", "symmetrized"):
        traj = evolve(u0, cfg, EquationFrame(name, -1))
        dm = _max_rel_drift(traj.records, "mass")
        de = _max_rel_drift(traj.records, "energy")
        ok &= traj.stop_reason == "completed" and dm <= 1e-10 and de <= 1e-6
        parts.append(f"{name} mass {dm:.1e} energy {de:.1e}")
    assert report(1, "conservation", ok, "; ".join(parts) + " (limits 1e-10, 1e-6)")


def test_2_frame_equivalence(report):
    grid = Grid2D(128, 128, 64.0, 64.0)
    v = gaussian(grid, 1.0, 2.0, (1.5, -0.5))
    transfer = max(energy_transfer_check(v, sigma=s) for s in (1, -1))

    # The symmetrized image of a box is a rotated, stretched box: a larger
    # periodic cell keeps both evolutions free of wrap-around up to T = 1.
    big = Grid2D(512, 512, 128.0, 128.0)
    v0 = gaussian(big, 1.0, 2.0)
    u0 = to_symmetric(v0)
    cfg = IntegratorConfig(dt=1e-3, t_end=1.0, diag_stride=1000)
    dyn = 0.0
    for sigma in (-1, 1):
        v1 = evolve(v0, cfg, EquationFrame("original", sigma)).final
        u1 = evolve(u0, cfg, EquationFrame("symmetrized", sigma)).final
        back = from_symmetric(inverse(u1))
        dyn = max(dyn, float(np.max(np.abs(back.samples - inverse(v1).samples))))
    ok = transfer <= 1e-6 and dyn <= 1e-4
    assert report(2, "frame equivalence", ok,
                  f"energy transfer {transfer:.1e} (limit 1e-6), dynamic max-abs {dyn:.1e} (limit 1e-4)")


def test_3_ground_state(report):
    coarse = ground_state(Grid2D(512, 512, 64.0, 64.0))
    fine = ground_state(Grid2D(1024, 1024, 64.0, 64.0))
    residual = max(coarse.residual, fine.residual)
    poho = max(abs(p) for p in pohozaev_check(fine) + pohozaev_check(coarse))
    masses = (coarse.mass, fine.mass)
    mass_ok = all(abs(m - 11.70) <= 0.01 for m in masses)

    rng = np.random.default_rng(2024)
    g = Grid2D(64, 64, 16.0, 16.0)
    X, Y = g.mesh
    worst = math.inf
    for _ in range(100):
        f = np.zeros(g.shape)
        for _ in range(rng.integers(1, 4)):
            cx, cy = rng.uniform(-4, 4, 2)
            w = rng.uniform(0.7, 2.5)
            f += rng.uniform(-2, 2) * np.exp(-((X - cx) ** 2 + (Y - cy) ** 2) / (2 * w**2))
        field = RealField(g, f)
        scale = 2 / fine.mass * mass(field) * grad_norm_sq(field)
        worst = min(worst, gn_deficit(field, fine.mass) / scale)
    at_phi = abs(gn_deficit(fine.phi, fine.mass)) / (2 * grad_norm_sq(fine.phi))

    ok = residual <= 1e-8 and poho <= 1e-4 and mass_ok and worst >= -1e-9 and at_phi <= 1e-3
    assert report(3, "ground state", ok,
                  f"residual {residual:.1e}, Pohozaev {poho:.1e}, mass {masses[0]:.6f}/{masses[1]:.6f}, "
                  f"min GN deficit {worst:.1e}, deficit at phi {at_phi:.1e}")


def test_4_modified_energy_derivative(report):
    torus = Grid2D(16, 16, 2 * math.pi, 2 * math.pi)
    prof = MultiplierProfile(1.5, 0.8)
    frame = EquationFrame("symmetrized", 1)
    worst_bf = 0.0
    for seed in range(20):
        rng = np.random.default_rng(seed)
        c = np.zeros(torus.shape, complex)
        low = (torus.kabs <= 3.0) & (torus.kabs > 0)
        c[low] = rng.standard_normal(low.sum()) + 1j * rng.standard_normal(low.sum())
        u = RealField(torus, np.fft.ifft2(c).real * torus.nx)
        fast = de1_dt_parts(u, prof, frame, dealias=False).quartic
        slow = de1_dt_bruteforce_g4(u, prof, frame)
        worst_bf = max(worst_bf, abs(fast - slow) / abs(slow))

    grid = Grid2D(128, 128, 4 * math.pi, 4 * math.pi)
    u0 = gaussian(grid, 3.0, 0.5)
    prof = MultiplierProfile(2.0, 0.8)
    dt, t_mid = 1e-4, 0.1
    n_mid = int(round(t_mid / dt))
    fields = {}

    def keep(t, f):
        n = int(round(t / dt))
        if abs(n - n_mid) <= 4:
            fields[n] = f

    evolve(u0, IntegratorConfig(dt=dt, t_end=0.1004, diag_stride=1), frame, on_field=keep)
    exact = de1_dt_parts(fields[n_mid], prof, frame).total
    e1 = {n: modified_energy(f, prof, frame) for n, f in fields.items()}
    resid = [abs((e1[n_mid + k] - e1[n_mid - k]) / (2 * k * dt) - exact) / abs(exact) for k in (4, 2, 1)]
    orders = [math.log2(a / b) for a, b in zip(resid, resid[1:])]
    ok = worst_bf <= 1e-10 and resid[-1] <= 1e-4 and all(1.8 <= p <= 2.2 for p in orders)
    assert report(4, "dE1/dt", ok,
                  f"brute-force rel {worst_bf:.1e} (limit 1e-10), central difference rel {resid[-1]:.1e} "
                  f"at h=1e-4 (limit 1e-4), observed orders {orders[0]:.2f}, {orders[1]:.2f}")


def test_5_almost_conservation(report, tmp_path):
    res = run_isweep(preset("isweep").replace(out=str(tmp_path / "isweep")))
    drifts = res.report["drifts"]
    slope = res.report["slope"]
    ok = res.report["strictly_decreasing"] and slope <= -0.8
    assert report(5, "almost conservation", ok,
                  "drifts " + ", ".join(f"{d:.2e}" for d in drifts) + f", slope {slope:.2f} (limit -0.8)")


def test_6_threshold_dichotomy(report, tmp_path):
    cfg = preset("threshold").replace(out=str(tmp_path / "threshold"), rungs=(0.5, 0.9, 1.5))
    res = run_threshold(cfg)
    by = {r.rung: r for r in res.report["rungs"]}
    sub = [by[c] for c in (0.5, 0.9)]
    ok = all(r.stop_reason == "completed" and r.bound_ratio <= 1.05 for r in sub)
    ok &= by[1.5].stop_reason == "blowup_detected" and by[1.5].t_final < 5.0
    detail = ", ".join(
        f"{r.rung:g}: {r.stop_reason} t={r.t_final:.3g} growth {r.max_grad_growth:.1f}x"
        + (f" bound ratio {r.bound_ratio:.3f}" if math.isfinite(r.bound_ratio) else "")
        for r in res.report["rungs"]
    )
    assert report(6, "threshold dichotomy", ok, detail)


def test_7_growth(report, tmp_path):
    res = run_growth(preset("growth").replace(out=str(tmp_path / "growth")))
    ratios = {g.s: g.max_ratio for g in res.report["series"]}
    ok = res.trajectory.stop_reason == "completed" and set(ratios) == {0.8, 0.9}
    ok &= all(r <= 2.0 for r in ratios.values())
    assert report(7, "growth reporting", ok,
                  ", ".join(f"s={s:g} max norm/reference {r:.3f}" for s, r in ratios.items()) + " (limit 2)")


def test_8_determinism_and_restart(report, tmp_path):
    base = preset("simulate").replace(nx=128, ny=128, t_end=1.0, noise=0.05, seed=7,
                                      snapshot_stride=500, diag_stride=50)

    def digests(name, **kw):
        res = run_simulate(base.replace(out=str(tmp_path / name), **kw))
        m = read_manifest(res.out_dir / MANIFEST_NAME)
        return res, {k: v for k, v in m.items() if k.startswith("files.")}

    _, d1 = digests("a")
    full, d2 = digests("b")
    _, d3 = digests("c", seed=8)
    same = d1 == d2 and d1["files.diagnostics.csv"] != d3["files.diagnostics.csv"]

    ck = full.out_dir / "snap_000000500.ckpt"
    resumed = run_simulate(base.replace(out=str(tmp_path / "r"), init_kind="checkpoint", init_path=str(ck)))
    a = read_checkpoint(full.out_dir / "final.ckpt")
    b = read_checkpoint(resumed.out_dir / "final.ckpt")
    def rows(records):
        return [(r.t, r.mass, r.energy, r.grad_norm_sq, r.hs_norm) for r in records if r.t >= 0.5]

    exact = np.array_equal(a.field.coeffs, b.field.coeffs)
    exact &= rows(full.trajectory.records) == rows(resumed.trajectory.records)
    ok = same and exact
    assert report(8, "determinism and restart", ok,
                  f"identical digests {d1 == d2}, seed-sensitive {d1 != d3}, restart bit-exact {exact}")
