"""Run configuration: flat ``key = value`` text with dotted section names.

Example::

    scenario = simulate
    frame = original
    sigma = -1
    grid.n = 256
    grid.l = 64
    integrator.dt = 0.001
    integrator.t_end = 5
    init.kind = gaussian
    init.amplitude = 1
    init.width = 2

Blank lines and ``#`` comments are ignored. Every problem found is reported
at once in a single :class:`ConfigError`.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable

SCENARIOS = ("simulate", "groundstate", "isweep", "threshold", "selfcheck", "growth")
INIT_KINDS = ("gaussian", "groundstate_scaled", "checkpoint", "zero")


class ConfigError(ValueError):
    def __init__(self, errors: list[str]):
        self.errors = list(errors)
        super().__init__("invalid configuration:\n  " + "\n  ".join(self.errors))


def _parse_bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("true", "yes", "on", "1"):
        return True
    if low in ("false", "no", "off", "0"):
        return False
    raise ValueError(f"expected a boolean, got {text!r}")


def _parse_int(text: str) -> int:
    return int(text.strip())


def _parse_float(text: str) -> float:
    v = float(text.strip())
    if not math.isfinite(v):
        raise ValueError(f"expected a finite number, got {text!r}")
    return v


def _parse_floats(text: str) -> tuple[float, ...]:
    parts = [p for p in (q.strip() for q in text.split(",")) if p]
    if not parts:
        raise ValueError("expected a comma-separated list of numbers")
    return tuple(_parse_float(p) for p in parts)


def _parse_str(text: str) -> str:
    return text.strip()


def _fmt(v: Any) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, tuple):
        return ", ".join(_fmt(x) for x in v)
    return str(v)


# key -> (attribute, parser)
_KEYS: dict[str, tuple[str, Callable[[str], Any]]] = {
    "scenario": ("scenario", _parse_str),
    "frame": ("frame", _parse_str),
    "sigma": ("sigma", _parse_int),
    "seed": ("seed", _parse_int),
    "out": ("out", _parse_str),
    "workers": ("workers", _parse_int),
    "grid.nx": ("nx", _parse_int),
    "grid.ny": ("ny", _parse_int),
    "grid.lx": ("lx", _parse_float),
    "grid.ly": ("ly", _parse_float),
    "integrator.dt": ("dt", _parse_float),
    "integrator.t_end": ("t_end", _parse_float),
    "integrator.dealias": ("dealias", _parse_bool),
    "integrator.diag_stride": ("diag_stride", _parse_int),
    "integrator.snapshot_stride": ("snapshot_stride", _parse_int),
    "integrator.blowup_grad_factor": ("blowup_grad_factor", _parse_float),
    "integrator.blowup_amp_cap": ("blowup_amp_cap", _parse_float),
    "init.kind": ("init_kind", _parse_str),
    "init.amplitude": ("amplitude", _parse_float),
    "init.width": ("width", _parse_float),
    "init.center_x": ("center_x", _parse_float),
    "init.center_y": ("center_y", _parse_float),
    "init.factor": ("factor", _parse_float),
    "init.path": ("init_path", _parse_str),
    "init.noise": ("noise", _parse_float),
    "imethod.s": ("s", _parse_float),
    "imethod.n_list": ("n_list", _parse_floats),
    "imethod.n_cut": ("n_cut", _parse_float),
    "imethod.delta": ("delta", _parse_float),
    "threshold.rungs": ("rungs", _parse_floats),
    "threshold.collapse_dt": ("collapse_dt", _parse_float),
    "threshold.collapse_stride": ("collapse_stride", _parse_int),
    "threshold.collapse_t_end": ("collapse_t_end", _parse_float),
    "growth.s_list": ("growth_s", _parse_floats),
    "selfcheck.fault": ("fault", _parse_str),
}
# Shorthands accepted on input; they expand to both axes.
_ALIASES = {"grid.n": ("grid.nx", "grid.ny"), "grid.l": ("grid.lx", "grid.ly")}


@dataclass(frozen=True)
class RunConfig:
    scenario: str = "simulate"
    frame: str = "original"
    sigma: int = 1
    seed: int = 0
    out: str = "runs/out"
    workers: int = 1
    nx: int = 256
    ny: int = 256
    lx: float = 64.0
    ly: float = 64.0
    dt: float = 1e-3
    t_end: float = 1.0
    dealias: bool = True
    diag_stride: int = 100
    snapshot_stride: int = 0
    blowup_grad_factor: float = 10.0
    blowup_amp_cap: float = 1e6
    init_kind: str = "gaussian"
    amplitude: float = 1.0
    width: float = 2.0
    center_x: float = 0.0
    center_y: float = 0.0
    factor: float = 1.0
    init_path: str = ""
    noise: float = 0.0
    s: float = 0.8
    n_list: tuple[float, ...] = (4.0, 8.0, 16.0, 32.0)
    n_cut: float = 0.0
    delta: float = 0.5
    rungs: tuple[float, ...] = (0.5, 0.9, 1.1, 1.5)
    # Rungs above the threshold mass; 0 means "same as the integrator".
    collapse_dt: float = 0.0
    collapse_stride: int = 0
    collapse_t_end: float = 0.0
    growth_s: tuple[float, ...] = (0.8, 0.9)
    fault: str = "none"

    def validate(self) -> list[str]:
        errs = []
        if self.scenario not in SCENARIOS:
            errs.append(f"scenario: must be one of {', '.join(SCENARIOS)}, got {self.scenario!r}")
        if self.frame not in ("original", "symmetrized"):
            errs.append(f"frame: must be 'original' or 'symmetrized', got {self.frame!r}")
        if self.sigma not in (-1, 0, 1):
            errs.append(f"sigma: must be -1, 0 (linear) or 1, got {self.sigma}")
        if self.seed < 0:
            errs.append(f"seed: must be >= 0, got {self.seed}")
        if not self.out:
            errs.append("out: must be a non-empty path")
        if self.workers < 1:
            errs.append(f"workers: must be >= 1, got {self.workers}")
        for name in ("nx", "ny"):
            n = getattr(self, name)
            if n < 8 or n % 2:
                errs.append(f"grid.{name}: must be an even integer >= 8, got {n}")
        for name in ("lx", "ly"):
            if not getattr(self, name) > 0:
                errs.append(f"grid.{name}: must be positive, got {getattr(self, name)}")
        if not self.dt > 0:
            errs.append(f"integrator.dt: must be positive, got {self.dt}")
        if not self.t_end > 0:
            errs.append(f"integrator.t_end: must be positive, got {self.t_end}")
        elif self.dt > 0:
            ratio = self.t_end / self.dt
            if abs(ratio - round(ratio)) > 1e-9 * max(1.0, ratio):
                errs.append(f"integrator.t_end: {self.t_end} is not a multiple of dt={self.dt}")
        if self.diag_stride < 1:
            errs.append(f"integrator.diag_stride: must be >= 1, got {self.diag_stride}")
        if self.snapshot_stride < 0:
            errs.append(f"integrator.snapshot_stride: must be >= 0, got {self.snapshot_stride}")
        if not self.blowup_grad_factor > 1:
            errs.append(f"integrator.blowup_grad_factor: must exceed 1, got {self.blowup_grad_factor}")
        if not self.blowup_amp_cap > 0:
            errs.append(f"integrator.blowup_amp_cap: must be positive, got {self.blowup_amp_cap}")
        if self.init_kind not in INIT_KINDS:
            errs.append(f"init.kind: must be one of {', '.join(INIT_KINDS)}, got {self.init_kind!r}")
        if self.init_kind == "gaussian" and not self.width > 0:
            errs.append(f"init.width: must be positive, got {self.width}")
        if self.init_kind == "checkpoint" and not self.init_path:
            errs.append("init.path: required when init.kind = checkpoint")
        if self.noise < 0:
            errs.append(f"init.noise: must be >= 0, got {self.noise}")
        if not 0.75 < self.s < 1:
            errs.append(f"imethod.s: must lie in (3/4, 1), got {self.s}")
        if len(self.n_list) < 3 or any(b <= a for a, b in zip(self.n_list, self.n_list[1:])):
            errs.append(f"imethod.n_list: must be ascending with at least 3 entries, got {list(self.n_list)}")
        if any(n <= 0 for n in self.n_list):
            errs.append("imethod.n_list: entries must be positive")
        if self.n_cut < 0:
            errs.append(f"imethod.n_cut: must be >= 0 (0 disables E1), got {self.n_cut}")
        if self.n_cut > 0 and self.frame != "symmetrized":
            errs.append("imethod.n_cut: the modified energy needs frame = symmetrized")
        if not self.delta > 0:
            errs.append(f"imethod.delta: must be positive, got {self.delta}")
        if any(r <= 0 for r in self.rungs):
            errs.append("threshold.rungs: entries must be positive")
        if self.collapse_dt < 0 or self.collapse_stride < 0 or self.collapse_t_end < 0:
            errs.append("threshold.collapse_*: must be >= 0 (0 falls back to the integrator setting)")
        else:
            cdt = self.collapse_dt or self.dt
            ct = self.collapse_t_end or self.t_end
            if cdt > 0 and ct > 0 and abs(ct / cdt - round(ct / cdt)) > 1e-9 * max(1.0, ct / cdt):
                errs.append(f"threshold.collapse_t_end: {ct} is not a multiple of collapse_dt={cdt}")
        if any(not 0.75 < s < 1 for s in self.growth_s):
            errs.append(f"growth.s_list: entries must lie in (3/4, 1), got {list(self.growth_s)}")
        if self.fault not in ("none", "multiplier"):
            errs.append(f"selfcheck.fault: must be 'none' or 'multiplier', got {self.fault!r}")
        return errs

    def checked(self) -> "RunConfig":
        errs = self.validate()
        if errs:
            raise ConfigError(errs)
        return self

    def items(self) -> list[tuple[str, str]]:
        """Canonical ``(key, value)`` pairs; parsing them reproduces this config."""
        return [(key, _fmt(getattr(self, attr))) for key, (attr, _) in _KEYS.items()]

    def to_text(self) -> str:
        return "".join(f"{k} = {v}\n" for k, v in self.items())

    def replace(self, **changes) -> "RunConfig":
        return dataclasses.replace(self, **changes)


def parse_pairs(text: str, source: str = "<config>") -> tuple[list[tuple[int, str, str]], list[str]]:
    pairs, errs = [], []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            errs.append(f"{source}:{lineno}: expected 'key = value', got {raw.strip()!r}")
            continue
        key, value = (p.strip() for p in line.split("=", 1))
        if not key:
            errs.append(f"{source}:{lineno}: empty key")
            continue
        pairs.append((lineno, key, value))
    return pairs, errs


def config_from_text(text: str, source: str = "<config>", base: RunConfig | None = None,
                     prefix: str = "") -> RunConfig:
    """Parse and validate. ``prefix`` selects a section (used for manifest echoes)."""
    pairs, errs = parse_pairs(text, source)
    values: dict[str, Any] = {}
    seen: dict[str, int] = {}
    for lineno, key, value in pairs:
        if prefix:
            if not key.startswith(prefix):
                continue
            key = key[len(prefix):]
        targets = _ALIASES.get(key, (key,))
        if targets[0] not in _KEYS:
            errs.append(f"{source}:{lineno}: unknown key {key!r}")
            continue
        for target in targets:
            if target in seen:
                errs.append(f"{source}:{lineno}: duplicate key {target!r} (first set on line {seen[target]})")
                continue
            seen[target] = lineno
            attr, parser = _KEYS[target]
            try:
                values[attr] = parser(value)
            except ValueError as exc:
                errs.append(f"{source}:{lineno}: {key}: {exc}")
    cfg = dataclasses.replace(base or RunConfig(), **values)
    errs.extend(cfg.validate())
    if errs:
        raise ConfigError(errs)
    return cfg


def load_config(path: str | Path, base: RunConfig | None = None) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError([f"{path}: cannot read ({exc.strerror or exc})"]) from exc
    return config_from_text(text, str(path), base)


# Scenario defaults; a config file or CLI override replaces individual fields.
_PRESETS: dict[str, dict[str, Any]] = {
    "simulate": dict(sigma=-1, t_end=5.0),
    "groundstate": dict(nx=512, ny=512),
    # Focusing Gaussian of width 0.25 at 90% of the symmetrized threshold mass
    # (amplitude^2 * pi * width^2 = 0.9 * 2ab * 11.7009); dt just below the
    # stability limit of the initial amplitude.
    "isweep": dict(frame="symmetrized", sigma=1, nx=512, ny=512, lx=8.0, ly=8.0,
                   amplitude=8.5867, width=0.25, dt=4e-5, t_end=0.5, delta=0.5, diag_stride=10),
    # A small box keeps the collapse resolved; rungs above the threshold use a
    # finer step and a shorter horizon (blow-up is detected well before it).
    "threshold": dict(frame="original", sigma=1, nx=512, ny=512, lx=12.0, ly=12.0, t_end=5.0,
                      diag_stride=10, collapse_dt=2e-5, collapse_stride=50, collapse_t_end=1.0),
    "growth": dict(sigma=-1, nx=128, ny=128, dt=0.01, t_end=50.0, diag_stride=10),
    "selfcheck": dict(nx=8, ny=8),
}


def preset(scenario: str) -> RunConfig:
    if scenario not in SCENARIOS:
        raise ConfigError([f"scenario: must be one of {', '.join(SCENARIOS)}, got {scenario!r}"])
    return RunConfig(scenario=scenario, out=f"runs/{scenario}", **_PRESETS[scenario])
