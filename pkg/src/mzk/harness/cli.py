"""``mzk`` command line: one verb per scenario."""

from __future__ import annotations

import argparse
import sys

from .config import SCENARIOS, ConfigError, RunConfig, load_config, preset
from .manifest import MANIFEST_NAME


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mzk", description="2D modified Zakharov-Kuznetsov laboratory")
    sub = parser.add_subparsers(dest="scenario", required=True)
    for name in SCENARIOS:
        p = sub.add_parser(name, help=f"run the {name} scenario")
        p.add_argument("--config", metavar="PATH", help="key = value configuration file")
        p.add_argument("--n", type=int, help="grid points per axis (sets grid.nx and grid.ny)")
        p.add_argument("--s", type=float, help="Sobolev index for H^s and the I-operator")
        p.add_argument("--dt", type=float, help="time step")
        p.add_argument("--t-end", type=float, dest="t_end", help="final time")
        p.add_argument("--out", metavar="DIR", help="output directory")
        p.add_argument("--seed", type=int, help="random seed")
    return parser


def resolve_config(args: argparse.Namespace) -> RunConfig:
    base = preset(args.scenario)
    cfg = load_config(args.config, base) if args.config else base
    if cfg.scenario != args.scenario:
        raise ConfigError([f"scenario: config file says {cfg.scenario!r} but the verb is {args.scenario!r}"])
    changes = {}
    if args.n is not None:
        changes.update(nx=args.n, ny=args.n)
    for name in ("s", "dt", "t_end", "out", "seed"):
        value = getattr(args, name)
        if value is not None:
            changes[name] = value
    return cfg.replace(**changes).checked()


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = resolve_config(args)
    except ConfigError as exc:
        print(exc, file=sys.stderr)
        return 2

    from . import scenarios, selfcheck

    runner = {
        "simulate": scenarios.run_simulate,
        "groundstate": scenarios.run_groundstate,
        "isweep": scenarios.run_isweep,
        "threshold": scenarios.run_threshold,
        "growth": scenarios.run_growth,
        "selfcheck": selfcheck.run_selfcheck,
    }[cfg.scenario]
    try:
        result = runner(cfg)
    except ConfigError as exc:
        print(exc, file=sys.stderr)
        return 2
    except Exception as exc:
        print(f"run failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        print(f"partial manifest: {cfg.out}/{MANIFEST_NAME}", file=sys.stderr)
        return 1

    if cfg.scenario == "selfcheck":
        print(result.report["table"])
    for key, value in result.manifest.summary.items():
        print(f"{key} = {value}")
    print(f"manifest: {result.out_dir / MANIFEST_NAME}")
    if cfg.scenario == "selfcheck" and result.manifest.summary["failed"]:
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
