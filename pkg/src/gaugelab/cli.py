"""Command-line entry point: ``gaugelab <subcommand> [options]``.

Exit status is 0 when every check passes, 1 when a check fails and 2 for
configuration errors.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .errors import ConfigError
from .report import Report, Scenario, emit, kk_bundle, kk_initial_state, load_config, run_scenario, suite

SUBCOMMANDS = ("hodge", "holonomy", "ym-flow", "instanton", "chern", "maxwell", "kk-geodesic", "suite")

# which scenario parameter the generic flags override
_RESOLUTION_KEY = "resolution"
_STEP_KEY = "step"


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise ConfigError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="gaugelab", description="Verification runs for discrete gauge-field computations.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in SUBCOMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", type=Path, help="INI file with one section per scenario")
        sp.add_argument("--out", type=Path, help="write the report here instead of stdout")
        sp.add_argument("--format", choices=("json", "text"), default="json")
        sp.add_argument("--seed", type=int, default=None)
        sp.add_argument("--resolution", type=int, default=None)
        sp.add_argument("--step", type=float, default=None)
        sp.add_argument("--timing", action="store_true", help="include runtimes (breaks byte-identity)")
        if name == "kk-geodesic":
            sp.add_argument("--trajectory", type=Path, help="CSV file for the sampled geodesic")
    return p


def _override(s: Scenario, args) -> Scenario:
    from .report import TARGETS

    params = dict(s.params)
    defaults = TARGETS[s.target].defaults
    if args.resolution is not None and _RESOLUTION_KEY in defaults:
        params[_RESOLUTION_KEY] = args.resolution
    if args.step is not None and _STEP_KEY in defaults:
        params[_STEP_KEY] = args.step
    seed = s.seed if args.seed is None else args.seed
    return Scenario(s.name, s.target, params, seed)


def _scenarios(args) -> list[Scenario]:
    if args.command == "suite":
        base = load_config(args.config) if args.config else suite(7)
    else:
        base = [Scenario(args.command, args.command)]
        if args.config:
            chosen = [s for s in load_config(args.config) if s.target == args.command]
            if not chosen:
                raise ConfigError(f"config has no section for target {args.command!r}")
            base = chosen
    return [_override(s, args) for s in base]


def _write_trajectory(s: Scenario, path: Path) -> None:
    from .kaluza_klein import kk_geodesic

    b = kk_bundle("U1", s.get("field"))
    traj = kk_geodesic(b, kk_initial_state("U1", s.seed), s.get("T"), s.get("step"))
    traj.write_csv(path)


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        scenarios = _scenarios(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    reports: list[Report] = [run_scenario(s) for s in scenarios]
    single = args.command != "suite" and len(reports) == 1
    text = emit(reports[0] if single else reports, args.format, args.timing)
    if args.out:
        args.out.write_text(text)
    else:
        sys.stdout.write(text)
    if args.command == "kk-geodesic":
        target = args.trajectory or (args.out.with_suffix(".csv") if args.out else None)
        if target is not None:
            _write_trajectory(scenarios[0], target)
    return 0 if all(r.passed for r in reports) else 1


if __name__ == "__main__":
    sys.exit(main())
