"""Command-line entry point.

    cnnpreimage list
    cnnpreimage flow --scenario fig2-bias-only --out-dir out --format json --format svg
    cnnpreimage trace --config my_scenario.json --seed 3

Exit status: 0 on success, 2 for config or usage errors, 3 when a core
computation fails or a scenario check does not hold.
"""

from __future__ import annotations

import argparse
import dataclasses
import logging
import sys
from pathlib import Path

from .config import Tolerances, set_tolerances
from .errors import ConfigError, GeometryError, UnsupportedProjection
from .export import export_json, export_obj, export_svg
from .scenarios import ScenarioConfig, bundled, bundled_names, run_scenario

EXIT_OK, EXIT_CONFIG, EXIT_CORE = 0, 2, 3

COMMANDS = {
    "preimage": "preimage",
    "nesting": "nesting",
    "flow": "contraction-flow",
    "trace": "manifold-trace",
    "cells": "cells",
    "run": None,  # whatever task the config names
}

log = logging.getLogger("cnnpreimage")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="cnnpreimage", description="Geometry of single-channel convolutional ReLU layers.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    sub.add_parser("list", help="list bundled scenarios")
    for name, task in COMMANDS.items():
        p = sub.add_parser(name, help=f"run a {task or 'any'} scenario")
        src = p.add_mutually_exclusive_group(required=True)
        src.add_argument("--config", type=Path, help="scenario JSON file")
        src.add_argument("--scenario", help="name of a bundled scenario")
        p.add_argument("--seed", type=int, help="override the config seed")
        p.add_argument("--out-dir", type=Path, default=Path("."), help="directory for exports")
        p.add_argument("--format", action="append", choices=["json", "obj", "svg"], dest="formats",
                       help="export format; repeat for several (default: the config's list)")
        p.add_argument("--projection", help='SVG projection: "identity" or an axis pair such as "0,2"')
    return parser


def _load(args) -> ScenarioConfig:
    config = ScenarioConfig.load(args.config) if args.config else bundled(args.scenario)
    want = COMMANDS[args.command]
    if want is not None and config.task != want:
        raise ConfigError(f"config task is {config.task!r}; use the matching subcommand instead of {args.command!r}")
    changes = {}
    if args.seed is not None:
        changes["seed"] = args.seed
    if args.formats:
        changes["formats"] = tuple(args.formats)
    if args.projection:
        changes["projection"] = args.projection
    return dataclasses.replace(config, **changes)


def _write(g, config, out_dir: Path) -> list:
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for fmt in config.formats:
        path = out_dir / f"{config.name}.{fmt}"
        if fmt == "json":
            export_json(g, path)
        elif fmt == "obj":
            export_obj(g, path)
        else:
            export_svg(g, path, config.projection)
        written.append(path)
    return written


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(name)s: %(message)s")
    if args.command == "list":
        for name in bundled_names():
            cfg = bundled(name)
            print(f"{name:18s} {cfg.task:17s} {cfg.description}")
        return EXIT_OK
    try:
        set_tolerances(Tolerances.from_env())
        config = _load(args)
        log.info("running %s (%s)", config.name, config.task)
        g, report = run_scenario(config)
        written = _write(g, config, args.out_dir)
    except (ConfigError, UnsupportedProjection, ValueError) as exc:
        # ValueError covers malformed tolerance env vars and bad layer data
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except GeometryError as exc:
        print(f"computation failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_CORE
    except OSError as exc:
        print(f"cannot write export: {exc}", file=sys.stderr)
        return EXIT_CORE
    sys.stdout.write(report)
    for path in written:
        print(f"wrote {path}")
    return EXIT_OK if g.summary["passed"] else EXIT_CORE


if __name__ == "__main__":
    raise SystemExit(main())
