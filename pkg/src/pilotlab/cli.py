"""Command-line driver: run named experiments, compare finished runs.

Exit codes: 0 success, 2 invalid configuration, 3 experiment failure.
The default output root is taken from PILOTLAB_OUTPUT_ROOT (falling back
to ./runs); every run writes its artifacts plus a manifest.json that
reproduces the run byte for byte.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib

from .errors import ConfigError, PilotLabError
from .experiments import EXPERIMENTS, compare_runs, run_experiment
from .io import read_manifest

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_FAILED = 3

OUTPUT_ROOT_ENV = "PILOTLAB_OUTPUT_ROOT"


def _parse_value(text: str):
    """Literal if it parses as JSON (numbers, lists, booleans), else a string."""
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def _collect_overrides(args) -> dict:
    overrides = {}
    if args.config:
        with open(args.config, "rb") as fh:
            overrides.update(tomllib.load(fh))
    for item in args.set or []:
        if "=" not in item:
            raise ConfigError(item, "overrides take the form key=value")
        key, _, value = item.partition("=")
        overrides[key] = _parse_value(value)
    for key in ("law", "n", "seed"):
        value = getattr(args, key, None)
        if value is not None:
            overrides[key] = value
    return overrides


def _output_dir(args, experiment: str) -> Path:
    if args.out:
        return Path(args.out)
    root = Path(os.environ.get(OUTPUT_ROOT_ENV, "runs"))
    return root / experiment


def _cmd_run(args) -> int:
    if args.from_manifest:
        manifest = read_manifest(args.from_manifest)
        experiment = manifest["experiment"]
        overrides = dict(manifest["config"])
    else:
        if not args.experiment:
            print("error: an experiment name or --from-manifest is required", file=sys.stderr)
            return EXIT_CONFIG
        experiment = args.experiment
        overrides = _collect_overrides(args)
    outdir = _output_dir(args, experiment)
    try:
        outputs = run_experiment(experiment, overrides, outdir)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except PilotLabError as exc:
        print(f"experiment failed: {exc}", file=sys.stderr)
        return EXIT_FAILED
    for name in outputs:
        print(outdir / name)
    return EXIT_OK


def _cmd_compare(args) -> int:
    try:
        report = compare_runs(args.dir_a, args.dir_b, metric=args.metric)
    except (FileNotFoundError, PilotLabError) as exc:
        print(f"comparison failed: {exc}", file=sys.stderr)
        return EXIT_FAILED
    text = json.dumps(report, indent=2, sort_keys=True)
    if args.out:
        Path(args.out).write_text(text + "\n")
    print(text)
    if "verdict" in report:
        print(f"verdict: {report['verdict']}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pilotlab",
        description="pilot-wave dynamics experiments: run and compare",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one experiment and write its artifacts")
    run.add_argument("experiment", nargs="?", choices=sorted(EXPERIMENTS), help="experiment name")
    run.add_argument("--config", help="TOML file with flat key-value settings")
    run.add_argument("--set", action="append", metavar="KEY=VALUE", help="override one setting")
    run.add_argument("--law", help="dynamics law (standard, modified, born, nelson)")
    run.add_argument("--n", type=int, help="ensemble size")
    run.add_argument("--seed", type=int, help="base RNG seed")
    run.add_argument("--out", help="output directory (default: $%s/<experiment>)" % OUTPUT_ROOT_ENV)
    run.add_argument("--from-manifest", help="re-run from an emitted manifest.json")
    run.set_defaults(func=_cmd_run)

    comp = sub.add_parser("compare", help="compare two finished run directories")
    comp.add_argument("dir_a")
    comp.add_argument("dir_b")
    comp.add_argument("--metric", default="ks", help="comparison metric (default ks)")
    comp.add_argument("--out", help="write the JSON report here as well")
    comp.set_defaults(func=_cmd_compare)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
