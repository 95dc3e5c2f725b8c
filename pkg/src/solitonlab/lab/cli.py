"""Command line entry point.

    solitonlab validate <config>
    solitonlab ground-state <config> --out <dir>
    solitonlab evolve <config> --out <dir>      # stationary / transport / concentration
    solitonlab sweep <config> --out <dir>
    solitonlab stability <config> --out <dir>

Exit status: 0 when every check passes, 1 on a failed check, 2 on a
configuration or precondition error.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys

from .config import ConfigError, RunConfig, load_config
from .experiments import PreconditionError, run, run_ground_state, run_stability, run_sweep, run_validate

log = logging.getLogger("solitonlab")


def _parser():
    p = argparse.ArgumentParser(prog="solitonlab", description="NLS soliton experiments")
    p.add_argument("--quiet", action="store_true", help="only report failures")
    sub = p.add_subparsers(dest="command", required=True)
    v = sub.add_parser("validate", help="sample the hypotheses on W and V")
    v.add_argument("config")
    for name, helptext in [("ground-state", "compute and store the ground state"),
                           ("evolve", "run the configured stationary/transport/concentration experiment"),
                           ("sweep", "transport runs over the h list"),
                           ("stability", "orbital stability run")]:
        s = sub.add_parser(name, help=helptext)
        s.add_argument("config")
        s.add_argument("--out", required=True, help="output directory")
        s.add_argument("--cadence", type=int, help="override time.cadence (steps between records)")
        s.add_argument("--quiet", action="store_true", default=argparse.SUPPRESS, help=argparse.SUPPRESS)
    return p


def _report(manifest, quiet):
    for c in manifest.get("checks", []):
        if not quiet or not c["passed"]:
            print(f"{'PASS' if c['passed'] else 'FAIL'} {c['name']}: {c['value']} (bound {c['bound']})")
    if not quiet:
        for k, val in manifest.get("summary", {}).items():
            print(f"  {k} = {val}")


def main(argv=None):
    args = _parser().parse_args(argv)
    quiet = args.quiet
    logging.basicConfig(level=logging.WARNING if quiet else logging.INFO, format="%(message)s")
    try:
        cfg = load_config(args.config)
        if getattr(args, "cadence", None) is not None:
            if args.cadence < 1:
                raise ConfigError("--cadence must be a positive integer")
            cfg = dataclasses.replace(cfg, cadence=args.cadence)
        if args.command == "validate":
            rep = run_validate(cfg)
            for line in rep["lines"]:
                if not quiet or "FAIL" in line:
                    print(line)
            return 0 if rep["passed"] else 1
        if args.command == "ground-state":
            manifest = run_ground_state(cfg, args.out)
        elif args.command == "sweep":
            manifest = run_sweep(cfg, args.out)
        elif args.command == "stability":
            manifest = run_stability(cfg, args.out)
        else:
            if cfg.experiment in ("sweep", "stability"):
                raise ConfigError(f"experiment {cfg.experiment!r} has its own subcommand")
            manifest = run(cfg, args.out)
    except (ConfigError, PreconditionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    _report(manifest, quiet)
    return 0 if manifest["status"] == "pass" else 1


if __name__ == "__main__":
    sys.exit(main())
