"""Command-line entry point: ``paretoprune {train,sweep,knee,smgd-compare}``."""
import argparse
import json
import os
import sys

from .config import ExperimentConfig
from .errors import ConfigurationError, ParetoPruneError
from .runner import COMMANDS

EXIT_OK, EXIT_RUN_FAILED, EXIT_CONFIG = 0, 1, 2


def build_parser():
    parser = argparse.ArgumentParser(prog="paretoprune", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="JSON experiment config")
        p.add_argument("--out", help="output directory (default runs/<command>-<hash>)")
        p.add_argument("--seed", type=int, help="override the master seed")
        p.add_argument("--jobs", type=int, default=1, help="worker processes for sweeps and searches")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    overrides = {"seed": args.seed} if args.seed is not None else None
    try:
        cfg = ExperimentConfig.load(args.config, overrides)
        if args.jobs < 1:
            raise ConfigurationError("--jobs must be >= 1")
    except (ConfigurationError, OSError) as exc:
        print(f"paretoprune: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    out = args.out or os.path.join("runs", f"{args.command}-{cfg.hash()[:12]}")
    cmd = COMMANDS[args.command]
    kwargs = {"jobs": args.jobs} if args.command in ("sweep", "knee") else {}
    try:
        manifest = cmd(cfg, out, **kwargs)
    except ConfigurationError as exc:
        print(f"paretoprune: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ParetoPruneError, ArithmeticError) as exc:
        print(f"paretoprune: run failed: {exc}", file=sys.stderr)
        return EXIT_RUN_FAILED

    brief = {"out": out, "status": manifest["status"], "config_hash": manifest["config_hash"]}
    for key in ("final_point", "knee", "failures", "mean_lambda", "error"):
        if manifest.get(key) is not None:
            brief[key] = manifest[key]
    if manifest.get("self_check"):
        brief["self_check"] = manifest["self_check"]
    print(json.dumps(brief, indent=2, sort_keys=True, default=str))
    ok = manifest["status"] == "ok" and not manifest.get("self_check")
    return EXIT_OK if ok else EXIT_RUN_FAILED


if __name__ == "__main__":
    sys.exit(main())
