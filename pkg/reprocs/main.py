"""
Command-line entry point for ReProCS experiments.

    reprocs run <preset> [--full-scale] [--seed N] [--mc-runs K] [--jobs J] [--out DIR] [--set key=value ...]
    reprocs run --config PATH [...]
    reprocs generate --spec PATH --out DIR [--seed N] [--set key=value ...]
    reprocs ingest --frames PATH --train N --out PATH [--alpha0 X] [--tau T] [--alpha A] [--energy P]

Version: 1.0
"""

# External imports with versions
import argparse  # built-in
import sys  # built-in
from typing import List, Optional  # built-in

# Internal imports
from reprocs.cli.commands import cmd_generate, cmd_ingest, cmd_run
from reprocs.config.settings import get_settings
from reprocs.core.exceptions import EXIT_VALIDATION
from reprocs.core.logging import setup_logging
from reprocs.schemas.experiment import PRESET_NAMES


def build_parser() -> argparse.ArgumentParser:
    settings = get_settings()
    parser = argparse.ArgumentParser(
        prog="reprocs",
        description="Recursive projected compressive sensing experiments",
    )
    parser.add_argument("--log-level", default=None, help=f"Log level (default {settings.LOG_LEVEL})")
    parser.add_argument("--log-json", action="store_true", default=None, help="Emit JSON log lines")
    commands = parser.add_subparsers(dest="command", required=True)

    run = commands.add_parser("run", help="Run a preset or a configured experiment")
    run.add_argument("preset", nargs="?", choices=PRESET_NAMES, help="Named preset")
    run.add_argument("--config", dest="config_path", help="Experiment TOML file")
    run.add_argument("--full-scale", action="store_true", help="Use the published problem sizes")
    run.add_argument("--seed", type=int, default=None)
    run.add_argument("--mc-runs", type=int, default=None)
    run.add_argument("--jobs", type=int, default=None, help="Worker processes (default: available cores)")
    run.add_argument("--out", dest="out_dir", default=None, help="Report directory")
    run.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE")

    generate = commands.add_parser("generate", help="Write ground-truth frame files")
    generate.add_argument("--spec", dest="spec_path", required=True)
    generate.add_argument("--out", dest="out_dir", required=True)
    generate.add_argument("--seed", type=int, default=None)
    generate.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE")

    ingest = commands.add_parser("ingest", help="Initialize a basis checkpoint from background frames")
    ingest.add_argument("--frames", dest="frames_path", required=True)
    ingest.add_argument("--train", dest="train_count", type=int, required=True)
    ingest.add_argument("--out", dest="out_path", required=True)
    ingest.add_argument("--alpha0", type=float, default=0.0)
    ingest.add_argument("--tau", type=int, default=20)
    ingest.add_argument("--alpha", type=float, default=None)
    ingest.add_argument("--energy", type=float, default=None)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_VALIDATION if e.code else 0
    setup_logging(level=args.log_level, use_json=args.log_json)

    if args.command == "run":
        return cmd_run(
            preset=args.preset,
            config_path=args.config_path,
            overrides=args.overrides,
            seed=args.seed,
            mc_runs=args.mc_runs,
            jobs=args.jobs,
            out_dir=args.out_dir,
            full_scale=args.full_scale,
        )
    if args.command == "generate":
        return cmd_generate(args.spec_path, args.out_dir, overrides=args.overrides, seed=args.seed)
    return cmd_ingest(
        args.frames_path,
        args.train_count,
        args.out_path,
        alpha0=args.alpha0,
        tau=args.tau,
        alpha=args.alpha,
        energy=args.energy,
    )


if __name__ == "__main__":
    sys.exit(main())
