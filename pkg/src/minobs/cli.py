"""Command line entry point: ``minobs run|validate|report``."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .errors import MinobsError
from .harness import ConfigIOError, ResultBundle, emit_report, load_config, run, summary, validate

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_ACCEPTANCE = 3
EXIT_IO = 4


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="minobs", description="Minimal-observer channel experiments.")
    sub = ap.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run an experiment and write its result bundle")
    p_run.add_argument("--config", required=True, help="experiment configuration (JSON)")
    p_run.add_argument("--out", help="output directory (overrides the config)")
    p_run.add_argument("--seed", type=int, help="override the config seed")
    p_run.add_argument("--exhaustive", action="store_true", help="force brute-force paths where N permits")

    p_val = sub.add_parser("validate", help="list invariant violations without running")
    p_val.add_argument("--config", required=True)
    p_val.add_argument("--seed", type=int)

    p_rep = sub.add_parser("report", help="re-emit the report files of a saved bundle")
    p_rep.add_argument("--config", required=True, help="bundle.json written by `run`")
    p_rep.add_argument("--out", help="output directory (default: next to the bundle)")
    return ap


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        if args.command == "report":
            path = Path(args.config)
            bundle = ResultBundle.from_json(path.read_text())
            sys.stdout.write(emit_report(bundle, args.out or path.parent))
            return EXIT_OK if bundle.passed else EXIT_ACCEPTANCE

        cfg = load_config(args.config).with_overrides(seed=args.seed, exhaustive=getattr(args, "exhaustive", False))
        problems = validate(cfg)
        if problems:
            for msg in problems:
                print(msg, file=sys.stderr)
            io_only = all(m.startswith("I/O") for m in problems)
            return EXIT_IO if io_only else EXIT_VALIDATION
        if args.command == "validate":
            print("ok")
            return EXIT_OK

        bundle = run(cfg, out_dir=args.out)
        sys.stdout.write(summary(bundle))
        return EXIT_OK if bundle.passed else EXIT_ACCEPTANCE
    except (ConfigIOError, OSError) as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except MinobsError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
