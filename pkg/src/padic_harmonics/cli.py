"""Command-line front end.

Subcommands:
  validate --spec PATH          load and validate an experiment file
  run --spec PATH --out DIR     execute all tasks and write reports

Exit codes: 0 when every verify task passes (with --strict, indeterminate
condition checks also count as failures), 1 when any task fails (the
failing ids go to stderr), 2 for unusable input.
"""

from __future__ import annotations

import argparse
import os
import sys

from .specio import SpecError, load_spec, run_spec, serialize_spec


def _default_jobs() -> int:
    env = os.environ.get("PADIC_HARMONICS_JOBS")
    if env is None:
        return 1
    try:
        jobs = int(env)
    except ValueError:
        return 1
    return max(1, jobs)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="padic-harmonics",
        description=(
            "Exact evaluation of p-adic singular integrals, commutators and "
            "weighted norms, with deterministic verification reports."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    validate = sub.add_parser("validate", help="load and validate a spec file")
    validate.add_argument("--spec", required=True, help="experiment spec path")
    validate.add_argument(
        "--echo", action="store_true",
        help="print the canonical serialized form of the validated spec",
    )

    run = sub.add_parser("run", help="execute a spec and write reports")
    run.add_argument("--spec", required=True, help="experiment spec path")
    run.add_argument("--out", required=True, help="output directory")
    run.add_argument("--seed", type=int, default=None,
                     help="override the spec seed")
    run.add_argument("--jobs", type=int, default=_default_jobs(),
                     help="corpus parallelism (default: PADIC_HARMONICS_JOBS or 1)")
    run.add_argument("--strict", action="store_true",
                     help="treat indeterminate condition checks as failures")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        spec = load_spec(args.spec)
    except SpecError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if args.command == "validate":
        if args.echo:
            sys.stdout.write(serialize_spec(spec))
        else:
            print(
                f"ok: {len(spec.tasks)} task(s), p={spec.context.p}, "
                f"n={spec.context.n}"
            )
        return 0
    try:
        code, failing = run_spec(
            spec, args.out, seed=args.seed, jobs=max(1, args.jobs),
            strict=args.strict,
        )
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if failing:
        print("failing tasks: " + " ".join(failing), file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
