"""Command line: ``lpsfem run|verify|list``."""

import argparse
import json
import logging
import sys
from pathlib import Path

from .config import ExperimentConfig, load_config
from .errors import ConfigurationError, FactorizationFailure, LpsError, ResidualFailure
from .problems import list_examples


def _int_list(text):
    try:
        vals = tuple(int(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")
    if not vals:
        raise argparse.ArgumentTypeError("empty list")
    return vals


def build_parser():
    p = argparse.ArgumentParser(prog="lpsfem", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true", help="log per-level progress")
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run an example and write CSV/VTK/JSON outputs")
    run.add_argument("example", nargs="?", help="example id (see 'list') or 'custom'")
    run.add_argument("--config", help="key = value experiment file; flags override it")
    run.add_argument("--kind", choices=("curl", "div"))
    run.add_argument("--r", type=_int_list, help="order(s), e.g. 1 or 1,2")
    run.add_argument("--levels", type=_int_list, help="1/h values, e.g. 4,8,16")
    run.add_argument("--n", type=int, help="mesh level for layer examples")
    run.add_argument("--no-s1", dest="s1", action="store_const", const=False)
    run.add_argument("--no-s2", dest="s2", action="store_const", const=False)
    run.add_argument("--no-enrich", dest="enrich", action="store_const", const=False)
    run.add_argument("--out", help="output directory (default ./results)")
    run.add_argument("--deterministic", action="store_const", const=True)
    run.add_argument("--large", action="store_const", const=True,
                     help="include the expensive 1/h = 32 level of 3D examples")
    run.add_argument("--resolution", type=int, help="field sampling intervals per axis")

    ver = sub.add_parser("verify", help="print the structural verification table")
    ver.add_argument("--seed", type=int, default=0)
    ver.add_argument("--json", help="also write the table as JSON here")

    sub.add_parser("list", help="list the registered examples")
    return p


def _cmd_list():
    for spec in list_examples():
        variants = " / ".join(v.name for v in spec.variants)
        kind = "layer" if spec.layer else "convergence"
        print(f"{spec.id}: {spec.title} [{spec.dim}D {kind}] kinds={','.join(spec.kinds)} "
              f"r={','.join(map(str, spec.orders))} variants: {variants}")
    return 0


def _cmd_verify(args):
    from .verification import format_check_table, run_structural_checks

    rows = run_structural_checks(seed=args.seed)
    print(format_check_table(rows))
    if args.json:
        Path(args.json).write_text(json.dumps([r.__dict__ for r in rows], indent=2) + "\n")
    return 0 if all(r.passed for r in rows) else 1


def _cmd_run(args):
    from .experiments import run_experiment

    cfg = load_config(args.config) if args.config else ExperimentConfig()
    cfg = cfg.merged(example=args.example, kind=args.kind, r=args.r, levels=args.levels,
                     n=args.n, s1=args.s1, s2=args.s2, enrich=args.enrich, out=args.out,
                     deterministic=args.deterministic, large=args.large,
                     resolution=args.resolution)
    run_experiment(cfg)
    return 0


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(message)s")
    logging.captureWarnings(True)
    try:
        if args.command == "list":
            return _cmd_list()
        if args.command == "verify":
            return _cmd_verify(args)
        return _cmd_run(args)
    except ConfigurationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (FactorizationFailure, ResidualFailure) as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return 3
    except LpsError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
