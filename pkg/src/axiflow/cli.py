"""Command line front-end: ``axiflow run|list-fixtures|describe``."""
from __future__ import annotations

import argparse
import logging
import os
import sys

from .errors import ConfigError
from .field_core import describe, list_fixtures
from .scenario import EXIT_CONFIG, execute, load_config, write_report


def _lattice(text):
    try:
        r, z = text.lower().split("x")
        return int(r), int(z)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected RxZ, e.g. 5x1, got {text!r}") from None


def _positive(text):
    v = float(text)
    if v <= 0:
        raise argparse.ArgumentTypeError("must be positive")
    return v


class _Parser(argparse.ArgumentParser):
    """Usage errors are configuration errors: exit 1, keeping 2 for numerical failures."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def build_parser():
    p = _Parser(prog="axiflow", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run a scenario config")
    r.add_argument("--config", required=True)
    r.add_argument("--out-dir", required=True)
    r.add_argument("--mode", choices=("diagnose", "validate"))
    r.add_argument("--threads", type=int, default=os.cpu_count() or 1)
    r.add_argument("--format", choices=("csv", "jsonl"))
    r.add_argument("--ode-tol", type=_positive)
    r.add_argument("--seed-lattice", type=_lattice, metavar="RxZ")
    sub.add_parser("list-fixtures", help="list the analytic fixtures")
    d = sub.add_parser("describe", help="print a fixture's formula and citation")
    d.add_argument("fixture")
    d.add_argument("--param", action="append", default=[], metavar="KEY=VALUE",
                   help="override a constructor parameter")
    return p


def _setup_logging():
    level = os.environ.get("EFL_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")


def main(argv=None) -> int:
    _setup_logging()
    args = build_parser().parse_args(argv)
    if args.command == "list-fixtures":
        for name in list_fixtures():
            print(name)
        return 0
    if args.command == "describe":
        from .field_core import make_fixture
        try:
            if args.param:
                spec = {"kind": args.fixture}
                for kv in args.param:
                    k, v = kv.split("=", 1)
                    spec[k] = float(v)
                print(describe(make_fixture(spec)))
            else:
                print(describe(args.fixture))
        except (ConfigError, KeyError, ValueError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_CONFIG
        return 0
    overrides = {"out_dir": args.out_dir, "mode": args.mode, "format": args.format,
                 "ode_tol": args.ode_tol, "lattice": args.seed_lattice}
    try:
        cfg = load_config(args.config, overrides)
    except ConfigError as exc:
        write_report(args.out_dir, {"error": exc.as_dict(), "exit_code": EXIT_CONFIG})
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return execute(cfg, args.threads)


if __name__ == "__main__":
    sys.exit(main())
