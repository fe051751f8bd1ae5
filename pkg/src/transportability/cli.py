"""Command line entry point: simulate, estimate, diagnose, replicate."""

from __future__ import annotations

import argparse
import json
import logging
import sys

from .data import Method, read_csv, write_csv
from .diagnostics import diagnose
from .errors import NumericalError, TransportError
from .estimators import PropensityPolicy
from .harness import (
    METHOD_ORDER,
    config_overrides,
    dump_json,
    estimate_report,
    load_config,
    replication_stream,
    run_replications,
)
from .plot import render_boxplot_svg
from .simulation import generate_dataset

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC = 0, 2, 3

METHOD_ALIASES = {
    "naive": Method.NAIVE,
    "ols": Method.INTERACTION_OLS,
    "interaction_ols": Method.INTERACTION_OLS,
    "ipsw": Method.IPSW,
    "gformula": Method.GFORMULA,
}


def _seed(text: str) -> int:
    v = int(text)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def _methods(text: str) -> list[Method]:
    try:
        return [METHOD_ALIASES[t.strip()] for t in text.split(",") if t.strip()]
    except KeyError as exc:
        raise argparse.ArgumentTypeError(f"unknown method {exc.args[0]!r}") from None


def _key_value(text: str) -> tuple[str, str]:
    if "=" not in text:
        raise argparse.ArgumentTypeError("expected KEY=VALUE")
    k, v = text.split("=", 1)
    return k.strip(), v.strip()


def _write(path: str | None, text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def _config(args):
    config = load_config(args.config)
    if args.set:
        config = config_overrides(dict(args.set), config)
    return config


def cmd_simulate(args) -> int:
    config = _config(args)
    study = generate_dataset(config, replication_stream(args.seed, 0))
    if args.out in (None, "-"):
        from .data import serialize_csv
        sys.stdout.write(serialize_csv(study.dataset))
    else:
        write_csv(study.dataset, args.out)
    return EXIT_OK


def cmd_estimate(args) -> int:
    dataset = read_csv(args.data)
    report = estimate_report(dataset, args.methods, e1=args.e1, degree=args.degree)
    _write(args.out, dump_json(report))
    errors = [e["error"] for e in report["estimates"].values() if "error" in e]
    if errors and len(errors) == len(report["estimates"]):
        sys.stderr.write(json.dumps({"error": errors[0], "all_methods_failed": True}) + "\n")
        numeric = {"RankDeficient", "Separation", "DegenerateLabels", "ZeroVariance"}
        return EXIT_NUMERIC if all(e["type"] in numeric for e in errors) else EXIT_INPUT
    return EXIT_OK


def cmd_diagnose(args) -> int:
    dataset = read_csv(args.data)
    report = diagnose(dataset, PropensityPolicy(args.e1))
    _write(args.out, dump_json({"diagnostics": report.to_json(), "meta": {"n": dataset.n, "m": dataset.m, "seed": None}}))
    return EXIT_OK


def cmd_replicate(args) -> int:
    config = _config(args)
    summary = run_replications(config, args.reps, args.seed, workers=args.workers)
    _write(args.out, dump_json(summary.to_json()))
    if args.svg:
        _write(args.svg, render_boxplot_svg(summary))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="transport", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def config_args(p):
        p.add_argument("--config", help="flat key = value config file")
        p.add_argument("--set", action="append", type=_key_value, metavar="KEY=VALUE",
                       help="override one config field (repeatable)")

    p = sub.add_parser("simulate", help="emit one simulated dataset as CSV")
    config_args(p)
    p.add_argument("--seed", type=_seed, required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("estimate", help="estimate the ATE and run diagnostics on a CSV dataset")
    p.add_argument("--data", required=True)
    p.add_argument("--methods", type=_methods, default=list(METHOD_ORDER))
    p.add_argument("--e1", type=float, default=0.5)
    p.add_argument("--degree", type=int, default=1)
    p.add_argument("--out")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("diagnose", help="diagnostics only")
    p.add_argument("--data", required=True)
    p.add_argument("--e1", type=float, default=0.5)
    p.add_argument("--out")
    p.set_defaults(func=cmd_diagnose)

    p = sub.add_parser("replicate", help="run the Monte-Carlo replication study")
    config_args(p)
    p.add_argument("--reps", type=int, default=50)
    p.add_argument("--seed", type=_seed, required=True)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out")
    p.add_argument("--svg")
    p.set_defaults(func=cmd_replicate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except OSError as exc:
        sys.stderr.write(json.dumps({"error": {"type": "IOError", "message": str(exc)}}) + "\n")
        return EXIT_INPUT
    except NumericalError as exc:
        sys.stderr.write(json.dumps({"error": exc.to_json()}) + "\n")
        return EXIT_NUMERIC
    except (TransportError, ValueError) as exc:
        err = exc.to_json() if isinstance(exc, TransportError) else {"type": type(exc).__name__, "message": str(exc)}
        sys.stderr.write(json.dumps({"error": err}) + "\n")
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
