"""Command-line entry point ``pic-lab``."""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np
import yaml

from . import __version__
from .curvature import CurvatureError, classify_curvature, curvature
from .harness import (
    EXIT_INTERNAL,
    EXIT_PASS,
    EXIT_SCHEMA,
    SchemaError,
    describe_status,
    load_metric,
    run_scenario,
    run_suite,
)
from .metrics import MetricError
from .report import SCHEMA_VERSION, dump_doc, format_float, render_table

SURGERY_OPS = {
    "verify-prop51": "surgery-verify-prop51",
    "cap-path": "surgery-cap-path",
    "double-isotopy": "surgery-double-isotopy",
}


def _common(p):
    p.add_argument("--format", choices=("table", "doc"), default=None,
                   help="also print the table or the structured document to stdout")
    p.add_argument("--seed", type=int, default=None, help="override the scenario seed")
    p.add_argument("--threads", type=int, default=None, help="worker threads")
    p.add_argument("--out-dir", default=None, help="write outputs here instead of next to the config")
    p.add_argument("--no-write", action="store_true", help="do not write report files")


def build_parser():
    ap = argparse.ArgumentParser(prog="pic-lab", description="Certify curvature conditions of structured 4-metrics.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run one scenario file")
    p.add_argument("config")
    _common(p)

    p = sub.add_parser("suite", help="run every *.cfg scenario in a directory")
    p.add_argument("directory")
    _common(p)

    p = sub.add_parser("curvature", help="curvature blocks of a metric at given points")
    p.add_argument("metric")
    p.add_argument("--point", nargs=4, type=float, action="append", required=True,
                   metavar=("X0", "X1", "X2", "X3"))
    p.add_argument("--backend", choices=("analytic", "fd"), default="analytic")
    p.add_argument("--format", choices=("table", "doc"), default="table")
    p.add_argument("--seed", type=int, default=None, help=argparse.SUPPRESS)
    p.add_argument("--threads", type=int, default=None, help=argparse.SUPPRESS)

    p = sub.add_parser("surgery", help="surgery operations")
    ss = p.add_subparsers(dest="surgery_op", required=True)
    for name in SURGERY_OPS:
        q = ss.add_parser(name)
        q.add_argument("config")
        _common(q)
    return ap


def _print_result(res, fmt, out):
    if fmt == "doc" and res.doc is not None:
        out.write(dump_doc(res.doc))
    elif fmt == "table" and res.header is not None:
        out.write(render_table(res.header, res.rows))


def _run(args, operation=None):
    res = run_scenario(args.config, args.seed, args.threads, args.out_dir, not args.no_write, operation)
    _print_result(res, args.format, sys.stdout)
    line = f"{res.name}: {describe_status(res.status)}"
    if res.message:
        line += f" ({res.message})"
    print(line, file=sys.stderr)
    for f in res.files:
        print(f"wrote {f}", file=sys.stderr)
    return res.status


def _curvature(args):
    try:
        metric = load_metric(args.metric, Path("."))
    except SchemaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    pts = np.asarray(args.point, dtype=float)
    if not np.all(metric.domain.contains(pts)):
        print("error: points lie outside the metric's chart domain", file=sys.stderr)
        return EXIT_SCHEMA
    try:
        blocks = curvature(metric, pts, args.backend)
        rep = classify_curvature(blocks)
    except (MetricError, CurvatureError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA if isinstance(exc, MetricError) else EXIT_INTERNAL
    ev = blocks.op_eigenvalues
    if args.format == "doc":
        doc = {"schema_version": SCHEMA_VERSION, "kind": "curvature", "backend": args.backend,
               "points": [{"point": pts[i], "eigenvalues": ev[i], "a": blocks.a[i], "b": blocks.b[i],
                           "c": blocks.c[i], "scalar": blocks.scalar[i], "sigma": blocks.sigma[i],
                           "pic_margin": rep.pic_margin[i], "pco_margin": rep.pco_margin[i]}
                          for i in range(len(pts))]}
        sys.stdout.write(dump_doc(doc))
    else:
        header = ["x0", "x1", "x2", "x3"] + [f"ev{k}" for k in range(6)] + ["R", "pic_margin", "pco_margin"]
        rows = [[format_float(v) for v in list(pts[i]) + list(ev[i])
                 + [blocks.scalar[i], rep.pic_margin[i], rep.pco_margin[i]]] for i in range(len(pts))]
        sys.stdout.write(render_table(header, rows))
    return EXIT_PASS


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            return _run(args)
        if args.command == "surgery":
            return _run(args, SURGERY_OPS[args.surgery_op])
        if args.command == "curvature":
            return _curvature(args)
        status, results = run_suite(args.directory, args.seed, args.threads, args.out_dir,
                                    not args.no_write)
        if args.format is not None:
            for res in results:
                _print_result(res, args.format, sys.stdout)
        print(f"{len(results)} scenarios, worst status {status} ({describe_status(status)})",
              file=sys.stderr)
        return status
    except yaml.YAMLError as exc:  # pragma: no cover - parsing is handled upstream
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    except Exception as exc:  # noqa: BLE001
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
