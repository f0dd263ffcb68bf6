"""Command-line harness.

Subcommands:

* ``verify``   run the configured suites and write a report
* ``frame``    solve the preferred-frame log factor and export its grid as CSV
* ``geodesic`` integrate a worldline and export it as CSV
* ``report``   re-render a JSON report as a plain table

Exit codes: 0 all checks pass, 1 at least one check failed, 2 configuration
error, 3 runtime computation or I/O error.
"""

from __future__ import annotations

import argparse
import csv
import sys

import numpy as np

from .catalog import build, null_tangent
from .config import load_config
from .conservation import SliceSpec
from .errors import ConfigError, WeylFluidError
from .harness import SuiteRuntimeError, run_suite
from .report import emit_report, parse_report, render_table
from .worldlines import integrate_autoparallel, integrate_null_geodesic
from .fluid import fluid_connection
from .conformal import preferred_frame

EXIT_PASS = 0
EXIT_CHECK_FAILURE = 1
EXIT_CONFIG_ERROR = 2
EXIT_RUNTIME_ERROR = 3


def _common_flags(sub):
    sub.add_argument("--config", default=None, help="configuration file")
    sub.add_argument("--seed", type=int, default=None, help="override the run seed")
    sub.add_argument("--out", default=None, help="override the output path")
    sub.add_argument("--format", dest="fmt", choices=("json", "table"), default=None)


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="weylfluid",
        description="construct fluid-sourced Weyl geometries and verify their identities",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_verify = sub.add_parser("verify", help="run verification suites")
    _common_flags(p_verify)
    p_verify.add_argument("--suite", action="append", default=None,
                          help="suite to run (repeatable); default: all from config")

    p_frame = sub.add_parser("frame", help="solve the preferred gauge factor, export CSV")
    _common_flags(p_frame)

    p_geo = sub.add_parser("geodesic", help="integrate a worldline, export CSV")
    _common_flags(p_geo)

    p_rep = sub.add_parser("report", help="re-render a JSON report as a table")
    p_rep.add_argument("path", help="report file to render")
    return parser


def _load(args, overrides=None):
    merged = {"seed": args.seed, "out": args.out, "format": args.fmt}
    merged.update(overrides or {})
    return load_config(args.config, merged)


def _cmd_verify(args) -> int:
    config = _load(args, {"suite": args.suite} if args.suite else None)
    try:
        report = run_suite(config)
    except SuiteRuntimeError as exc:
        try:
            emit_report(exc.report, config.out, config.fmt)
        except OSError:
            pass
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME_ERROR
    try:
        emit_report(report, config.out, config.fmt)
    except OSError as exc:
        print(f"error: cannot write report: {exc}", file=sys.stderr)
        return EXIT_RUNTIME_ERROR
    print(render_table(report), end="")
    return EXIT_PASS if report.passed else EXIT_CHECK_FAILURE


def _cmd_frame(args) -> int:
    config = _load(args)
    if args.out is None and config.out.endswith(".json"):
        config.out = "frame_grid.csv"
    preset = build(config.preset_name, config.parameters, config.seed)
    meta = preset.meta
    spec = SliceSpec(meta["slice_axis"], meta["slice_values"][0], meta["slice_box"])
    nodes = config.frame_params.grid_nodes or meta.get("frame_nodes")
    factor = preferred_frame(
        preset.g, preset.state.n, spec, config.engine, config.frame_params,
        grid_nodes=nodes)
    mesh = np.meshgrid(*factor.grid_axes, indexing="ij")
    nodes = np.stack([m.ravel() for m in mesh], axis=-1)
    values = factor.grid_values.ravel()
    with open(config.out, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(list(preset.chart.names) + ["ln_factor"])
        for row, val in zip(nodes, values):
            writer.writerow([f"{x:.17g}" for x in row] + [f"{val:.17g}"])
    print(f"wrote {config.out}: {len(values)} grid values")
    return EXIT_PASS


def _cmd_geodesic(args) -> int:
    config = _load(args)
    if args.out is None and config.out.endswith(".json"):
        config.out = "worldline.csv"
    preset = build(config.preset_name, config.parameters, config.seed)
    geo = config.geodesic
    kind = geo.get("kind", "null")
    s_max = float(geo.get("s_max", preset.meta.get("ray_s_max", 1.0)))
    lo, hi = preset.chart.bounds(preset.chart.margin + 0.15)
    if "start" in geo:
        x0 = np.array([float(v) for v in geo["start"].split()])
    else:
        x0 = 0.5 * (lo + hi)
    if kind == "null":
        if "direction" in geo:
            direction = np.array([float(v) for v in geo["direction"].split()])
        else:
            direction = np.zeros(preset.chart.dim - 1)
            direction[0] = 1.0
        k0 = null_tangent(preset.g, x0, direction)
        path = integrate_null_geodesic(preset.g, x0, k0, s_max, config.engine)
    elif kind == "autoparallel":
        bundle = fluid_connection(preset.g, preset.state.n, preset.state.phi, config.engine)
        if "tangent" in geo:
            v0 = np.array([float(v) for v in geo["tangent"].split()])
        else:
            v0 = preset.state.n(x0[None, :])[0]
        path = integrate_autoparallel(bundle.gamma, x0, v0, s_max)
    else:
        raise ConfigError(f"unknown geodesic kind {kind!r}")
    path.to_csv(config.out)
    print(f"wrote {config.out}: {len(path.s)} nodes, exited={path.exited}")
    return EXIT_PASS


def _cmd_report(args) -> int:
    with open(args.path) as fh:
        report = parse_report(fh.read())
    print(render_table(report), end="")
    return EXIT_PASS


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "verify":
            return _cmd_verify(args)
        if args.command == "frame":
            return _cmd_frame(args)
        if args.command == "geodesic":
            return _cmd_geodesic(args)
        return _cmd_report(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG_ERROR
    except (WeylFluidError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME_ERROR


if __name__ == "__main__":
    sys.exit(main())
