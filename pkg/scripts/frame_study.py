#!/usr/bin/env python3
"""Preferred-frame study: solve the incompressible-gauge factor on the
cosmology and sheared-chart presets, compare against closed forms where
available, and export the solved grids.

Usage:
    python scripts/frame_study.py [--nodes 17] [--outdir frame_out]
"""

import argparse
import csv
import pathlib
import sys
import time

import numpy as np

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parents[1] / "src"))

from weylfluid.catalog import build
from weylfluid.conformal import (
    FrameSolverParams,
    conformal_rescale,
    incompressibility_residual,
    preferred_frame,
    transport_residual,
)
from weylfluid.conservation import SliceSpec
from weylfluid.fluid import fluid_connection
from weylfluid.geometry import DerivativeEngine


def study(name: str, nodes: int, outdir: pathlib.Path):
    engine = DerivativeEngine()
    preset = build(name)
    meta = preset.meta
    spec = SliceSpec(meta["slice_axis"], meta["slice_values"][0], meta["slice_box"])
    params = FrameSolverParams(grid_nodes=nodes or meta.get("frame_nodes"))

    t0 = time.perf_counter()
    factor = preferred_frame(preset.g, preset.state.n, spec, engine, params)
    solve_s = time.perf_counter() - t0

    pts = preset.chart.sample_points(5, 64, seed=0)
    transport = np.abs(transport_residual(factor, preset.g, preset.state.n, engine)(pts)).max()
    bundle = fluid_connection(preset.g, preset.state.n, preset.state.phi, engine)
    b2, s2 = conformal_rescale(bundle, preset.state, factor, engine)
    incomp = np.abs(incompressibility_residual(b2.g, s2.n, engine)(pts)).max()

    line = (f"{name:24s} solve {solve_s:6.2f}s  transport {transport:9.2e}  "
            f"divergence {incomp:9.2e}")
    closed_builder = meta.get("closed_frame")
    if closed_builder is not None:
        closed = closed_builder(meta["slice_values"][0])
        mesh = np.meshgrid(*factor.grid_axes, indexing="ij")
        grid_pts = np.stack([g.ravel() for g in mesh], axis=-1)
        err = np.abs(factor.grid_values.ravel() - closed.ln(grid_pts)).max()
        line += f"  vs closed form {err:9.2e}"
    print(line)

    out = outdir / f"{name}-frame.csv"
    mesh = np.meshgrid(*factor.grid_axes, indexing="ij")
    grid_pts = np.stack([g.ravel() for g in mesh], axis=-1)
    with open(out, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(list(preset.chart.names) + ["ln_factor"])
        for row, val in zip(grid_pts, factor.grid_values.ravel()):
            writer.writerow([f"{x:.17g}" for x in row] + [f"{val:.17g}"])


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--nodes", type=int, default=0,
                    help="memo nodes per axis (0: preset default)")
    ap.add_argument("--outdir", default="frame_out")
    args = ap.parse_args()
    outdir = pathlib.Path(args.outdir)
    outdir.mkdir(exist_ok=True)
    for name in ("flrw-comoving-dust", "flrw-power-dust", "minkowski-sheared"):
        study(name, args.nodes, outdir)


if __name__ == "__main__":
    main()
