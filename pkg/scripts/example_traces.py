"""Write a few sample traces (CSV and SVG) into an output directory."""

import argparse
import math
import pathlib

from slelab.charts import Chart
from slelab.cli import render_svg, write_arcs_csv, write_trace_csv
from slelab.fieldalg import CHORDAL_DELTA, CHORDAL_SIGMA, RADIAL_DELTA, RADIAL_SIGMA, SleParams
from slelab.slesim import SimConfig, simulate_levy_tree, simulate_sle


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("outdir", type=pathlib.Path)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--nmax", type=int, default=1500)
    args = ap.parse_args()
    args.outdir.mkdir(parents=True, exist_ok=True)

    runs = []
    for kappa in (2.0, 4.0, 6.0):
        cfg = SimConfig(n_max=args.nmax, seed=args.seed)
        tr = simulate_sle(CHORDAL_DELTA, CHORDAL_SIGMA * math.sqrt(kappa), SleParams(kappa, 0.0), cfg)
        runs.append((f"chordal_k{kappa:g}", tr, Chart.HALFPLANE))
    cfg = SimConfig(n_max=args.nmax, seed=args.seed, chart=Chart.DISK)
    runs.append(("radial_k4", simulate_sle(RADIAL_DELTA, RADIAL_SIGMA * 2, SleParams(4.0, 0.0), cfg), Chart.DISK))
    cfg = SimConfig(d_min=0.01, d_max=0.02, n_max=args.nmax // 3, seed=args.seed)
    runs.append(("levy_a1.5", simulate_levy_tree(CHORDAL_DELTA, CHORDAL_SIGMA, 1.5, cfg), Chart.HALFPLANE))

    for name, tr, chart in runs:
        with open(args.outdir / f"{name}.csv", "w", encoding="utf-8", newline="") as fh:
            write_trace_csv(tr, fh)
        if tr.arcs:
            with open(args.outdir / f"{name}_arcs.csv", "w", encoding="utf-8", newline="") as fh:
                write_arcs_csv(tr, fh)
        render_svg(tr, chart, str(args.outdir / f"{name}.svg"))
        print(f"{name}: {len(tr.points)} points{' (truncated)' if tr.truncated else ''}")


if __name__ == "__main__":
    main()
