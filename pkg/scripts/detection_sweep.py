"""Optimized effective capacity, powers and rates against the detection probability.

Writes one row per (p_avg, P_d) to detection_sweep.csv and prints the
argmax P_d per average-power cap.
"""

import argparse
from pathlib import Path

import numpy as np

from cogcap.cli import write_csv
from cogcap.optimizer import OptimizationProblem, sweep_pd
from cogcap.params import SystemParams, db_to_lin
from cogcap.sensing import operating_point_from_pd


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="results", help="output directory")
    ap.add_argument("--p-avg-db", type=float, nargs="+", default=[0.0, 2.0, 5.0])
    ap.add_argument("--step", type=float, default=0.01)
    ap.add_argument("--workers", type=int, default=None)
    args = ap.parse_args()

    params = SystemParams()
    grid = np.round(np.arange(0.05, 0.99 + 1e-9, args.step), 6)
    rows = []
    for db in args.p_avg_db:
        template = OptimizationProblem(
            params, operating_point_from_pd(0.5, params), p_avg=db_to_lin(db), p_peak=db_to_lin(10.0)
        )
        table = sweep_pd(grid, template, workers=args.workers)
        best = max(table, key=lambda r: r["eff_cap"])
        print(f"p_avg {db:g} dB: max eff_cap {best['eff_cap']:.5f} at P_d = {best['pd']:.2f} (P_f = {best['pf']:.3f})")
        rows += [{"p_avg_db": db, **r} for r in table]
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_csv(rows, out / "detection_sweep.csv")


if __name__ == "__main__":
    main()
