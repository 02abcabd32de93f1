"""Effective capacity against the training fraction, and the optimal fraction against P_d.

Writes training_fraction.csv (fixed sensing point) and
optimal_fraction_vs_pd.csv.
"""

import argparse
from pathlib import Path

import numpy as np

from cogcap.cli import write_csv
from cogcap.optimizer import OptimizationProblem, optimal_eta_vs_pd, sweep_eta
from cogcap.params import SystemParams, db_to_lin
from cogcap.sensing import SensingOperatingPoint


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="results")
    ap.add_argument("--p-avg-db", type=float, nargs="+", default=[0.0, 2.0, 5.0])
    ap.add_argument("--pd", type=float, default=0.92)
    ap.add_argument("--pf", type=float, default=0.24)
    ap.add_argument("--workers", type=int, default=None)
    ap.add_argument("--skip-pd-sweep", action="store_true")
    args = ap.parse_args()

    params = SystemParams()
    point = SensingOperatingPoint.from_probabilities(args.pd, args.pf)
    eta_grid = np.round(np.arange(0.05, 0.30 + 1e-9, 0.01), 2)
    rows, trend = [], []
    for db in args.p_avg_db:
        template = OptimizationProblem(params, point, p_avg=db_to_lin(db), p_peak=db_to_lin(10.0))
        table, eta_star = sweep_eta(eta_grid, template, workers=args.workers)
        print(f"p_avg {db:g} dB: optimal training fraction {eta_star:.2f}")
        rows += [{"p_avg_db": db, **r, "is_argmax": r["eta"] == eta_star} for r in table]
        if not args.skip_pd_sweep:
            pd_grid = np.round(np.arange(0.5, 0.99 + 1e-9, 0.05), 2)
            trend += [{"p_avg_db": db, **r} for r in optimal_eta_vs_pd(pd_grid, template, eta_grid, workers=args.workers)]
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_csv(rows, out / "training_fraction.csv")
    if trend:
        write_csv(trend, out / "optimal_fraction_vs_pd.csv")


if __name__ == "__main__":
    main()
