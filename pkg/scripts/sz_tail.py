"""Exceedance frequencies of max |sum c_n X_n e^{in psi}| >= A S_N sqrt(ln N)."""

import argparse
from pathlib import Path

import numpy as np

from wimanlab import SignModel, sz_tail_experiment
from wimanlab.signs import tail_rows_to_csv

ap = argparse.ArgumentParser(description=__doc__)
ap.add_argument("--N", type=int, nargs="+", default=[64, 256, 1024])
ap.add_argument("--trials", type=int, default=1000)
ap.add_argument("--signs", default="Rademacher")
ap.add_argument("--seed", type=int, default=7)
ap.add_argument("--out", default="results/sz_tail.csv")
args = ap.parse_args()

A_grid = np.arange(1.0, 8.01, 0.5)
rows = sz_tail_experiment(1.0, SignModel(args.signs, args.seed), args.N, A_grid, args.trials)
Path(args.out).parent.mkdir(parents=True, exist_ok=True)
Path(args.out).write_text(tail_rows_to_csv(rows))

for N in args.N:
    sub = [r for r in rows if r.N == N]
    ok = [r.A for r in sub if r.wilson[1] <= 1.0 / N]
    first_zero = next((r.A for r in sub if r.exceed_count == 0), None)
    print(f"N={N:5d}  smallest A with Wilson upper <= 1/N: {min(ok) if ok else 'none'}"
          f"   smallest A with no exceedance: {first_zero}")
