"""Discrete path minimizer against the closed-form minimum over a grid of (q, weight, N).

Usage: python scripts/minimizer_sweep.py --out results/minimizer
"""

from __future__ import annotations

import argparse
import time
from pathlib import Path

import numpy as np

from harnack_lab.bounds import PowerLaw
from harnack_lab.cli import write_csv
from harnack_lab.paths import ExpOfA, PowerTime, closed_form_min, numeric_minimize

HEADER = ("q", "weight", "knots", "value", "closed_form", "relative_gap", "iterations", "converged", "seconds")

WEIGHTS = {
    "one": PowerTime(0.0),
    "t^-0.5": PowerTime(-0.5),
    "t^1.5": PowerTime(1.5),
    "exp(-0.5*0.8 log t)": ExpOfA(0.5, PowerLaw(0.8)),
}


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out", default="results/minimizer")
    parser.add_argument("--qs", type=float, nargs="+", default=[1.2, 1.5, 2.0, 3.0, 4.0])
    parser.add_argument("--knots", type=int, nargs="+", default=[50, 200, 1000, 2000])
    args = parser.parse_args(argv)

    x1, x2 = np.array([0.0, 0.0]), np.array([1.0, -0.5])
    t1, t2 = 0.5, 2.5
    rows = []
    for q in args.qs:
        for label, w in WEIGHTS.items():
            exact = closed_form_min(q, w, t1, t2, x1, x2)
            for n in args.knots:
                start = time.perf_counter()
                res = numeric_minimize(q, w, t1, t2, x1, x2, N=n)
                gap = abs(res.value - exact) / exact
                rows.append((q, label, n, res.value, exact, gap, res.iterations, res.converged,
                             round(time.perf_counter() - start, 3)))
            print(f"q={q:<4g} w={label:22s} gap at N={args.knots[-1]}: {gap:.2e}")
    path = write_csv(Path(args.out) / "minimizer_sweep.csv", HEADER, rows)
    print(f"wrote {path}")


if __name__ == "__main__":
    main()
