"""L1 error of the three solvers against their exact solutions under grid refinement.

Usage: python scripts/refinement_study.py --out results/refinement
"""

from __future__ import annotations

import argparse
import math
import time
from pathlib import Path

from harnack_lab.cli import write_csv
from harnack_lab.pde import Barenblatt, HeatKernel, PBarenblatt, SolverConfig, solve_heat, solve_pdiff, solve_pme

HEADER = ("equation", "exponent", "dx", "steps", "l1_error", "observed_order", "seconds")

CASES = [
    ("heat", 1.0, HeatKernel(1), lambda cfg, ex: solve_heat(cfg, exact=ex)),
    ("pme", 2.0, Barenblatt(1, 2.0), lambda cfg, ex: solve_pme(2.0, cfg, exact=ex)),
    ("pme", 3.0, Barenblatt(1, 3.0), lambda cfg, ex: solve_pme(3.0, cfg, exact=ex)),
    ("pdiff", 3.0, PBarenblatt(1, 3.0), lambda cfg, ex: solve_pdiff(3.0, cfg, exact=ex)),
]


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out", default="results/refinement")
    parser.add_argument("--levels", type=int, default=3)
    parser.add_argument("--dx", type=float, default=0.1)
    args = parser.parse_args(argv)

    rows = []
    for name, exponent, exact, solve in CASES:
        prev = None
        for level in range(args.levels):
            dx = args.dx / 2**level
            cfg = SolverConfig(L=8.0, dx=dx, t_start=1.0, t_end=2.0, eps=0.0)
            start = time.perf_counter()
            sol = solve(cfg, exact)
            err = sol.l1_error(exact, -1)
            order = math.log2(prev / err) if prev else None
            rows.append((name, exponent, dx, sol.metadata["steps"], err, order, round(time.perf_counter() - start, 2)))
            print(f"{name:5s} {exponent:3.1f} dx={dx:<8g} L1={err:.3e}" + (f"  order={order:.2f}" if order else ""))
            prev = err
    path = write_csv(Path(args.out) / "refinement_study.csv", HEADER, rows)
    print(f"wrote {path}")


if __name__ == "__main__":
    main()
