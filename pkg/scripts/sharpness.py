"""Widening experiments for both signs of the Gaussian potential.

Negative side: L^{p1} norm of the blow-up function along the flow.
Positive side: int psi^{-s} dm_omega across the threshold s = 2 omega/(alpha - omega).
"""

import argparse
import csv
from pathlib import Path

import numpy as np

from hypercon import semigroup as S


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", type=Path, default=Path("results/sharpness"))
    parser.add_argument("--omega", type=float, default=1.0)
    parser.add_argument("--a", type=float, default=3.0)
    args = parser.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)

    with open(args.out / "blowup.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["p1", "t1", "growth_initial", "growth_at_t1", "growth_past", "ok"])
        for p1 in (7.0, 8.0, 10.0, 16.0):
            rep = S.blowup_experiment(2.0, p1)
            writer.writerow([p1, rep.t1, rep.growth_initial, rep.growth_at_t1, rep.growth_past, rep.ok])
            print(f"p1={p1:5.1f} t1={rep.t1:.4f} factors {rep.growth_initial:.3f} {rep.growth_at_t1:.3f} {rep.growth_past:.3g}")

    with open(args.out / "inverse_moment.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["s", "threshold", "finite_expected", "relative_change_wide", "growth_double", "ok"])
        for s in np.linspace(1.5, 2.5, 11):
            rep = S.inverse_moment_experiment(float(s), args.omega, args.a)
            ok = all(r.ok for r in rep.records)
            writer.writerow([s, rep.threshold, rep.finite_expected, rep.log_change_wide, rep.growth_double, ok])
            print(f"s={s:.2f} finite={rep.finite_expected!s:5} change={rep.log_change_wide:.2e} growth={rep.growth_double:.3g} ok={ok}")


if __name__ == "__main__":
    main()
