"""KS distance of S_n/sqrt(n) to the scale-mixture limit as n grows (Rademacher mixands)."""

import argparse
import math

from qgmix.exchangeable import ScaleMixture, clt_case_i
from qgmix.laws import CenteredUniform, Rademacher
from qgmix.numerics import KS_COEFF_1PCT, RandomStream
from qgmix.serialize import csv_text
from qgmix.vmon import MixingLaw


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--q", type=float, default=1.5)
    ap.add_argument("--reps", type=int, default=10_000)
    ap.add_argument("--seed", type=int, default=2024)
    ap.add_argument("--n", type=int, nargs="+", default=[1, 4, 16, 64, 256, 1024, 4096, 16384])
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args()
    rows = []
    for i, n in enumerate(args.n):
        for j, (name, mixand) in enumerate((("rademacher", Rademacher()), ("centered_uniform", CenteredUniform()))):
            e = clt_case_i(ScaleMixture(MixingLaw(args.q), mixand), n, args.reps,
                           RandomStream(args.seed, 2 * i + j), workers=args.workers)
            rows.append((n, name, e.report.statistic, e.report.passed))
    cfg = {"q": args.q, "reps": args.reps, "seed": args.seed,
           "threshold": KS_COEFF_1PCT / math.sqrt(args.reps)}
    print(csv_text(("n", "mixand", "ks", "pass"), rows, cfg), end="")


if __name__ == "__main__":
    main()
