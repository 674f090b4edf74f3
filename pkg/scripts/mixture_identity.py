"""Sup-error of the normal variance-mixture representation of g_q across q."""

import argparse

import numpy as np

from qgmix.serialize import csv_text
from qgmix.vmon import exp_mixture_check, verify_mixture


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--q", type=float, nargs="+", default=[1.05, 1.2, 1.5, 2.0, 2.5, 2.9])
    args = ap.parse_args()
    rows = []
    for q in args.q:
        mix = verify_mixture(q)
        lap = exp_mixture_check(q, np.linspace(-5, 5, 101))
        rows.append((q, mix.sup_error, lap.sup_error))
    print(csv_text(("q", "mixture_sup_error", "laplace_sup_error"), rows, {"grid": "[-10,10] step 0.1"}), end="")


if __name__ == "__main__":
    main()
