"""Mixed Black-Scholes prices and implied volatilities across strikes for several q."""

import argparse

import numpy as np
from scipy.optimize import brentq

from qgmix.pricing import OptionSpec, bs_price, mixed_price
from qgmix.serialize import csv_text
from qgmix.vmon import MixingLaw


def implied_vol(spec, price):
    return brentq(lambda s: bs_price(spec, s) - price, 1e-6, 10.0, xtol=1e-12)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--q", type=float, nargs="+", default=[1.1, 1.3, 1.5])
    ap.add_argument("--maturity", type=float, default=1.0)
    ap.add_argument("--vol", type=float, default=0.2)
    args = ap.parse_args()
    rows = []
    for q in args.q:
        for k in np.linspace(70, 130, 13):
            spec = OptionSpec(100.0, float(k), 0.0, args.maturity, "call", args.vol)
            r = mixed_price(spec, MixingLaw(q))
            rows.append((q, k, r.price, r.quadrature_error, implied_vol(spec, r.price)))
    print(csv_text(("q", "strike", "price", "quadrature_error", "implied_vol"), rows,
                   {"maturity": args.maturity, "base_vol": args.vol}), end="")


if __name__ == "__main__":
    main()
