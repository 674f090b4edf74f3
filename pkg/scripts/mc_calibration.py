"""z-scores of the Monte Carlo pricing oracle against the quadrature price over many seeds."""

import argparse

import numpy as np

from qgmix.numerics import RandomStream
from qgmix.pricing import OptionSpec, mc_mixed_price, mixed_price
from qgmix.serialize import dumps_json
from qgmix.vmon import MixingLaw


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--q", type=float, nargs="+", default=[1.2, 1.5])
    ap.add_argument("--seeds", type=int, default=40)
    ap.add_argument("--paths", type=int, default=1_000_000)
    ap.add_argument("--base-seed", type=int, default=7000)
    args = ap.parse_args()
    atm = OptionSpec(spot=100.0, strike=100.0, rate=0.0, maturity=1.0)
    out = {}
    for q in args.q:
        price = mixed_price(atm, MixingLaw(q)).price
        z = []
        for s in range(args.seeds):
            mc = mc_mixed_price(atm, MixingLaw(q), RandomStream(args.base_seed + s), args.paths)
            z.append((price - mc.price) / mc.std_error)
        z = np.array(z)
        out[str(q)] = {"quadrature_price": price, "z_mean": z.mean(), "z_sd": z.std(ddof=1),
                       "beyond_3sd": int(np.sum(np.abs(z) > 3)), "seeds": args.seeds}
    print(dumps_json(out))


if __name__ == "__main__":
    main()
