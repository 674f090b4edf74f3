"""Command-line front end: ``qgmix <subcommand> [flags]``.

Exit codes: 0 success, 1 usage or domain error, 2 statistical/acceptance
failure.  Every output embeds the resolved configuration.  Identical argv
gives byte-identical output whatever ``--workers`` is.  The worker count is
therefore left out of the echoed configuration.
"""

from __future__ import annotations

import argparse
import math
import sys
from typing import Callable, Sequence

import numpy as np

from . import __version__
from .exchangeable import (
    BernoulliMixture,
    ScaleMixture,
    ShiftMixture,
    TriangularRowModel,
    clt_case_i,
    clt_triangular,
    leibnitz_from_mixing,
    lln_case_ii,
)
from .laws import MIXANDS, Beta, DiscreteMeasure, Gamma, Normal, PointMass, Uniform
from .numerics import KS_COEFF_1PCT, DomainError, QuadratureError, RandomStream, ks_statistic
from .pricing import OptionSpec, bs_price, mc_mixed_price, mixed_price
from .process import (
    CflError,
    GridSpec,
    LangevinConfig,
    barenblatt_profile,
    barenblatt_time,
    fpe_solve,
    increment_autocorrelation,
    increment_stationarity,
    langevin_simulate,
    marginal_ks,
    sample_qbm_ensemble,
    shape_error,
    superstat_beta_law,
    superstat_closed_form,
    superstat_factor,
    width_exponent,
)
from .qgaussian import QGaussian
from .serialize import csv_text, dumps_json
from .vmon import ContractError, MixingLaw, exp_mixture_check, verify_mixture

__all__ = ["main", "build_parser", "DEFAULT_SEED"]

DEFAULT_SEED = 20240611
EXIT_OK, EXIT_USAGE, EXIT_FAIL = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: error: {message}")


# ---------------------------------------------------------------------------
# output plumbing


class Output:
    def __init__(self, args, name: str):
        self.args = args
        self.config = {"subcommand": name, "version": __version__}
        for k, v in sorted(vars(args).items()):
            if k in ("out", "workers", "func", "format", "command"):
                continue
            self.config[k] = v
        self.config["format"] = args.format

    def emit(self, summary: dict, header: Sequence[str] = (), rows=()) -> None:
        if self.args.format == "json":
            text = dumps_json({"config": self.config, "result": summary})
        else:
            text = csv_text(header, rows, self.config, summary)
        if self.args.out in (None, "-"):
            sys.stdout.write(text)
        else:
            with open(self.args.out, "w", encoding="utf-8", newline="\n") as fh:
                fh.write(text)


def _grid(args, default: Callable[[], np.ndarray]) -> np.ndarray:
    if args.x is not None:
        return np.asarray(args.x, dtype=float)
    if args.grid is not None:
        try:
            lo, hi, num = args.grid.split(":")
            return np.linspace(float(lo), float(hi), int(num))
        except ValueError as exc:
            raise UsageError(f"--grid expects lo:hi:num, got {args.grid!r}") from exc
    return default()


def _seed(args) -> RandomStream:
    if args.seed is None:
        args.seed = DEFAULT_SEED
        print(f"seed not given; using fixed default seed {DEFAULT_SEED}", file=sys.stderr)
    return RandomStream(int(args.seed))


def _latent(q: float):
    return PointMass(1.0 / math.sqrt(2.0)) if q == 1.0 else MixingLaw(q)


def _parse_law(spec: str):
    """uniform | uniform:lo,hi | normal | normal:mu,sd | beta:a,b | point:c | gamma:k,theta | discrete:p1/w1,p2/w2"""
    name, _, rest = spec.partition(":")
    vals = [float(v) for v in rest.split(",")] if rest and name != "discrete" else []
    try:
        if name == "uniform":
            return Uniform(*vals) if vals else Uniform()
        if name == "normal":
            return Normal(*vals) if vals else Normal()
        if name == "beta":
            return Beta(*vals)
        if name == "point":
            return PointMass(*vals)
        if name == "gamma":
            return Gamma(*vals)
        if name == "discrete":
            pairs = [item.split("/") for item in rest.split(",")]
            return DiscreteMeasure(tuple(float(p) for p, _ in pairs), tuple(float(w) for _, w in pairs))
    except (TypeError, ValueError) as exc:
        raise UsageError(f"bad law string {spec!r}: {exc}") from exc
    raise UsageError(f"unknown law {spec!r}")


def _ks_summary(rep, extra=None) -> dict:
    d = rep.as_dict()
    if extra:
        d.update(extra)
    return d


# ---------------------------------------------------------------------------
# subcommands


def cmd_density(args) -> int:
    g = QGaussian(args.q)
    x = _grid(args, lambda: np.array([0.0]))
    y = np.atleast_1d(g.density(x))
    Output(args, "density").emit({"x": x, "density": y}, ("x", "density"), zip(x, y))
    return EXIT_OK


def cmd_cdf(args) -> int:
    g = QGaussian(args.q)
    x = _grid(args, lambda: np.array([0.0]))
    y = np.atleast_1d(g.cdf(x))
    Output(args, "cdf").emit({"x": x, "cdf": y}, ("x", "cdf"), zip(x, y))
    return EXIT_OK


def cmd_sample(args) -> int:
    stream = _seed(args)
    vals = QGaussian(args.q).sample(stream, args.n)
    Output(args, "sample").emit({"n": args.n, "mean": float(vals.mean())}, ("index", "value"),
                                enumerate(vals))
    return EXIT_OK


def cmd_mixing(args) -> int:
    law = MixingLaw(args.q)
    v = _grid(args, lambda: np.linspace(0.05, 5.0, 100))
    pdf, cdf = np.atleast_1d(law.pdf(v)), np.atleast_1d(law.cdf(v))
    summary = {"dof": law.dof, "c_vq": law.c_vq, "mode": law.mode,
               "second_moment": law.second_moment(), "v": v, "pdf": pdf, "cdf": cdf}
    Output(args, "mixing").emit(summary, ("v", "pdf", "cdf"), zip(v, pdf, cdf))
    return EXIT_OK


def cmd_verify_mixture(args) -> int:
    x = _grid(args, lambda: np.round(np.arange(-100, 101) * 0.1, 12))
    if args.laplace:
        rep = exp_mixture_check(args.q, x, args.tol)
    else:
        rep = verify_mixture(args.q, x, args.tol)
    Output(args, "verify-mixture").emit(rep.as_dict(), ("x", "lhs", "rhs"), zip(rep.x, rep.lhs, rep.rhs))
    return EXIT_OK if rep.passed else EXIT_FAIL


def cmd_cm_check(args) -> int:
    x = _grid(args, lambda: np.geomspace(1e-3, 1e2, 121))
    rep = QGaussian(args.q).cm_check(args.max_order, x)
    predicted = args.q >= 1.0
    summary = {"q": args.q, "order_checked": rep.order_checked, "is_cm_consistent": rep.is_cm_consistent,
               "first_violation": rep.first_violation, "analytic_cm": rep.analytic_cm,
               "analytic_chain": rep.analytic_chain, "predicted_cm": predicted}
    Output(args, "cm-check").emit(summary, ("order", "chain_coefficient"), enumerate(rep.analytic_chain))
    return EXIT_OK if rep.is_cm_consistent == predicted else EXIT_FAIL


def cmd_clt(args) -> int:
    stream = _seed(args)
    mixand = MIXANDS[args.mixand]
    thr = args.safety * KS_COEFF_1PCT / math.sqrt(args.reps)
    if args.model == "scale":
        model = ScaleMixture(_latent(args.q), mixand)
        exp = clt_case_i(model, args.n, args.reps, stream, threshold=thr, workers=args.workers)
    elif args.model == "shift":
        model = ShiftMixture(_parse_law(args.latent), mixand)
        exp = lln_case_ii(model, args.n, args.reps, stream, threshold=thr, workers=args.workers)
    else:
        model = BernoulliMixture(_parse_law(args.latent))
        exp = lln_case_ii(model, args.n, args.reps, stream, threshold=thr, workers=args.workers)
    rows = ((i, *exp.latents[i], exp.values[i]) for i in range(exp.values.size))
    Output(args, "clt").emit(_ks_summary(exp.report), ("replication", *exp.latent_names, "value"), rows)
    return EXIT_OK if exp.report.passed else EXIT_FAIL


def cmd_triangle(args) -> int:
    if args.mode == "leibnitz":
        tri = leibnitz_from_mixing(_parse_law(args.mixing), args.n_max)
        summary = {"rule_residual": tri.rule_residual(), "row_mass_error": tri.row_mass_error(),
                   "n_max": tri.n_max}
        rows = ((N, k, tri.r(N, k)) for N in range(tri.n_max + 1) for k in range(N + 1))
        Output(args, "triangle").emit(summary, ("N", "n", "r"), rows)
        return EXIT_OK if summary["rule_residual"] < 1e-12 else EXIT_FAIL
    stream = _seed(args)
    u_law = _parse_law(args.u_law or ("normal" if args.part == 1 else "uniform"))
    model = TriangularRowModel(_latent(args.q), u_law, MIXANDS[args.mixand], args.alpha)
    thr = args.safety * KS_COEFF_1PCT / math.sqrt(args.reps)
    exp = clt_triangular(model, args.n, args.reps, stream, part=args.part, threshold=thr,
                         workers=args.workers)
    rows = ((i, *exp.latents[i], exp.values[i]) for i in range(exp.values.size))
    Output(args, "triangle").emit(_ks_summary(exp.report), ("replication", "v", "u", "value"), rows)
    return EXIT_OK if exp.report.passed else EXIT_FAIL


def cmd_qbm(args) -> int:
    stream = _seed(args)
    times = np.linspace(0.0, args.t_end, args.steps + 1)
    ens = sample_qbm_ensemble(args.q, times, stream, args.n)
    marg = marginal_ks(ens, args.steps)
    lag = max(1, args.steps // 4)
    stat = increment_stationarity(ens, lag, 0, args.steps - lag)
    ac, ac_se = increment_autocorrelation(ens) if args.steps >= 2 else (0.0, 0.0)
    summary = {"marginal": marg.as_dict(), "stationarity": stat.as_dict(),
               "increment_autocorrelation": ac, "increment_autocorrelation_se": ac_se}
    k = min(args.save_paths, args.n)
    rows = ((p, t, ens.values[p, j]) for p in range(k) for j, t in enumerate(times))
    Output(args, "qbm").emit(summary, ("path_id", "time", "value"), rows)
    return EXIT_OK if marg.passed and stat.passed else EXIT_FAIL


def cmd_fpe(args) -> int:
    q = args.q
    t0 = args.t0 if args.t0 is not None else barenblatt_time(q, 1.0)
    t_end = args.t_end if args.t_end is not None else 2.0 * t0
    grid = GridSpec(args.nodes, args.half_width, None if args.core_width <= 0 else args.core_width)
    k = max(1, args.snapshots)
    outs = [t0 * (t_end / t0) ** (i / k) for i in range(1, k)]
    traj = fpe_solve(lambda x: barenblatt_profile(q, t0, x), q, t_end, grid, t0=t0, output_times=outs,
                     max_steps=args.max_steps)
    last = traj.snapshots[-1]
    err, scale = shape_error(last)
    summary = {"steps": traj.steps, "max_mass_error": traj.max_mass_error, "floor_mass": traj.floor_mass,
               "boundary_mass": traj.boundary_mass, "shape_linf": err, "fitted_scale": scale,
               "width_exponent": width_exponent(traj), "predicted_exponent": 1.0 / (3.0 - q),
               "t0": t0, "t_end": last.t}
    rows = ((s.t, x, p) for s in traj.snapshots for x, p in zip(s.x_nodes, s.profile))
    Output(args, "fpe").emit(summary, ("time", "x", "density"), rows)
    return EXIT_OK if traj.max_mass_error < 1e-6 else EXIT_FAIL


def cmd_langevin(args) -> int:
    stream = _seed(args)
    law = PointMass(args.beta) if args.beta is not None else superstat_beta_law(args.q)
    target_q = 1.0 if args.beta is not None else args.q
    cfg = LangevinConfig(args.gamma, law, args.dt, args.burn_in, args.n, scheme=args.scheme, v0=args.v0)
    res = langevin_simulate(cfg, stream)
    vals = res.pooled()
    if args.beta is not None:
        # N(0, 1/(2 beta)) is g_1 rescaled by 1/sqrt(beta)
        target = (lambda x: QGaussian(1.0).cdf(np.asarray(x) * math.sqrt(args.beta)))
    else:
        target = QGaussian(target_q).cdf
    rep = ks_statistic(vals, target, target_name="stationary velocity law")
    rows = ((i, res.beta[i], vals[i]) for i in range(vals.size))
    Output(args, "langevin").emit(_ks_summary(rep), ("path", "beta", "velocity"), rows)
    return EXIT_OK if rep.passed else EXIT_FAIL


def cmd_superstat(args) -> int:
    law = Gamma(args.shape, args.scale) if args.shape is not None else superstat_beta_law(args.q)
    e = _grid(args, lambda: np.linspace(0.0, 10.0, 101))
    b = np.array([superstat_factor(float(ei), law) for ei in e])
    closed = np.exp(-law.shape * np.log1p(law.scale * e))
    err = float(np.max(np.abs(b - closed)))
    Output(args, "superstat").emit({"max_error_vs_closed_form": err, "shape": law.shape, "scale": law.scale},
                                   ("energy", "factor", "closed_form"), zip(e, b, closed))
    return EXIT_OK if err < args.tol else EXIT_FAIL


def cmd_price(args) -> int:
    spec = OptionSpec(args.spot, args.strike, args.rate, args.maturity, args.kind, args.vol)
    mixing = PointMass(1.0) if args.q == 1.0 else MixingLaw(args.q)
    res = mixed_price(spec, mixing)
    summary = {"price": res.price, "error": res.quadrature_error, "v_truncation": res.v_truncation,
               "bs_price_at_base_vol": bs_price(spec, spec.base_vol),
               "inputs": {"spot": spec.spot, "strike": spec.strike, "rate": spec.rate,
                          "maturity": spec.maturity, "kind": spec.kind, "vol": spec.base_vol, "q": args.q}}
    code = EXIT_OK
    if args.mc:
        mc = mc_mixed_price(spec, mixing, _seed(args), args.mc)
        summary["mc"] = {"price": mc.price, "std_error": mc.std_error, "paths": mc.paths,
                         "within_3se": abs(mc.price - res.price) <= 3 * mc.std_error}
        code = EXIT_OK if summary["mc"]["within_3se"] else EXIT_FAIL
    Output(args, "price").emit(summary, ("price", "error"), [(res.price, res.quadrature_error)])
    return code


# ---------------------------------------------------------------------------
# parser


def _common(p: argparse.ArgumentParser, *, q_default=1.5, fmt="json", random=False, grid=False):
    p.add_argument("--q", type=float, default=q_default, help="entropic index")
    p.add_argument("--out", default=None, help="output path (default stdout)")
    p.add_argument("--format", choices=("csv", "json"), default=fmt)
    p.add_argument("--tol", type=float, default=1e-8)
    if random:
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--workers", type=int, default=1)
    if grid:
        p.add_argument("--x", type=float, nargs="+", default=None, help="explicit evaluation points")
        p.add_argument("--grid", default=None, help="lo:hi:num evenly spaced points")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="qgmix", description="q-Gaussians as variance mixtures of normals: experiments")
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    p = sub.add_parser("density", help="q-Gaussian density")
    _common(p, q_default=1.0, grid=True)
    p.set_defaults(func=cmd_density)

    p = sub.add_parser("cdf", help="q-Gaussian distribution function")
    _common(p, q_default=1.0, grid=True)
    p.set_defaults(func=cmd_cdf)

    p = sub.add_parser("sample", help="draw q-Gaussian variates")
    _common(p, fmt="csv", random=True)
    p.add_argument("--n", type=int, default=1000)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("mixing", help="mixing density/cdf of V")
    _common(p, grid=True)
    p.set_defaults(func=cmd_mixing)

    p = sub.add_parser("verify-mixture", help="check g_q against the normal mixture integral")
    _common(p, grid=True)
    p.add_argument("--laplace", action="store_true", help="check the Laplace-transform form instead")
    p.set_defaults(func=cmd_verify_mixture)

    p = sub.add_parser("cm-check", help="complete monotonicity of g_q(sqrt x)")
    _common(p, grid=True)
    p.add_argument("--max-order", type=int, default=8)
    p.set_defaults(func=cmd_cm_check)

    p = sub.add_parser("clt", help="limit theorem experiments for exchangeable sequences")
    _common(p, fmt="csv", random=True)
    p.add_argument("--model", choices=("scale", "shift", "bernoulli"), default="scale")
    p.add_argument("--mixand", choices=sorted(MIXANDS), default="rademacher")
    p.add_argument("--latent", default="uniform", help="latent law for shift/bernoulli models")
    p.add_argument("--n", type=int, default=10_000)
    p.add_argument("--reps", type=int, default=10_000)
    p.add_argument("--safety", type=float, default=1.0, help="multiplier on the 1%% KS threshold")
    p.set_defaults(func=cmd_clt)

    p = sub.add_parser("triangle", help="triangular arrays and Leibnitz triangles")
    _common(p, fmt="csv", random=True)
    p.add_argument("--mode", choices=("array", "leibnitz"), default="array")
    p.add_argument("--part", type=int, choices=(1, 2), default=1)
    p.add_argument("--alpha", type=float, default=0.75)
    p.add_argument("--mixand", choices=sorted(MIXANDS), default="rademacher")
    p.add_argument("--u-law", default=None, help="law of U (default normal for part 1, uniform for part 2)")
    p.add_argument("--mixing", default="uniform", help="mixing measure on [0,1] for --mode leibnitz")
    p.add_argument("--n-max", type=int, default=30)
    p.add_argument("--n", type=int, default=10_000)
    p.add_argument("--reps", type=int, default=10_000)
    p.add_argument("--safety", type=float, default=1.0)
    p.set_defaults(func=cmd_triangle)

    p = sub.add_parser("qbm", help="q-Brownian motion ensembles")
    _common(p, fmt="csv", random=True)
    p.add_argument("--n", type=int, default=100_000, help="number of paths")
    p.add_argument("--steps", type=int, default=8)
    p.add_argument("--t-end", type=float, default=1.0)
    p.add_argument("--save-paths", type=int, default=5)
    p.set_defaults(func=cmd_qbm)

    p = sub.add_parser("fpe", help="nonlinear Fokker-Planck solver from a self-similar start")
    _common(p, fmt="json")
    p.add_argument("--t0", type=float, default=None, help="start time (default: scale-1 profile time)")
    p.add_argument("--t-end", type=float, default=None, help="end time (default 2*t0)")
    p.add_argument("--nodes", type=int, default=1025)
    p.add_argument("--half-width", type=float, default=5000.0)
    p.add_argument("--core-width", type=float, default=1.0, help="sinh grid core width; <= 0 for uniform")
    p.add_argument("--snapshots", type=int, default=8)
    p.add_argument("--max-steps", type=int, default=5_000_000)
    p.set_defaults(func=cmd_fpe)

    p = sub.add_parser("langevin", help="superstatistical Langevin velocities")
    _common(p, fmt="json", random=True)
    p.add_argument("--gamma", type=float, default=1.0)
    p.add_argument("--beta", type=float, default=None, help="fixed beta instead of the q-law")
    p.add_argument("--dt", type=float, default=0.1)
    p.add_argument("--burn-in", type=int, default=200)
    p.add_argument("--n", type=int, default=100_000, help="number of paths")
    p.add_argument("--v0", type=float, default=0.0)
    p.add_argument("--scheme", choices=("exact", "euler"), default="exact")
    p.set_defaults(func=cmd_langevin)

    p = sub.add_parser("superstat", help="generalized Boltzmann factor")
    _common(p, grid=True)
    p.add_argument("--shape", type=float, default=None)
    p.add_argument("--scale", type=float, default=1.0)
    p.set_defaults(func=cmd_superstat, tol=1e-9)

    p = sub.add_parser("price", help="Black-Scholes price mixed over V")
    _common(p, random=True)
    p.add_argument("--spot", type=float, default=100.0)
    p.add_argument("--strike", type=float, default=100.0)
    p.add_argument("--rate", type=float, default=0.0)
    p.add_argument("--maturity", type=float, default=1.0)
    p.add_argument("--vol", type=float, default=0.2)
    p.add_argument("--kind", choices=("call", "put"), default="call")
    p.add_argument("--mc", type=int, default=0, help="also run a Monte Carlo oracle with this many paths")
    p.set_defaults(func=cmd_price)
    return ap


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if getattr(args, "workers", 1) < 1:
            raise UsageError("--workers must be >= 1")
        return args.func(args)
    except UsageError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_USAGE
    except (DomainError, ContractError, CflError, QuadratureError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
