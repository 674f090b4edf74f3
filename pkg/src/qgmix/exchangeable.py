"""Exchangeable sequences built from a latent draw, and limit-theorem experiments.

A sequence is generated de Finetti style: one latent draw per sequence, then
conditionally i.i.d. entries.  Three sequence variants are supported:

* ``ScaleMixture``: X_i = V * Y_i with centered, unit-variance mixands Y_i.
* ``ShiftMixture``: X_i = Y + eps_i.
* ``BernoulliMixture``: X_i ~ Bernoulli(p) - offset given p.

``TriangularRowModel`` builds rowwise exchangeable arrays whose rows carry a
vanishing drift.  Each experiment draws a fresh latent per replication, and
replications run in fixed blocks with their own spawned streams.  That makes
results independent of the worker count.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np
from scipy.interpolate import PchipInterpolator

from .laws import Beta, DiscreteMeasure, PointMass, Uniform
from .numerics import (
    KS_COEFF_1PCT,
    DomainError,
    KsReport,
    QuadTolerance,
    RandomStream,
    integrate,
    ks_statistic,
    normal_cdf,
)
from .qgaussian import QGaussian
from .vmon import ContractError, MixingLaw

__all__ = [
    "ScaleMixture",
    "ShiftMixture",
    "BernoulliMixture",
    "TriangularRowModel",
    "Experiment",
    "LeibnitzTriangle",
    "CorrelationReport",
    "generate_sequence",
    "clt_case_i",
    "lln_case_ii",
    "clt_triangular",
    "leibnitz_from_mixing",
    "exchangeability_diagnostic",
    "permutation_invariance",
    "sample_matrix",
    "scale_mixture_cdf",
    "one_plus_inverse",
    "BLOCK_SIZE",
]

BLOCK_SIZE = 256  # replications per spawned stream


def one_plus_inverse(n: int) -> float:
    """Default row perturbation 1 + 1/n."""
    return 1.0 + 1.0 / n


def _unit(n: int) -> float:
    return 1.0


@dataclass(frozen=True)
class ScaleMixture:
    latent: Any
    mixand: Any

    def __post_init__(self):
        if not self.mixand.var > 0 or not math.isfinite(self.mixand.var):
            raise ContractError("mixand variance must be positive and finite")


@dataclass(frozen=True)
class ShiftMixture:
    latent: Any
    noise: Any


@dataclass(frozen=True)
class BernoulliMixture:
    latent: Any
    offset: float = 0.0


@dataclass(frozen=True)
class TriangularRowModel:
    """Row n: xi_{n,i} = r(n) V Y_i + U * n^{-1/2} (part 1) or U * n^{alpha-1} (part 2)."""

    latent_v: Any
    latent_u: Any
    mixand: Any
    alpha: float = 0.75
    row_perturbation: Callable[[int], float] = one_plus_inverse

    def __post_init__(self):
        if not self.alpha > 0.5:
            raise DomainError(f"drift exponent alpha must exceed 1/2, got {self.alpha}")
        if abs(self.mixand.mean) > 1e-12:
            raise ContractError("triangular mixand must be centered")


@dataclass(frozen=True)
class Experiment:
    latent_names: tuple[str, ...]
    latents: np.ndarray  # (reps, len(latent_names))
    values: np.ndarray
    report: KsReport
    config: dict = field(default_factory=dict)


# ---------------------------------------------------------------------------
# single sequences


def _positive(v, what):
    v = np.asarray(v, dtype=float)
    if np.any(~(v > 0)):
        raise ContractError(f"{what} must be positive")
    return v


def generate_sequence(model, stream: RandomStream, n: int):
    """One latent draw and n conditionally i.i.d. entries: ``(latent dict, array)``."""
    if n < 1:
        raise DomainError("sequence length must be >= 1")
    if isinstance(model, ScaleMixture):
        v = float(_positive(model.latent.sample(stream, 1), "scale latent")[0])
        return {"v": v}, v * np.asarray(model.mixand.sample(stream, n), dtype=float)
    if isinstance(model, ShiftMixture):
        y = float(np.asarray(model.latent.sample(stream, 1), dtype=float)[0])
        return {"y": y}, y + np.asarray(model.noise.sample(stream, n), dtype=float)
    if isinstance(model, BernoulliMixture):
        p = float(_check_prob(model.latent.sample(stream, 1))[0])
        return {"p": p}, (stream.generator.random(n) < p).astype(float) - model.offset
    if isinstance(model, TriangularRowModel):
        v = float(_positive(model.latent_v.sample(stream, 1), "scale latent")[0])
        u = float(np.asarray(model.latent_u.sample(stream, 1), dtype=float)[0])
        y = np.asarray(model.mixand.sample(stream, n), dtype=float)
        return {"v": v, "u": u}, model.row_perturbation(n) * v * y + u / math.sqrt(n)
    raise DomainError(f"unknown model type {type(model).__name__}")


def _check_prob(p):
    p = np.asarray(p, dtype=float)
    if np.any((p < 0) | (p > 1)):
        raise ContractError("Bernoulli latent must lie in [0, 1]")
    return p


def sample_matrix(model, stream: RandomStream, reps: int, n: int) -> np.ndarray:
    """``reps`` independent sequences of length n as a (reps, n) matrix."""
    if reps < 1 or n < 1:
        raise DomainError("reps and n must be >= 1")
    block = max(BLOCK_SIZE, 1 << 16)
    parts = []
    for b, start in enumerate(range(0, reps, block)):
        s = stream.spawn(b)
        size = min(block, reps - start)
        if isinstance(model, ScaleMixture):
            v = _latent_sample(model.latent, s, size, positive=True)
            parts.append(v[:, None] * np.asarray(model.mixand.sample(s, (size, n)), dtype=float))
        elif isinstance(model, ShiftMixture):
            y = _latent_sample(model.latent, s, size)
            parts.append(y[:, None] + np.asarray(model.noise.sample(s, (size, n)), dtype=float))
        elif isinstance(model, BernoulliMixture):
            p = _check_prob(_latent_sample(model.latent, s, size))
            parts.append((s.generator.random((size, n)) < p[:, None]).astype(float) - model.offset)
        else:
            raise DomainError(f"sample_matrix does not support {type(model).__name__}")
    return np.concatenate(parts)


# ---------------------------------------------------------------------------
# expectations over latent laws, mixture CDFs


def _law_expectation(law, g: Callable, tol: QuadTolerance | None = None) -> float:
    """E[g(W)] for W ~ law; g must accept arrays."""
    if isinstance(law, PointMass):
        return float(np.asarray(g(np.array([law.value])))[0])
    if isinstance(law, DiscreteMeasure):
        vals = np.asarray(g(np.asarray(law.points)), dtype=float)
        return math.fsum(np.asarray(law.weights) * vals)
    tol = tol or QuadTolerance(1e-12, 1e-10)
    if isinstance(law, MixingLaw):
        def fs(s):  # density of log V; v = e^s may overflow where the weight is negligible
            w = np.exp(law.log_pdf_s(s))
            with np.errstate(over="ignore", invalid="ignore"):
                vals = np.asarray(g(np.exp(s)), dtype=float) * w
            return np.where(w > 0, vals, 0.0)

        return integrate(fs, -math.inf, math.inf, tol, points=[math.log(law.mode)]).value
    if isinstance(law, Uniform):
        return integrate(lambda u: g(u) * law.pdf(u), law.low, law.high, tol).value
    if isinstance(law, Beta):
        return integrate(lambda u: g(u) * law.pdf(u), 0.0, 1.0, tol).value
    if not hasattr(law, "pdf"):
        raise DomainError(f"{type(law).__name__} has no density; cannot integrate against it")
    lo, hi = -math.inf, math.inf
    if hasattr(law, "shape") and hasattr(law, "scale"):  # gamma-type laws on (0, inf)
        lo = 0.0
    mean = float(getattr(law, "mean", 0.0))
    pts = [mean] if lo < mean < hi else []
    return integrate(lambda u: g(u) * law.pdf(u), lo, hi, tol, points=pts).value


def scale_mixture_cdf(latent, x, scale: float = 1.0):
    """P(scale * V * Z <= x) for V ~ latent independent of Z ~ N(0, 1)."""
    x = np.asarray(x, dtype=float)
    if isinstance(latent, MixingLaw):
        return QGaussian(latent.q).cdf(x / scale)
    if isinstance(latent, PointMass):
        c = latent.value * scale
        return normal_cdf(x / c) if c > 0 else np.where(x >= 0, 1.0, 0.0)
    flat = x.ravel()
    out = np.array([_law_expectation(latent, lambda v, xi=xi: normal_cdf(xi / (scale * v)))
                    for xi in flat])
    return out.reshape(x.shape)


def _convolution_cdf(base_cdf: Callable, shift_law, x):
    """P(W + U <= x) given the CDF of W and the law of an independent U."""
    x = np.asarray(x, dtype=float)
    if isinstance(shift_law, PointMass):
        return base_cdf(x - shift_law.value)
    flat = x.ravel()
    out = np.array([_law_expectation(shift_law, lambda u, xi=xi: base_cdf(xi - u)) for xi in flat])
    return out.reshape(x.shape)


def _tabulated_cdf(exact_cdf: Callable, sample: np.ndarray, n_nodes: int = 2001) -> Callable:
    """Interpolate an expensive CDF on sample-quantile nodes (monotone cubic)."""
    nodes = np.unique(np.quantile(sample, np.linspace(0.0, 1.0, n_nodes)))
    if nodes.size < 2:
        return exact_cdf
    vals = np.clip(np.asarray(exact_cdf(nodes), dtype=float), 0.0, 1.0)
    vals = np.maximum.accumulate(vals)
    interp = PchipInterpolator(nodes, vals, extrapolate=False)

    def cdf(x):
        x = np.asarray(x, dtype=float)
        y = np.atleast_1d(interp(x))
        out = np.isnan(y)
        if np.any(out):
            y[out] = exact_cdf(np.atleast_1d(x)[out])
        return y.reshape(x.shape)

    return cdf


# ---------------------------------------------------------------------------
# replication kernels (module level so they pickle for worker processes)


def _latent_sample(law, stream, size, positive=False):
    out = np.asarray(law.sample(stream, size), dtype=float).reshape(size)
    return _positive(out, "scale latent") if positive else out


def _kernel_case_i(model: ScaleMixture, n: int, stream: RandomStream, size: int):
    v = _latent_sample(model.latent, stream, size, positive=True)
    s = model.mixand.sample_sum(stream, n, size)
    return v[:, None], v * s / math.sqrt(n)


def _kernel_case_ii(model, n: int, stream: RandomStream, size: int):
    if isinstance(model, ShiftMixture):
        y = _latent_sample(model.latent, stream, size)
        return y[:, None], y + model.noise.sample_sum(stream, n, size) / n
    if isinstance(model, BernoulliMixture):
        p = _check_prob(_latent_sample(model.latent, stream, size))
        return p[:, None], stream.generator.binomial(n, p) / n - model.offset
    v = _latent_sample(model.latent, stream, size, positive=True)
    return v[:, None], v * model.mixand.sample_sum(stream, n, size) / n


def _kernel_triangular(model: TriangularRowModel, n: int, stream: RandomStream, size: int, part: int):
    v = _latent_sample(model.latent_v, stream, size, positive=True)
    u = _latent_sample(model.latent_u, stream, size)
    s = model.mixand.sample_sum(stream, n, size)
    r = model.row_perturbation(n)
    if part == 1:
        # sum_i (r V Y_i + U/sqrt n) / sqrt n
        vals = r * v * s / math.sqrt(n) + u
    else:
        # sum_i (r V Y_i + U n^{alpha-1}) / n^alpha
        vals = r * v * s / n ** model.alpha + u
    return np.column_stack([v, u]), vals


def _run_block(args):
    kernel, model, n, stream, size, extra = args
    return kernel(model, n, stream, size, *extra)


def _run_replications(kernel, model, n, reps, stream, workers=1, extra=()):
    if n < 1 or reps < 1:
        raise DomainError("n and replications must be >= 1")
    jobs = [(kernel, model, n, stream.spawn(b), min(BLOCK_SIZE, reps - start), extra)
            for b, start in enumerate(range(0, reps, BLOCK_SIZE))]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_run_block, jobs))  # map preserves job order
    else:
        parts = [_run_block(j) for j in jobs]
    latents = np.concatenate([p[0] for p in parts])
    values = np.concatenate([p[1] for p in parts])
    return latents, values


# ---------------------------------------------------------------------------
# experiments


def clt_case_i(model: ScaleMixture, n: int, replications: int, stream: RandomStream, *,
               threshold: float | None = None, workers: int = 1) -> Experiment:
    """S_n/sqrt(n) per replication, KS against the law of V * sd(Y) * Z."""
    if not isinstance(model, ScaleMixture):
        raise ContractError("case i needs a scale mixture (conditionally centered entries)")
    if abs(model.mixand.mean) > 1e-12:
        raise ContractError(f"mixand mean {model.mixand.mean!r} is not 0; case i needs centered entries")
    lat, vals = _run_replications(_kernel_case_i, model, n, replications, stream, workers)
    sd = math.sqrt(model.mixand.var)
    exact = lambda x: scale_mixture_cdf(model.latent, x, sd)  # noqa: E731
    cdf = exact if isinstance(model.latent, (MixingLaw, PointMass)) else _tabulated_cdf(exact, vals)
    rep = ks_statistic(vals, cdf, threshold=threshold, target_name="scale mixture V*Z")
    return Experiment(("v",), lat, vals, rep, {"n": n, "replications": replications})


def lln_case_ii(model, n: int, replications: int, stream: RandomStream, *,
                threshold: float | None = None, workers: int = 1) -> Experiment:
    """S_n/n per replication, KS against the law of the conditional mean.

    A scale mixture has conditional mean 0, so its target is the point mass at
    0.  A KS distance to a step is meaningless for continuous samples, so that
    route reports the fraction of outputs farther than n^{-1/4} from 0 instead.
    """
    lat, vals = _run_replications(_kernel_case_ii, model, n, replications, stream, workers)
    cfg = {"n": n, "replications": replications}
    if isinstance(model, ShiftMixture):
        rep = ks_statistic(vals, model.latent.cdf, threshold=threshold, target_name="shift latent Y")
        return Experiment(("y",), lat, vals, rep, cfg)
    if isinstance(model, BernoulliMixture):
        off = model.offset
        rep = ks_statistic(vals, lambda x: model.latent.cdf(x + off), threshold=threshold,
                           target_name="mixing law of p")
        return Experiment(("p",), lat, vals, rep, cfg)
    if isinstance(model, ScaleMixture):
        radius = n ** -0.25
        frac = float(np.mean(np.abs(vals) > radius))
        thr = KS_COEFF_1PCT / math.sqrt(replications) if threshold is None else threshold
        rep = KsReport(frac, replications, thr, frac <= thr, f"point mass 0 at radius {radius:.3g}")
        return Experiment(("v",), lat, vals, rep, cfg)
    raise DomainError(f"case ii does not apply to {type(model).__name__}")


def clt_triangular(model: TriangularRowModel, n: int, replications: int, stream: RandomStream, *,
                   part: int = 1, threshold: float | None = None, workers: int = 1) -> Experiment:
    """Rowwise exchangeable arrays.

    Part 1 normalizes by sqrt(n) with drift U/sqrt(n) and targets V*Z + U.
    Part 2 normalizes by n^alpha with drift U n^{alpha-1} and targets U.
    """
    if part not in (1, 2):
        raise DomainError("part must be 1 or 2")
    lat, vals = _run_replications(_kernel_triangular, model, n, replications, stream, workers, (part,))
    cfg = {"n": n, "replications": replications, "part": part, "alpha": model.alpha}
    if part == 1:
        sd = math.sqrt(model.mixand.var)
        base = lambda x: scale_mixture_cdf(model.latent_v, x, sd)  # noqa: E731
        exact = lambda x: _convolution_cdf(base, model.latent_u, x)  # noqa: E731
        cdf = exact if isinstance(model.latent_u, PointMass) and isinstance(
            model.latent_v, (MixingLaw, PointMass)) else _tabulated_cdf(exact, vals)
        rep = ks_statistic(vals, cdf, threshold=threshold, target_name="V*Z + U")
    else:
        rep = ks_statistic(vals, model.latent_u.cdf, threshold=threshold, target_name="U")
    return Experiment(("v", "u"), lat, vals, rep, cfg)


# ---------------------------------------------------------------------------
# correlation diagnostics


@dataclass(frozen=True)
class CorrelationReport:
    corr_x: float
    corr_x_se: float
    corr_sq: float
    corr_sq_se: float
    cov_x: float
    cov_x_se: float
    pairs: int

    def as_dict(self) -> dict:
        return {k: getattr(self, k) for k in
                ("corr_x", "corr_x_se", "corr_sq", "corr_sq_se", "cov_x", "cov_x_se", "pairs")}


def _batch(stat, a, b, batches):
    m = a.size // batches
    vals = np.array([stat(a[i * m:(i + 1) * m], b[i * m:(i + 1) * m]) for i in range(batches)])
    return float(stat(a, b)), float(vals.std(ddof=1) / math.sqrt(batches))


def _corr(a, b):
    return np.corrcoef(a, b)[0, 1]


def _cov(a, b):
    return np.mean((a - a.mean()) * (b - b.mean()))


def exchangeability_diagnostic(samples, batches: int = 100) -> CorrelationReport:
    """corr(X1, X2), corr(X1^2, X2^2) and cov(X1, X2) across replications.

    Standard errors come from batch means over ``batches`` equal slices.
    """
    x = np.asarray(samples, dtype=float)
    if x.ndim != 2 or x.shape[1] < 2:
        raise DomainError("need a (replications, n) matrix with n >= 2")
    if x.shape[0] < 2 * batches:
        raise DomainError("too few replications for the requested batches")
    a, b = x[:, 0], x[:, 1]
    c, cse = _batch(_corr, a, b, batches)
    s, sse = _batch(_corr, a * a, b * b, batches)
    v, vse = _batch(_cov, a, b, batches)
    return CorrelationReport(c, cse, s, sse, v, vse, x.shape[0])


def permutation_invariance(samples, n_grid: int = 64, threshold: float | None = None) -> KsReport:
    """sup over a quantile grid of |F_{X1,X2}(s,t) - F_{X2,X1}(s,t)|.

    Compared against the two-sample threshold 1.628 sqrt(2/m).
    """
    x = np.asarray(samples, dtype=float)
    if x.ndim != 2 or x.shape[1] < 2:
        raise DomainError("need a (replications, n) matrix with n >= 2")
    m = x.shape[0]
    grid = np.quantile(x[:, :2], np.linspace(0.0, 1.0, n_grid + 2)[1:-1])
    a = (x[:, 0:1] <= grid).astype(float)
    b = (x[:, 1:2] <= grid).astype(float)
    joint = a.T @ b / m
    d = float(np.max(np.abs(joint - joint.T)))
    thr = KS_COEFF_1PCT * math.sqrt(2.0 / m) if threshold is None else threshold
    return KsReport(d, m, thr, d <= thr, "swap (X1,X2) -> (X2,X1)")


# ---------------------------------------------------------------------------
# Leibnitz triangles


@dataclass(frozen=True)
class LeibnitzTriangle:
    """r[N][n] = P(X_1 = ... = X_n = 1, X_{n+1} = ... = X_N = 0) for a 0/1 exchangeable sequence."""

    rows: tuple[np.ndarray, ...]
    measure: Any

    @property
    def n_max(self) -> int:
        return len(self.rows) - 1

    def r(self, N: int, n: int) -> float:
        return float(self.rows[N][n])

    def rule_residual(self) -> float:
        """max |r_{N,n} + r_{N,n+1} - r_{N-1,n}| over the triangle."""
        worst = 0.0
        for N in range(1, len(self.rows)):
            row, prev = self.rows[N], self.rows[N - 1]
            worst = max(worst, float(np.max(np.abs(row[:-1] + row[1:] - prev))))
        return worst

    def row_mass_error(self) -> float:
        """max_N |sum_n C(N,n) r_{N,n} - 1|."""
        worst = 0.0
        for N, row in enumerate(self.rows):
            binom = np.array([math.comb(N, k) for k in range(N + 1)], dtype=float)
            worst = max(worst, abs(math.fsum(binom * row) - 1.0))
        return worst


def _gauss_legendre_01(k: int = 200):
    t, w = np.polynomial.legendre.leggauss(k)
    return 0.5 * (t + 1.0), 0.5 * w


def leibnitz_from_mixing(mu, n_max: int) -> LeibnitzTriangle:
    """r_{N,n} = ∫ p^n (1-p)^{N-n} dmu(p) for 0 <= n <= N <= n_max.

    Discrete measures and point masses are summed exactly; Beta laws (the
    uniform law included) use the Beta-function closed form; any other law with
    a density on [0, 1] uses one fixed Gauss–Legendre rule for every entry, so
    the Leibnitz rule holds node by node up to rounding.
    """
    if n_max < 0:
        raise DomainError("n_max must be >= 0")
    if isinstance(mu, Uniform):
        if (mu.low, mu.high) != (0.0, 1.0):
            raise DomainError("uniform mixing measure must live on [0, 1]")
        mu = Beta(1.0, 1.0)
    rows = []
    if isinstance(mu, Beta):
        a, b = mu.a, mu.b
        log_b0 = math.lgamma(a) + math.lgamma(b) - math.lgamma(a + b)
        for N in range(n_max + 1):
            rows.append(np.array([
                math.exp(math.lgamma(a + k) + math.lgamma(b + N - k) - math.lgamma(a + b + N) - log_b0)
                for k in range(N + 1)]))
        return LeibnitzTriangle(tuple(rows), mu)
    if isinstance(mu, PointMass):
        pts, wts = np.array([mu.value]), np.array([1.0])
    elif isinstance(mu, DiscreteMeasure):
        pts, wts = np.asarray(mu.points), np.asarray(mu.weights)
    elif hasattr(mu, "pdf"):
        pts, wts = _gauss_legendre_01()
        wts = wts * np.asarray(mu.pdf(pts), dtype=float)
        total = math.fsum(wts)
        if abs(total - 1.0) > 1e-10:
            raise DomainError(f"mixing density integrates to {total!r} on [0, 1], not 1")
    else:
        raise DomainError(f"unsupported mixing measure {type(mu).__name__}")
    if np.any((pts < 0) | (pts > 1)):
        raise DomainError("mixing measure must live on [0, 1]")
    for N in range(n_max + 1):
        k = np.arange(N + 1)
        terms = wts[:, None] * pts[:, None] ** k[None, :] * (1.0 - pts[:, None]) ** (N - k)[None, :]
        rows.append(terms.sum(axis=0))
    return LeibnitzTriangle(tuple(rows), mu)
