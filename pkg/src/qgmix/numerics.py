"""Numerical kernel: special functions, adaptive quadrature, random streams, KS statistics.

Everything here is pure except :class:`RandomStream`, which wraps a single-owner
numpy generator.  Streams are keyed by ``(master_seed, stream_id, subkey)`` through
:class:`numpy.random.SeedSequence`, so equal keys reproduce bit-identical draws and
distinct keys give independent sequences.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Sequence

import numpy as np

__all__ = [
    "DomainError",
    "QuadratureError",
    "QuadTolerance",
    "QuadResult",
    "RandomStream",
    "KsReport",
    "KS_COEFF_1PCT",
    "log_gamma",
    "log_gamma_ratio",
    "normal_cdf",
    "integrate",
    "sample_normal",
    "sample_gamma",
    "sample_uniform",
    "ks_statistic",
    "ks_two_sample",
]

KS_COEFF_1PCT = 1.628  # asymptotic one-sample KS critical value at the 1% level


class DomainError(ValueError):
    """Argument outside the mathematical domain of an operation."""


class QuadratureError(ArithmeticError):
    """Adaptive quadrature failed to reach its tolerance.

    The best available estimate is kept on the exception so callers can decide
    whether it is still usable.
    """

    def __init__(self, message: str, estimate: float, error: float):
        super().__init__(f"{message} (estimate={estimate!r}, error={error!r})")
        self.estimate = estimate
        self.error = error


# ---------------------------------------------------------------------------
# special functions


def log_gamma(x: float) -> float:
    """ln Γ(x) for x > 0."""
    x = float(x)
    if not math.isfinite(x) or x <= 0.0:
        raise DomainError(f"log_gamma requires finite x > 0, got {x!r}")
    return math.lgamma(x)


def log_gamma_ratio(a: float, h: float) -> float:
    """ln Γ(a) − ln Γ(a + h) for a, a + h > 0, without cancellation at large a.

    For a >= 30 the Stirling series is differenced term by term, so the
    result keeps absolute accuracy near 1e-16 where a plain lgamma
    difference loses about log10(a ln a) digits.
    """
    a, h = float(a), float(h)
    b = a + h
    if not (math.isfinite(a) and math.isfinite(b) and a > 0 and b > 0):
        raise DomainError(f"log_gamma_ratio needs a, a + h > 0, got a={a!r}, h={h!r}")
    if min(a, b) < 30.0:
        return math.lgamma(a) - math.lgamma(b)

    def tail(x):
        x2 = 1.0 / (x * x)
        return (1.0 / 12 - x2 * (1.0 / 360 - x2 * (1.0 / 1260 - x2 / 1680))) / x

    return -(a - 0.5) * math.log1p(h / a) - h * math.log(b) + h + tail(a) - tail(b)


_SQRT1_2 = 1.0 / math.sqrt(2.0)


def normal_cdf(x):
    """Standard normal CDF; accepts scalars or arrays.

    The lower tail is computed with ``erfc`` for both signs so that
    Φ(−x) and 1 − Φ(x) come from the same tail value.
    """
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr) | np.isinf(arr)):
        raise DomainError("normal_cdf got NaN")
    from scipy.special import erfc

    tail = 0.5 * erfc(np.abs(arr) * _SQRT1_2)
    out = np.where(arr < 0, tail, 1.0 - tail)
    if np.ndim(x) == 0:
        return float(out)
    return out


# ---------------------------------------------------------------------------
# quadrature

# Gauss–Kronrod 7/15 abscissae (non-negative half) and weights.
_XGK = np.array([
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.0,
])
_WGK = np.array([
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327,
])
_NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])          # 15 nodes on [-1, 1]
_W_K = np.concatenate([_WGK[:-1], _WGK[::-1]])
_W_G = np.zeros(15)
_W_G[[1, 3, 5]] = _WG[:3]
_W_G[[13, 11, 9]] = _WG[:3]
_W_G[7] = _WG[3]
_EPS = np.finfo(float).eps


@dataclass(frozen=True)
class QuadTolerance:
    abs_tol: float = 1e-10
    rel_tol: float = 1e-10
    max_depth: int = 60

    def __post_init__(self):
        if not self.abs_tol > 0 or not self.rel_tol > 0:
            raise DomainError("quadrature tolerances must be positive")
        if self.max_depth < 1:
            raise DomainError("max_depth must be >= 1")


class QuadResult(NamedTuple):
    value: float
    error: float
    n_eval: int


def _rational_segment(a: float, direction: float, t0: float = 0.0, t1: float = 1.0):
    """x = a + direction * t/(1-t) on t in [t0, t1)."""
    def tr(t):
        s = 1.0 - t
        return a + direction * t / s, 1.0 / (s * s)
    return tr, t0, t1


def _segments(a: float, b: float, points: Sequence[float], mapping: str):
    """Split [a, b] into finite segments in a computational variable t."""
    if mapping not in ("rational", "log"):
        raise DomainError(f"unknown mapping {mapping!r}")
    if math.isnan(a) or math.isnan(b):
        raise DomainError("integration limits must not be NaN")
    cuts = sorted({float(p) for p in points if a < p < b})

    if mapping == "log":
        if a < 0 or not math.isinf(b):
            if math.isinf(a) and math.isinf(b):
                # reflect the negative half onto [0, inf)
                return None
            raise DomainError("log mapping needs an interval [a, inf) with a >= 0")
        logs = [math.log(c) for c in cuts if c > 0]
        s_lo = -math.inf if a == 0 else math.log(a)
        edges = [s_lo, *logs]
        if s_lo == -math.inf and not logs:
            edges.append(0.0)
        segs = []
        for lo, hi in zip(edges[:-1], edges[1:]):
            if lo == -math.inf:
                segs.append(_log_wrap(_rational_segment(hi, -1.0)))
            else:
                segs.append(_log_wrap(_identity_segment(lo, hi)))
        segs.append(_log_wrap(_rational_segment(edges[-1], 1.0)))
        return segs

    edges = [a, *cuts, b]
    segs = []
    for lo, hi in zip(edges[:-1], edges[1:]):
        if math.isinf(lo) and math.isinf(hi):
            segs.append(_rational_segment(0.0, -1.0))
            segs.append(_rational_segment(0.0, 1.0))
        elif math.isinf(lo):
            segs.append(_rational_segment(hi, -1.0))
        elif math.isinf(hi):
            segs.append(_rational_segment(lo, 1.0))
        else:
            segs.append(_identity_segment(lo, hi))
    return segs


def _identity_segment(lo: float, hi: float):
    def tr(t):
        return t, np.ones_like(t)
    return tr, lo, hi


def _log_wrap(seg):
    inner, t0, t1 = seg

    def tr(t):
        s, js = inner(t)
        with np.errstate(over="ignore"):
            x = np.exp(s)
        return x, js * x
    return tr, t0, t1


def _gk_eval(f, tr, lo: np.ndarray, hi: np.ndarray):
    """Kronrod value and |K - G| error on each [lo_i, hi_i] (computational variable)."""
    half = 0.5 * (hi - lo)
    mid = 0.5 * (hi + lo)
    t = mid[:, None] + half[:, None] * _NODES[None, :]
    x, jac = tr(t)
    ok = np.isfinite(x) & (jac != 0)  # log-mapped nodes may underflow to x = 0
    fx = np.zeros_like(x)
    if ok.any():
        with np.errstate(over="ignore", under="ignore", divide="ignore"):
            fx[ok] = np.asarray(f(x[ok]), dtype=float)
    with np.errstate(invalid="ignore", over="ignore"):
        vals = fx * jac
    vals[fx == 0.0] = 0.0
    if not np.all(np.isfinite(vals)):
        raise DomainError("integrand produced non-finite values")
    k = half * (vals @ _W_K)
    g = half * (vals @ _W_G)
    resabs = np.abs(half) * (np.abs(vals) @ _W_K)
    err = np.maximum(np.abs(k - g), 50.0 * _EPS * resabs)
    return k, err


def integrate(
    f: Callable[[np.ndarray], np.ndarray],
    a: float,
    b: float,
    tol: QuadTolerance | None = None,
    *,
    points: Sequence[float] = (),
    mapping: str = "rational",
) -> QuadResult:
    """Globally adaptive Gauss–Kronrod (7/15) quadrature of ``f`` over [a, b].

    ``f`` is called with 1-d float arrays and must be vectorized.  Infinite
    limits are handled by a variable change: ``mapping="rational"`` uses
    x = a + t/(1 - t); ``mapping="log"`` (for [a, inf) with a >= 0, or the whole
    line by reflection) first substitutes x = e^s and then maps s rationally,
    which turns slowly decaying power tails into exponential ones.  ``points``
    are interior breakpoints (singularities, kinks, modes).

    Raises :class:`QuadratureError` carrying the best estimate when the
    requested tolerance cannot be met within ``tol.max_depth`` bisections.
    """
    tol = tol or QuadTolerance()
    a, b = float(a), float(b)
    if a == b:
        return QuadResult(0.0, 0.0, 0)
    if a > b:
        r = integrate(f, b, a, tol, points=points, mapping=mapping)
        return QuadResult(-r.value, r.error, r.n_eval)

    segs = _segments(a, b, points, mapping)
    if segs is None:  # whole line with log mapping: split and reflect
        pos = integrate(f, 0.0, math.inf, tol, points=[p for p in points if p > 0], mapping="log")
        neg = integrate(lambda x: f(-x), 0.0, math.inf, tol,
                        points=[-p for p in points if p < 0], mapping="log")
        return QuadResult(pos.value + neg.value, pos.error + neg.error, pos.n_eval + neg.n_eval)

    # heap of (-err, counter, seg_index, lo, hi, depth, value)
    heap: list = []
    n_eval = 0
    counter = 0
    for si, (tr, t0, t1) in enumerate(segs):
        k, e = _gk_eval(f, tr, np.array([t0]), np.array([t1]))
        n_eval += 15
        heapq.heappush(heap, (-e[0], counter, si, t0, t1, 0, k[0]))
        counter += 1

    total = math.fsum(it[6] for it in heap)
    total_err = math.fsum(-it[0] for it in heap)
    max_intervals = 200_000
    while True:
        target = max(tol.abs_tol, tol.rel_tol * abs(total))
        if total_err <= target:
            break
        # bisect every interval that carries a sizable share of the error
        batch = []
        cutoff = max(-heap[0][0] * 0.25, target / (4.0 * len(heap)))
        while heap and -heap[0][0] >= cutoff and len(batch) < 512:
            item = heapq.heappop(heap)
            if item[5] >= tol.max_depth:
                heapq.heappush(heap, item)
                break
            batch.append(item)
        if not batch or len(heap) + 2 * len(batch) > max_intervals:
            raise QuadratureError("adaptive quadrature did not converge", total, total_err)
        by_seg: dict[int, list] = {}
        for it in batch:
            by_seg.setdefault(it[2], []).append(it)
        for si, items in by_seg.items():
            tr = segs[si][0]
            lo = np.array([it[3] for it in items])
            hi = np.array([it[4] for it in items])
            mid = 0.5 * (lo + hi)
            los = np.concatenate([lo, mid])
            his = np.concatenate([mid, hi])
            k, e = _gk_eval(f, tr, los, his)
            n_eval += 15 * len(los)
            m = len(items)
            for j, it in enumerate(items):
                heapq.heappush(heap, (-e[j], counter, si, los[j], his[j], it[5] + 1, k[j]))
                heapq.heappush(heap, (-e[j + m], counter + 1, si, los[j + m], his[j + m],
                                      it[5] + 1, k[j + m]))
                counter += 2
        total = math.fsum(it[6] for it in heap)
        total_err = math.fsum(-it[0] for it in heap)

    return QuadResult(total, total_err, n_eval)


# ---------------------------------------------------------------------------
# random streams


@dataclass(frozen=True)
class RandomStream:
    """Seeded, splittable random stream.

    ``RandomStream(seed, i).spawn(j)`` is the stream keyed by ``(seed, i, j)``;
    experiments hand one such key to each replication block so results do not
    depend on how blocks are distributed over workers.
    """

    master_seed: int
    stream_id: int = 0
    subkey: tuple[int, ...] = ()
    generator: np.random.Generator = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.master_seed < 0 or self.stream_id < 0 or any(k < 0 for k in self.subkey):
            raise DomainError("seed and stream ids must be non-negative")
        ss = np.random.SeedSequence(int(self.master_seed),
                                    spawn_key=(int(self.stream_id), *map(int, self.subkey)))
        object.__setattr__(self, "generator", np.random.Generator(np.random.PCG64(ss)))

    def spawn(self, index: int) -> RandomStream:
        return RandomStream(self.master_seed, self.stream_id, (*self.subkey, int(index)))


def sample_normal(stream: RandomStream, size=None):
    return stream.generator.standard_normal(size)


def sample_gamma(stream: RandomStream, shape: float, scale: float = 1.0, size=None):
    """Gamma(shape, scale) variates (numpy's Marsaglia–Tsang rejection sampler)."""
    if not (shape > 0 and scale > 0 and math.isfinite(shape) and math.isfinite(scale)):
        raise DomainError(f"gamma needs shape > 0 and scale > 0, got {shape!r}, {scale!r}")
    return stream.generator.standard_gamma(shape, size) * scale


def sample_uniform(stream: RandomStream, size=None):
    """Uniform variates on the open interval (0, 1)."""
    k = stream.generator.integers(0, 1 << 53, size=size, dtype=np.int64)
    return (k + 0.5) * (1.0 / (1 << 53))


# ---------------------------------------------------------------------------
# Kolmogorov–Smirnov


@dataclass(frozen=True)
class KsReport:
    statistic: float
    sample_size: int
    threshold: float
    passed: bool
    target_name: str = ""

    def as_dict(self) -> dict:
        return {
            "statistic": self.statistic,
            "sample_size": self.sample_size,
            "threshold": self.threshold,
            "pass": self.passed,
            "target": self.target_name,
        }


def ks_statistic(
    sample,
    target_cdf: Callable,
    *,
    threshold: float | None = None,
    target_name: str = "",
) -> KsReport:
    """One-sample KS distance between the empirical CDF of ``sample`` and ``target_cdf``.

    ``target_cdf`` is evaluated once on the sorted sample (vectorized).  The
    default threshold is the asymptotic 1% critical value 1.628/sqrt(m).
    """
    x = np.sort(np.asarray(sample, dtype=float).ravel())
    m = x.size
    if m == 0:
        raise DomainError("KS statistic needs a nonempty sample")
    F = np.asarray(target_cdf(x), dtype=float)
    i = np.arange(1, m + 1)
    d = float(max(np.max(i / m - F), np.max(F - (i - 1) / m), 0.0))
    thr = KS_COEFF_1PCT / math.sqrt(m) if threshold is None else float(threshold)
    return KsReport(d, m, thr, d <= thr, target_name)


def ks_two_sample(a, b, *, threshold: float | None = None, target_name: str = "two-sample") -> KsReport:
    """Two-sample KS distance; threshold 1.628*sqrt((m+n)/(m*n)) by default."""
    xa = np.sort(np.asarray(a, dtype=float).ravel())
    xb = np.sort(np.asarray(b, dtype=float).ravel())
    m, n = xa.size, xb.size
    if m == 0 or n == 0:
        raise DomainError("two-sample KS needs nonempty samples")
    grid = np.concatenate([xa, xb])
    fa = np.searchsorted(xa, grid, side="right") / m
    fb = np.searchsorted(xb, grid, side="right") / n
    d = float(np.max(np.abs(fa - fb)))
    thr = KS_COEFF_1PCT * math.sqrt((m + n) / (m * n)) if threshold is None else float(threshold)
    return KsReport(d, min(m, n), thr, d <= thr, target_name)
