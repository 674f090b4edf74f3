"""Small one-dimensional laws used as latent variables and mixands.

Each law offers ``sample(stream, size)`` and ``cdf(x)``; continuous ones also
``pdf``.  ``sample_sum(stream, n, size)`` draws ``size`` independent sums of n
i.i.d. copies; for normal and Rademacher mixands the sum is drawn from its
exact law (normal, shifted binomial) instead of summing n draws.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import betainc, gammainc

from .numerics import DomainError, RandomStream, normal_cdf, sample_gamma, sample_normal, sample_uniform

__all__ = [
    "PointMass",
    "Uniform",
    "Normal",
    "Rademacher",
    "CenteredUniform",
    "Beta",
    "Gamma",
    "DiscreteMeasure",
    "MIXANDS",
]

_SUM_CHUNK = 4_000_000  # draws per chunk when summing explicitly


class _Law:
    mean: float
    var: float

    def sample_sum(self, stream: RandomStream, n: int, size: int) -> np.ndarray:
        out = np.empty(size)
        rows = max(1, _SUM_CHUNK // max(n, 1))
        for start in range(0, size, rows):
            stop = min(size, start + rows)
            out[start:stop] = self.sample(stream, (stop - start, n)).sum(axis=1)
        return out


@dataclass(frozen=True)
class PointMass(_Law):
    value: float

    @property
    def mean(self):
        return self.value

    @property
    def var(self):
        return 0.0

    def sample(self, stream, size=None):
        return np.full(size, self.value) if size is not None else self.value

    def cdf(self, x):
        return np.where(np.asarray(x, dtype=float) >= self.value, 1.0, 0.0)

    def sample_sum(self, stream, n, size):
        return np.full(size, n * self.value)


@dataclass(frozen=True)
class Uniform(_Law):
    low: float = 0.0
    high: float = 1.0

    def __post_init__(self):
        if not self.high > self.low:
            raise DomainError("uniform needs high > low")

    @property
    def mean(self):
        return 0.5 * (self.low + self.high)

    @property
    def var(self):
        return (self.high - self.low) ** 2 / 12.0

    def sample(self, stream, size=None):
        return self.low + (self.high - self.low) * sample_uniform(stream, size)

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        return np.where((x >= self.low) & (x <= self.high), 1.0 / (self.high - self.low), 0.0)

    def cdf(self, x):
        return np.clip((np.asarray(x, dtype=float) - self.low) / (self.high - self.low), 0.0, 1.0)


@dataclass(frozen=True)
class Normal(_Law):
    loc: float = 0.0
    scale: float = 1.0

    def __post_init__(self):
        if not self.scale > 0:
            raise DomainError("normal needs scale > 0")

    @property
    def mean(self):
        return self.loc

    @property
    def var(self):
        return self.scale ** 2

    def sample(self, stream, size=None):
        return self.loc + self.scale * sample_normal(stream, size)

    def pdf(self, x):
        z = (np.asarray(x, dtype=float) - self.loc) / self.scale
        return np.exp(-0.5 * z * z) / (self.scale * math.sqrt(2.0 * math.pi))

    def cdf(self, x):
        return normal_cdf((np.asarray(x, dtype=float) - self.loc) / self.scale)

    def sample_sum(self, stream, n, size):
        return n * self.loc + math.sqrt(n) * self.scale * sample_normal(stream, size)


@dataclass(frozen=True)
class Rademacher(_Law):
    """±1 with equal probability (mean 0, variance 1)."""

    mean = 0.0
    var = 1.0

    def sample(self, stream, size=None):
        return 2.0 * stream.generator.integers(0, 2, size=size) - 1.0

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        return np.where(x < -1, 0.0, np.where(x < 1, 0.5, 1.0))

    def sample_sum(self, stream, n, size):
        return 2.0 * stream.generator.binomial(n, 0.5, size=size) - n


@dataclass(frozen=True)
class CenteredUniform(_Law):
    """Uniform on [-sqrt 3, sqrt 3] (mean 0, variance 1)."""

    mean = 0.0
    var = 1.0

    def sample(self, stream, size=None):
        return math.sqrt(3.0) * (2.0 * sample_uniform(stream, size) - 1.0)

    def cdf(self, x):
        r = math.sqrt(3.0)
        return np.clip((np.asarray(x, dtype=float) + r) / (2 * r), 0.0, 1.0)


@dataclass(frozen=True)
class Beta(_Law):
    a: float = 1.0
    b: float = 1.0

    def __post_init__(self):
        if not (self.a > 0 and self.b > 0):
            raise DomainError("beta needs a, b > 0")

    @property
    def mean(self):
        return self.a / (self.a + self.b)

    @property
    def var(self):
        s = self.a + self.b
        return self.a * self.b / (s * s * (s + 1.0))

    def sample(self, stream, size=None):
        return stream.generator.beta(self.a, self.b, size)

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        logb = math.lgamma(self.a) + math.lgamma(self.b) - math.lgamma(self.a + self.b)
        inside = (x > 0) & (x < 1)
        xs = np.where(inside, x, 0.5)
        val = np.exp((self.a - 1) * np.log(xs) + (self.b - 1) * np.log1p(-xs) - logb)
        return np.where(inside, val, 0.0)

    def cdf(self, x):
        return betainc(self.a, self.b, np.clip(np.asarray(x, dtype=float), 0.0, 1.0))


@dataclass(frozen=True)
class Gamma(_Law):
    shape: float
    scale: float = 1.0

    def __post_init__(self):
        if not (self.shape > 0 and self.scale > 0):
            raise DomainError("gamma needs shape, scale > 0")

    @property
    def mean(self):
        return self.shape * self.scale

    @property
    def var(self):
        return self.shape * self.scale ** 2

    def sample(self, stream, size=None):
        return sample_gamma(stream, self.shape, self.scale, size)

    def logpdf(self, x):
        x = np.asarray(x, dtype=float)
        return ((self.shape - 1.0) * np.log(x) - x / self.scale
                - math.lgamma(self.shape) - self.shape * math.log(self.scale))

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(x > 0, np.exp(self.logpdf(np.where(x > 0, x, 1.0))), 0.0)

    def cdf(self, x):
        return gammainc(self.shape, np.clip(np.asarray(x, dtype=float), 0.0, None) / self.scale)


@dataclass(frozen=True)
class DiscreteMeasure(_Law):
    """Finitely supported law: ``points`` with ``weights`` summing to 1."""

    points: tuple[float, ...]
    weights: tuple[float, ...]

    def __post_init__(self):
        p = np.asarray(self.points, dtype=float)
        w = np.asarray(self.weights, dtype=float)
        if p.shape != w.shape or p.ndim != 1 or p.size == 0:
            raise DomainError("points and weights must be equal-length 1-d sequences")
        if np.any(w < 0):
            raise DomainError("weights must be non-negative")
        if abs(math.fsum(w) - 1.0) > 1e-12:
            raise DomainError(f"weights sum to {math.fsum(w)!r}, not 1")
        object.__setattr__(self, "points", tuple(p.tolist()))
        object.__setattr__(self, "weights", tuple(w.tolist()))

    @property
    def mean(self):
        return math.fsum(p * w for p, w in zip(self.points, self.weights))

    @property
    def var(self):
        m = self.mean
        return math.fsum(w * (p - m) ** 2 for p, w in zip(self.points, self.weights))

    def sample(self, stream, size=None):
        idx = stream.generator.choice(len(self.points), size=size, p=np.asarray(self.weights))
        return np.asarray(self.points)[idx]

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        p = np.asarray(self.points)
        w = np.asarray(self.weights)
        return (w[None, :] * (p[None, :] <= x.reshape(-1, 1))).sum(axis=1).reshape(x.shape)


MIXANDS = {
    "normal": Normal(0.0, 1.0),
    "normal-half": Normal(0.0, 1.0 / math.sqrt(2.0)),
    "rademacher": Rademacher(),
    "uniform": CenteredUniform(),
}
