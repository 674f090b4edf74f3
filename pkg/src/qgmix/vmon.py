"""Mixing side of the q-Gaussian variance mixture.

For 1 < q < 3 the q-Gaussian is the law of V*Z with Z standard normal and

    f_V(v) = C_{V,q} exp(-1/(2(q-1)v^2)) v^{-2/(q-1)},   v > 0.

Substituting w = 1/v^2 turns f_V into a Gamma density with shape
(3-q)/(2(q-1)) and scale 2(q-1), i.e. W = (q-1) * chi^2_dof with
dof = 2/(q-1) - 1.  So V = 1/sqrt((q-1) G) with G ~ chi^2_dof.  The factor
(q-1) is forced by the exp(-1/(2(q-1)v^2)) term; a bare 1/sqrt(chi^2) would
have the wrong scale.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.special import gammaincc, gammainccinv

from .numerics import (
    DomainError,
    QuadTolerance,
    RandomStream,
    integrate,
    log_gamma,
    sample_gamma,
    sample_normal,
)

__all__ = [
    "Q_UPPER",
    "MixingLaw",
    "GenericVMON",
    "ContractError",
    "MixtureReport",
    "c_vq",
    "c_prime_q",
    "verify_mixture",
    "exp_mixture_check",
    "generic_vmon_sample",
]

Q_UPPER = 3.0 - 1e-6  # constants underflow beyond this


class ContractError(ValueError):
    """A caller-supplied component broke its stated contract."""


def _check_q(q: float) -> float:
    q = float(q)
    if not 1.0 < q < 3.0:
        raise DomainError(f"mixing law needs 1 < q < 3, got q={q}")
    if q > Q_UPPER:
        raise DomainError(f"q={q} is beyond the supported boundary q <= 3 - 1e-6")
    return q


def _log_c_vq(q: float) -> float:
    shape = (3.0 - q) / (2.0 * (q - 1.0))
    log_inv = log_gamma(shape) - math.log(2.0) + shape * math.log(2.0 * (q - 1.0))
    return -log_inv


def c_vq(q: float) -> float:
    """Normalizing constant C_{V,q} of f_V."""
    return math.exp(_log_c_vq(_check_q(q)))


def c_prime_q(q: float) -> float:
    """Constant of the Laplace-transform identity

        C'_q [1 + (q-1) x^2]^{-1/(q-1)} = ∫_0^∞ exp(-x^2 t) exp(-t/(q-1)) t^{(2-q)/(q-1)} dt,

    i.e. Γ(1/(q-1)) (q-1)^{1/(q-1)}.
    """
    q = _check_q(q)
    a = 1.0 / (q - 1.0)
    return math.exp(log_gamma(a) + a * math.log(q - 1.0))


@dataclass(frozen=True)
class MixingLaw:
    q: float
    dof: float = field(init=False)
    c_vq: float = field(init=False)

    def __post_init__(self):
        q = _check_q(self.q)
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "dof", 2.0 / (q - 1.0) - 1.0)
        object.__setattr__(self, "c_vq", math.exp(_log_c_vq(q)))

    @property
    def mode(self) -> float:
        # d/dv log f_V = 1/((q-1)v^3) - 2/((q-1)v) vanishes at v^2 = 1/2 for every q
        return 1.0 / math.sqrt(2.0)

    def logpdf(self, v):
        v = np.asarray(v, dtype=float)
        if np.any(v <= 0):
            raise DomainError("mixing density is defined for v > 0")
        q = self.q
        with np.errstate(over="ignore"):
            out = _log_c_vq(q) - (0.5 / (q - 1.0)) / v / v - (2.0 / (q - 1.0)) * np.log(v)
        return out if out.ndim else float(out)

    def pdf(self, v):
        out = np.exp(self.logpdf(v))
        return out if np.ndim(out) else float(out)

    def cdf(self, v):
        """P(V <= v) = P(G >= 1/((q-1) v^2)), G ~ chi^2_dof."""
        v = np.asarray(v, dtype=float)
        with np.errstate(divide="ignore"):
            g = np.where(v > 0, 1.0 / ((self.q - 1.0) * v * v), np.inf)
        out = np.where(v > 0, gammaincc(0.5 * self.dof, 0.5 * g), 0.0)
        return out if out.ndim else float(out)

    def ppf(self, p):
        p = np.asarray(p, dtype=float)
        if np.any(~((p > 0) & (p < 1))):
            raise DomainError("ppf needs 0 < p < 1")
        g = 2.0 * gammainccinv(0.5 * self.dof, p)
        out = 1.0 / np.sqrt((self.q - 1.0) * g)
        return out if out.ndim else float(out)

    def sample(self, stream: RandomStream, size=None):
        g = sample_gamma(stream, 0.5 * self.dof, 2.0, size)
        return 1.0 / np.sqrt((self.q - 1.0) * g)

    def second_moment(self) -> float:
        """E[V^2] = E[1/((q-1) G)] = 1/((q-1)(dof-2)); infinite unless dof > 2 (q < 5/3)."""
        if self.dof <= 2.0:
            return math.inf
        return 1.0 / ((self.q - 1.0) * (self.dof - 2.0))

    def log_pdf_s(self, s):
        """log(v f_V(v)) at v = e^s, the density of log V; finite for every real s."""
        s = np.asarray(s, dtype=float)
        a = 1.0 / (self.q - 1.0)
        with np.errstate(over="ignore"):
            return _log_c_vq(self.q) - 0.5 * a * np.exp(-2.0 * s) - (2.0 * a - 1.0) * s

    def total_mass(self, tol: QuadTolerance | None = None) -> float:
        # in s = log v: the v^{-2/(q-1)} tail is too slow near q = 3 to stay below 1e308 in v
        tol = tol or QuadTolerance(1e-13, 1e-12)
        return integrate(lambda s: np.exp(self.log_pdf_s(s)), -math.inf, math.inf, tol,
                         points=[math.log(self.mode)]).value


@dataclass(frozen=True)
class GenericVMON:
    """A user-specified variance mixture V*Z.

    ``mixing_sampler(stream, n)`` must return n strictly positive draws of V.
    ``mixing_cdf`` is optional and only needed for quadrature-based consumers
    (e.g. pricing).  ``point_mass`` marks degenerate mixtures so they can be
    handled exactly.
    """

    mixing_sampler: Callable[[RandomStream, int], np.ndarray]
    mixing_cdf: Callable | None = None
    label: str = "generic"
    point_mass: float | None = None

    @classmethod
    def degenerate(cls, v: float) -> GenericVMON:
        if not v > 0:
            raise DomainError("point mass must sit at v > 0")
        return cls(_PointSampler(float(v)), _PointCdf(float(v)), f"point({v})", float(v))

    @classmethod
    def from_law(cls, law: MixingLaw) -> GenericVMON:
        return cls(_LawSampler(law), law.cdf, f"q-gaussian-mixing(q={law.q})")


@dataclass(frozen=True)
class _PointSampler:
    v: float

    def __call__(self, stream, n):
        return np.full(n, self.v)


@dataclass(frozen=True)
class _PointCdf:
    v: float

    def __call__(self, x):
        return np.where(np.asarray(x, dtype=float) >= self.v, 1.0, 0.0)


@dataclass(frozen=True)
class _LawSampler:
    law: MixingLaw

    def __call__(self, stream, n):
        return self.law.sample(stream, n)


def generic_vmon_sample(g: GenericVMON, stream: RandomStream, n: int) -> np.ndarray:
    if n < 1:
        raise DomainError("sample size must be >= 1")
    v = np.asarray(g.mixing_sampler(stream, n), dtype=float)
    if v.shape != (n,):
        raise ContractError(f"mixing sampler returned shape {v.shape}, expected ({n},)")
    if np.any(~(v > 0)):
        raise ContractError(f"mixing sampler '{g.label}' returned non-positive values")
    return v * sample_normal(stream, n)


# ---------------------------------------------------------------------------
# identity checks


@dataclass(frozen=True)
class MixtureReport:
    x: np.ndarray
    lhs: np.ndarray
    rhs: np.ndarray
    sup_error: float
    tol: float
    passed: bool

    def as_dict(self) -> dict:
        return {"sup_error": self.sup_error, "tol": self.tol, "pass": self.passed,
                "n_points": int(self.x.size)}


def _default_grid():
    return np.round(np.arange(-100, 101) * 0.1, 12)


def mixture_density(q: float, x: float, tol: QuadTolerance | None = None) -> float:
    """∫_0^∞ φ(x/v)/v f_V(v) dv by quadrature."""
    law = MixingLaw(q)
    tol = tol or QuadTolerance(1e-13, 1e-12)
    a = x * x + 1.0 / (q - 1.0)
    peak = math.sqrt(a / (1.0 + 2.0 / (q - 1.0)))  # maximizer of the integrand
    log_norm = -0.5 * math.log(2.0 * math.pi)

    def f(v):
        return np.exp(log_norm - np.log(v) - (0.5 * x * x) / v / v + law.logpdf(v))

    return integrate(f, 0.0, math.inf, tol, mapping="log", points=sorted({peak, law.mode})).value


def verify_mixture(q: float, x_grid=None, tol: float = 1e-8,
                   quad_tol: QuadTolerance | None = None) -> MixtureReport:
    """sup_x |g_q(x) - ∫ normal kernel * f_V| over ``x_grid`` (default [-10, 10] step 0.1)."""
    from .qgaussian import QGaussian

    q = _check_q(q)
    x = np.asarray(_default_grid() if x_grid is None else x_grid, dtype=float)
    lhs = QGaussian(q).density(x)
    rhs = np.array([mixture_density(q, float(xi), quad_tol) for xi in x.ravel()]).reshape(x.shape)
    err = float(np.max(np.abs(lhs - rhs)))
    return MixtureReport(x, np.asarray(lhs), rhs, err, tol, err < tol)


def exp_mixture_check(q: float, x_grid=None, tol: float = 1e-9,
                      quad_tol: QuadTolerance | None = None) -> MixtureReport:
    """Laplace-transform form: C'_q [1+(q-1)x^2]^{-1/(q-1)} vs ∫ exp(-x^2 t) dH(t)."""
    q = _check_q(q)
    x = np.asarray(np.linspace(-5, 5, 101) if x_grid is None else x_grid, dtype=float)
    quad_tol = quad_tol or QuadTolerance(1e-14, 1e-12)
    a = 1.0 / (q - 1.0)
    alpha = (2.0 - q) / (q - 1.0)
    lhs = c_prime_q(q) * np.exp(-a * np.log1p((q - 1.0) * x * x))
    rhs = []
    for xi in x.ravel():
        rate = xi * xi + a

        def f(t, rate=rate):
            return np.exp(-rate * t + alpha * np.log(t))

        mode = alpha / rate if alpha > 0 else 1.0
        rhs.append(integrate(f, 0.0, math.inf, quad_tol, mapping="log", points=[mode]).value)
    rhs = np.array(rhs).reshape(x.shape)
    err = float(np.max(np.abs(lhs - rhs)))
    return MixtureReport(x, lhs, rhs, err, tol, err < tol)
