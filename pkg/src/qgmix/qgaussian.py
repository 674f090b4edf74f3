"""The q-Gaussian family g_q(x) = C_q [1 - (1-q) x^2]^{1/(1-q)}, q < 3.

Parameterization follows the density above literally: at q = 1 it is
exp(-x^2)/sqrt(pi), a normal law with variance 1/2.  No unit-variance
rescaling is applied anywhere.  For 1 < q < 3 the law is exactly V*Z with V
drawn from :class:`qgmix.vmon.MixingLaw` and Z standard normal.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq
from scipy.special import erfc, erfinv

from .numerics import (
    DomainError,
    QuadTolerance,
    RandomStream,
    integrate,
    log_gamma_ratio,
    sample_normal,
    sample_uniform,
)

__all__ = ["QGaussian", "CmReport", "c_q", "moment_is_finite", "cm_chain"]

_LOG_SQRT_PI = 0.5 * math.log(math.pi)


def c_q(q: float) -> float:
    """Normalizing constant C_q (three-branch closed form)."""
    q = float(q)
    if not q < 3:
        raise DomainError(f"q-Gaussian is not normalizable for q >= 3 (got q={q})")
    if q == 1.0:
        return 1.0 / math.sqrt(math.pi)
    if q < 1:
        a = 1.0 / (1.0 - q)
        # (3 - q) / (2(1 - q)) = a + 1/2
        log_inv = (math.log(2.0) + _LOG_SQRT_PI + log_gamma_ratio(a, 0.5)
                   - math.log(3.0 - q) - 0.5 * math.log(1.0 - q))
    else:
        # (3 - q) / (2(q - 1)) = a - 1/2 with a = 1/(q - 1)
        a = 1.0 / (q - 1.0)
        log_inv = _LOG_SQRT_PI - log_gamma_ratio(a, -0.5) - 0.5 * math.log(q - 1.0)
    return math.exp(-log_inv)


def moment_is_finite(q: float, k: int) -> bool:
    """E|X|^k < inf, decided by the tail exponent 2/(q-1) (finite iff 2/(q-1) > k+1)."""
    if q <= 1:
        return True
    return 2.0 / (q - 1.0) > k + 1


def cm_chain(q: float, max_order: int) -> tuple[float, ...]:
    """Coefficients c_n with (-1)^n h^(n)(x) = C_q c_n [1+(q-1)x]^{-1/(q-1)-n}, h(x) = g_q(sqrt x).

    c_n = prod_{j<n} (1 + j(q-1)); every factor is positive for q >= 1, while for
    q < 1 the chain hits zero or changes sign once j >= 1/(1-q).
    """
    out = [1.0]
    for j in range(max_order):
        out.append(out[-1] * (1.0 + j * (q - 1.0)))
    return tuple(out)


@dataclass(frozen=True)
class CmReport:
    order_checked: int
    grid: tuple[float, ...]
    is_cm_consistent: bool
    first_violation: tuple[int, float, float] | None
    analytic_chain: tuple[float, ...]
    analytic_cm: bool


@dataclass(frozen=True)
class QGaussian:
    q: float
    c_q: float = field(init=False)
    support: tuple[float, float] = field(init=False)
    _cache: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        q = float(self.q)
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "c_q", c_q(q))
        if q < 1:
            b = 1.0 / math.sqrt(1.0 - q)
            object.__setattr__(self, "support", (-b, b))
        else:
            object.__setattr__(self, "support", (-math.inf, math.inf))
        object.__setattr__(self, "_cache", {"lock": threading.Lock()})

    def __reduce__(self):
        return (QGaussian, (self.q,))

    # -- density ----------------------------------------------------------

    def log_density(self, x):
        x = np.asarray(x, dtype=float)
        q = self.q
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            x2 = x * x
            if q == 1.0:
                out = math.log(self.c_q) - x2
            elif q > 1:
                out = math.log(self.c_q) - np.log1p((q - 1.0) * x2) / (q - 1.0)
            else:
                base = 1.0 - (1.0 - q) * x2
                out = np.where(base > 0, math.log(self.c_q) + np.log(np.where(base > 0, base, 1.0)) / (1.0 - q),
                               -np.inf)
        return out if out.ndim else float(out)

    def density(self, x):
        out = np.exp(self.log_density(x))
        return out if np.ndim(out) else float(out)

    # -- cdf / quantile -----------------------------------------------------

    def _table(self):
        c = self._cache
        if "table" not in c:
            with c["lock"]:
                if "table" not in c:
                    c["table"] = _CdfTable(self)
        return c["table"]

    def cdf(self, x):
        """P(X <= x).  Closed forms at q = 1, 2; otherwise a quadrature table."""
        x = np.asarray(x, dtype=float)
        q = self.q
        if q == 1.0:
            out = np.where(x < 0, 0.5 * erfc(-x), 1.0 - 0.5 * erfc(x))
        elif q == 2.0:
            out = 0.5 + np.arctan(x) / math.pi
        else:
            upper = self._table().upper_tail(np.abs(x))  # P(X > |x|)
            out = np.where(x < 0, upper, 1.0 - upper)
        return out if out.ndim else float(out)

    def quantile(self, p):
        p_arr = np.asarray(p, dtype=float)
        if np.any(~((p_arr > 0) & (p_arr < 1))):
            raise DomainError("quantile needs 0 < p < 1")
        q = self.q
        if q == 1.0:
            out = erfinv(2.0 * p_arr - 1.0)
        elif q == 2.0:
            out = np.tan(math.pi * (p_arr - 0.5))
        else:
            out = np.array([self._quantile_scalar(pi) for pi in p_arr.ravel()]).reshape(p_arr.shape)
        return out if out.ndim else float(out)

    def _quantile_scalar(self, p: float) -> float:
        if p == 0.5:
            return 0.0
        target = p

        def g(x):
            return self.cdf(x) - target

        if self.q < 1:
            lo, hi = self.support
        else:
            hi = 1.0
            while g(hi) < 0:
                hi *= 4.0
            lo = -1.0
            while g(lo) > 0:
                lo *= 4.0
        return brentq(g, lo, hi, xtol=1e-13, rtol=4 * np.finfo(float).eps, maxiter=500)

    # -- sampling -----------------------------------------------------------

    def sample(self, stream: RandomStream, n: int) -> np.ndarray:
        if n < 1:
            raise DomainError("sample size must be >= 1")
        q = self.q
        if q == 1.0:
            return sample_normal(stream, n) / math.sqrt(2.0)
        if q > 1:
            from .vmon import MixingLaw

            v = MixingLaw(q).sample(stream, n)
            return v * sample_normal(stream, n)
        # rejection from a uniform envelope on [-b, b]; acceptance rate 1/(2 b C_q)
        b = self.support[1]
        out = np.empty(0)
        while out.size < n:
            k = max(64, int(1.2 * (n - out.size) * 2.0 * b * self.c_q) + 16)
            x = b * (2.0 * sample_uniform(stream, k) - 1.0)
            u = sample_uniform(stream, k)
            keep = x[u * self.c_q <= self.density(x)]
            out = np.concatenate([out, keep])
        return out[:n]

    # -- tails and moments ----------------------------------------------------

    def tail_exponent(self) -> float:
        if not 1 < self.q < 3:
            raise DomainError("power-law tails exist only for 1 < q < 3")
        return 2.0 / (self.q - 1.0)

    def moment(self, k: int, tol: QuadTolerance | None = None) -> float:
        """E[X^k] for even k >= 2; ``math.inf`` when the moment diverges."""
        if k < 2 or k % 2:
            raise DomainError("moment order must be an even integer >= 2")
        if not moment_is_finite(self.q, k):
            return math.inf
        tol = tol or QuadTolerance(1e-12, 1e-11)

        if self.q > 1:
            # x = e^s keeps the x^{k - 2/(q-1)} tail representable: near the
            # finiteness boundary it decays too slowly to stay below 1e308 in x.
            q, lc = self.q, math.log(self.c_q)

            def fs(s):
                return np.exp((k + 1) * s + lc - np.logaddexp(0.0, math.log(q - 1.0) + 2.0 * s) / (q - 1.0))

            r = integrate(fs, -math.inf, math.inf, tol)
        else:
            def f(x):
                return x ** k * self.density(x)

            r = integrate(f, 0.0, self.support[1] if self.q < 1 else math.inf, tol)
        return 2.0 * r.value

    # -- complete monotonicity -------------------------------------------------

    def h(self, x):
        """h(x) = g_q(sqrt(x)) on x >= 0 (zero beyond the support for q < 1)."""
        return self.density(np.sqrt(np.asarray(x, dtype=float)))

    def cm_check(self, max_order: int = 8, grid=None, rel_tol: float = 1e-9) -> CmReport:
        """Test complete monotonicity of h(x) = g_q(sqrt x) on a positive grid.

        Numeric route: for each grid point x_i with local spacing d_i, require
        (-1)^n Δ^n_{d_i} h(x_i) >= -rel_tol*h(x_i) for n = 1..max_order, and
        strict positivity at order 0 (a completely monotone function that is
        positive somewhere is positive everywhere).  Analytic route: the sign
        chain from :func:`cm_chain` plus the support being unbounded.
        """
        if max_order < 2:
            raise DomainError("max_order must be >= 2")
        if grid is None:
            grid = np.geomspace(1e-3, 1e2, 121)
        g = np.asarray(grid, dtype=float)
        if g.ndim != 1 or g.size < 2:
            raise DomainError("grid needs at least two points")
        if not np.all(np.isfinite(g)) or np.any(g <= 0):
            raise DomainError("cm_check grid must lie in (0, inf)")
        if np.any(np.diff(g) <= 0):
            raise DomainError("cm_check grid must be strictly increasing")

        d = np.diff(g)
        d = np.append(d, d[-1])
        k = np.arange(max_order + 1)
        H = self.h(g[:, None] + d[:, None] * k[None, :])  # shape (len(g), max_order+1)
        h0 = H[:, 0]
        violation = None
        if np.any(h0 > 0) and np.any(h0 <= 0):
            i = int(np.argmax(h0 <= 0))
            violation = (0, float(g[i]), float(h0[i]))
        if violation is None:
            diff = H.copy()
            for n in range(1, max_order + 1):
                diff = diff[:, 1:] - diff[:, :-1]  # Δ^n at each base point, column 0
                signed = (-1) ** n * diff[:, 0]
                bad = signed < -rel_tol * np.abs(h0)
                if np.any(bad):
                    i = int(np.argmax(bad))
                    violation = (n, float(g[i]), float(signed[i]))
                    break
        chain = cm_chain(self.q, max_order)
        analytic = self.q >= 1 and all(c > 0 for c in chain)
        return CmReport(max_order, tuple(g.tolist()), violation is None, violation, chain, analytic)


class _CdfTable:
    """Cumulative table of ∫_0^x g_q in a smoothing coordinate, Hermite-interpolated.

    For q > 1 the coordinate is s = asinh(x): the integrand g(sinh s) cosh s
    decays like exp(-(2/(q-1) - 1) s), so power tails become exponential.  For
    q < 1 it is θ with x = b sin θ, integrand C_q b cos^{2/(1-q)+1} θ.
    """

    _H = 0.005

    def __init__(self, law: QGaussian):
        self.law = law
        q = law.q
        if q > 1:
            nu = 2.0 / (q - 1.0) - 1.0
            s_max = min(700.0, max(8.0, 30.0 / nu))
            self.x_of = np.sinh
            self.s_of = np.arcsinh

            def rate(s):
                return law.density(np.sinh(s)) * np.cosh(s)
        else:
            b = law.support[1]
            s_max = math.pi / 2
            self.x_of = lambda s: b * np.sin(s)
            self.s_of = lambda x: np.arcsin(np.clip(x / b, 0.0, 1.0))
            p = 1.0 / (1.0 - q)

            def rate(s):
                return law.c_q * b * np.cos(s) ** (2.0 * p + 1.0)

        step = self._H if q > 1 else min(self._H, 0.02 / math.sqrt(2.0 / (1.0 - q) + 1.0))
        n = int(math.ceil(s_max / step))
        s = np.linspace(0.0, s_max, n + 1)
        from .numerics import _NODES, _W_K  # fixed 15-point Kronrod rule per cell

        half = 0.5 * np.diff(s)
        mid = 0.5 * (s[1:] + s[:-1])
        nodes = mid[:, None] + half[:, None] * _NODES[None, :]
        with np.errstate(under="ignore"):
            inc = half * (rate(nodes) @ _W_K)
        self.s = s
        self.F = np.concatenate([[0.0], np.cumsum(inc)])
        self.dF = rate(s)
        self.rate = rate
        self.s_max = s_max
        self.x_max = float(self.x_of(s_max))

    def upper_tail(self, ax: np.ndarray) -> np.ndarray:
        """P(X > ax) for ax >= 0."""
        ax = np.asarray(ax, dtype=float)
        out = np.empty_like(ax)
        flat_in, flat_out = ax.ravel(), out.ravel()
        inside = flat_in <= self.x_max
        if np.any(inside):
            sv = self.s_of(flat_in[inside])
            j = np.clip(np.searchsorted(self.s, sv, side="right") - 1, 0, self.s.size - 2)
            h = self.s[j + 1] - self.s[j]
            t = (sv - self.s[j]) / h
            h00 = (1 + 2 * t) * (1 - t) ** 2
            h10 = t * (1 - t) ** 2
            h01 = t * t * (3 - 2 * t)
            h11 = t * t * (t - 1)
            I = (h00 * self.F[j] + h10 * h * self.dF[j]
                 + h01 * self.F[j + 1] + h11 * h * self.dF[j + 1])
            flat_out[inside] = 0.5 - I
        outside = ~inside
        if np.any(outside):
            if self.law.q < 1:
                flat_out[outside] = 0.0
            else:
                tol = QuadTolerance(1e-13, 1e-10)
                flat_out[outside] = [
                    integrate(self.law.density, float(a), math.inf, tol, mapping="log").value
                    for a in flat_in[outside]
                ]
        return np.clip(out, 0.0, 0.5)
