"""Black–Scholes prices and their mixture over a random volatility multiplier.

Given V = v the terminal price is lognormal with volatility v * base_vol.  The
mixed price is E[BS(v * base_vol)] over the law of V.  The mixture is over
volatility rather than variance because V multiplies Z in the return.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .laws import PointMass
from .numerics import DomainError, QuadTolerance, RandomStream, integrate, normal_cdf, sample_normal
from .vmon import GenericVMON, MixingLaw

__all__ = ["OptionSpec", "PricingResult", "McResult", "bs_price", "mixed_price", "mc_mixed_price"]

TRUNCATION = 1e-8


@dataclass(frozen=True)
class OptionSpec:
    spot: float
    strike: float
    rate: float
    maturity: float
    kind: str = "call"
    base_vol: float = 0.2

    def __post_init__(self):
        if not (self.spot > 0 and self.strike > 0 and self.maturity > 0 and self.base_vol > 0):
            raise DomainError("spot, strike, maturity and base_vol must be > 0")
        if self.kind not in ("call", "put"):
            raise DomainError(f"kind must be 'call' or 'put', got {self.kind!r}")
        if not math.isfinite(self.rate):
            raise DomainError("rate must be finite")

    @property
    def discounted_strike(self) -> float:
        return self.strike * math.exp(-self.rate * self.maturity)

    def intrinsic(self) -> float:
        """Zero-volatility price: discounted intrinsic value of the forward."""
        d = self.spot - self.discounted_strike
        return max(d, 0.0) if self.kind == "call" else max(-d, 0.0)

    def upper_bound(self) -> float:
        return self.spot if self.kind == "call" else self.discounted_strike


@dataclass(frozen=True)
class PricingResult:
    price: float
    quadrature_error: float
    v_truncation: tuple[float, float]

    def as_dict(self) -> dict:
        return {"price": self.price, "error": self.quadrature_error,
                "v_truncation": list(self.v_truncation)}


def _bs(spec: OptionSpec, vol):
    vol = np.asarray(vol, dtype=float)
    s, k = spec.spot, spec.discounted_strike
    sd = vol * math.sqrt(spec.maturity)
    d1 = np.log(s / k) / sd + 0.5 * sd
    d2 = d1 - sd
    if spec.kind == "call":
        return s * normal_cdf(d1) - k * normal_cdf(d2)
    return k * normal_cdf(-d2) - s * normal_cdf(-d1)


def bs_price(spec: OptionSpec, vol) -> float | np.ndarray:
    """Closed-form Black–Scholes price at volatility ``vol`` (no dividends)."""
    v = np.asarray(vol, dtype=float)
    if np.any(~(v > 0)):
        raise DomainError("volatility must be > 0")
    out = np.asarray(_bs(spec, v), dtype=float)
    return float(out) if out.ndim == 0 else out


def _ppf_from_cdf(cdf, p: float) -> float:
    def g(v):
        return float(cdf(v)) - p

    lo, hi = 1.0, 1.0
    while g(lo) > 0:
        lo *= 0.5
        if lo < 1e-300:
            raise DomainError("mixing cdf does not approach 0 at v -> 0")
    while g(hi) < 0:
        hi *= 2.0
        if hi > 1e300:
            raise DomainError("mixing cdf does not approach 1")
    return brentq(g, lo, hi, xtol=1e-15, rtol=1e-14)


def mixed_price(spec: OptionSpec, mixing, tol: QuadTolerance | None = None) -> PricingResult:
    """E[BS(V * base_vol)] over the mixing law.

    The body [v_lo, v_hi] between the 1e-8 and 1 - 1e-8 quantiles is
    integrated by quadrature.  BS is increasing in volatility.  So each
    excluded tail of mass 1e-8 is bracketed by monotone bounds: [intrinsic,
    BS(v_lo)] on the left and [BS(v_hi), upper bound] on the right.  Each
    bracket's midpoint is added to the price and its half-width to the
    error.  The same decomposition applies to calls and puts.  Put-call parity
    then holds for the mixed prices up to the reported errors.
    """
    if isinstance(mixing, PointMass) or (isinstance(mixing, GenericVMON) and mixing.point_mass is not None):
        v = mixing.value if isinstance(mixing, PointMass) else mixing.point_mass
        return PricingResult(bs_price(spec, v * spec.base_vol), 0.0, (v, v))
    tol = tol or QuadTolerance(1e-12, 1e-11)
    if isinstance(mixing, MixingLaw):
        v_lo, v_hi = mixing.ppf(TRUNCATION), mixing.ppf(1.0 - TRUNCATION)
        pts = [mixing.mode]

        def f(s):  # v = e^s, dv = v ds
            v = np.exp(s)
            return _bs(spec, v * spec.base_vol) * mixing.pdf(v) * v

        res = integrate(f, math.log(v_lo), math.log(v_hi), tol,
                        points=[math.log(p) for p in pts if v_lo < p < v_hi])
        body, body_err = res.value, res.error
        p_lo = p_hi = TRUNCATION
    elif isinstance(mixing, GenericVMON) and mixing.mixing_cdf is not None:
        cdf = mixing.mixing_cdf
        v_lo, v_hi = _ppf_from_cdf(cdf, TRUNCATION), _ppf_from_cdf(cdf, 1.0 - TRUNCATION)
        # Stieltjes form: ∫ BS dF = BS(v_hi) F(v_hi) - BS(v_lo) F(v_lo) - ∫ F dBS,
        # with dBS/dv = vega * base_vol (vega = S sqrt(T) phi(d1)).
        s, k, mat = spec.spot, spec.discounted_strike, spec.maturity

        def vega_weighted(t):  # v = e^t
            v = np.exp(t)
            sd = v * spec.base_vol * math.sqrt(mat)
            d1 = np.log(s / k) / sd + 0.5 * sd
            vega = s * math.sqrt(mat) * np.exp(-0.5 * d1 * d1) / math.sqrt(2.0 * math.pi)
            return np.asarray(cdf(v), dtype=float) * vega * spec.base_vol * v

        res = integrate(vega_weighted, math.log(v_lo), math.log(v_hi), tol)
        f_lo, f_hi = float(cdf(v_lo)), float(cdf(v_hi))
        bs_lo, bs_hi = bs_price(spec, v_lo * spec.base_vol), bs_price(spec, v_hi * spec.base_vol)
        body = bs_hi * f_hi - bs_lo * f_lo - res.value
        body_err = res.error
        p_lo, p_hi = f_lo, 1.0 - f_hi
    else:
        raise DomainError(f"unsupported mixing type {type(mixing).__name__}")
    bs_lo = bs_price(spec, v_lo * spec.base_vol)
    bs_hi = bs_price(spec, v_hi * spec.base_vol)
    lo_mid, lo_half = 0.5 * (spec.intrinsic() + bs_lo), 0.5 * (bs_lo - spec.intrinsic())
    hi_mid, hi_half = 0.5 * (bs_hi + spec.upper_bound()), 0.5 * (spec.upper_bound() - bs_hi)
    price = body + p_lo * lo_mid + p_hi * hi_mid
    err = body_err + p_lo * lo_half + p_hi * hi_half
    return PricingResult(float(price), float(err), (float(v_lo), float(v_hi)))


@dataclass(frozen=True)
class McResult:
    price: float
    std_error: float
    paths: int


def mc_mixed_price(spec: OptionSpec, mixing, stream: RandomStream, paths: int = 1_000_000) -> McResult:
    """Monte Carlo oracle: draw V, then a conditionally lognormal terminal price."""
    if paths < 2:
        raise DomainError("need at least 2 paths")
    if isinstance(mixing, MixingLaw):
        v = mixing.sample(stream, paths)
    elif isinstance(mixing, PointMass):
        v = np.full(paths, mixing.value)
    elif isinstance(mixing, GenericVMON):
        v = np.asarray(mixing.mixing_sampler(stream, paths), dtype=float)
    else:
        raise DomainError(f"unsupported mixing type {type(mixing).__name__}")
    sig = v * spec.base_vol * math.sqrt(spec.maturity)
    z = sample_normal(stream, paths)
    st = spec.spot * np.exp(spec.rate * spec.maturity - 0.5 * sig * sig + sig * z)
    pay = np.maximum(st - spec.strike, 0.0) if spec.kind == "call" else np.maximum(spec.strike - st, 0.0)
    disc = math.exp(-spec.rate * spec.maturity) * pay
    return McResult(float(disc.mean()), float(disc.std(ddof=1) / math.sqrt(paths)), paths)
