"""Superstatistical Langevin dynamics and the generalized Boltzmann factor.

Each path draws an inverse temperature beta once, sets sigma = sqrt(gamma/beta)
and follows dv = -gamma v dt + sigma dB.  Given beta, the stationary law is
N(0, 1/(2 beta)).  With beta ~ Gamma(dof/2, scale q-1) one has
1/(2 beta) =^d V^2 for the q-Gaussian mixing law, so the pooled stationary
velocities follow g_q.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any

import numpy as np

from ..laws import DiscreteMeasure, Gamma, PointMass
from ..numerics import DomainError, QuadTolerance, RandomStream, integrate, sample_normal
from ..vmon import MixingLaw

__all__ = [
    "LangevinConfig",
    "LangevinResult",
    "langevin_simulate",
    "superstat_factor",
    "superstat_beta_law",
    "superstat_closed_form",
]

_PATH_BLOCK = 8192


@dataclass(frozen=True)
class LangevinConfig:
    gamma: float
    beta_law: Any
    dt: float
    burn_in: int
    n_paths: int
    n_samples: int = 1
    thin: int = 1
    v0: float = 0.0
    scheme: str = "exact"

    def __post_init__(self):
        if not (self.gamma > 0 and self.dt > 0):
            raise DomainError("gamma and dt must be > 0")
        if self.burn_in < 0 or self.n_paths < 1 or self.n_samples < 1 or self.thin < 1:
            raise DomainError("burn_in >= 0, n_paths >= 1, n_samples >= 1, thin >= 1 required")
        if self.scheme not in ("exact", "euler"):
            raise DomainError(f"scheme must be 'exact' or 'euler', got {self.scheme!r}")


@dataclass(frozen=True)
class LangevinResult:
    samples: np.ndarray  # (n_paths, n_samples)
    beta: np.ndarray
    config: LangevinConfig

    def pooled(self) -> np.ndarray:
        return self.samples.ravel()


def _step_coeffs(cfg: LangevinConfig, sigma: np.ndarray):
    g, dt = cfg.gamma, cfg.dt
    if cfg.scheme == "exact":
        decay = math.exp(-g * dt)
        noise = sigma * math.sqrt(-math.expm1(-2.0 * g * dt) / (2.0 * g))
    else:
        decay = 1.0 - g * dt
        noise = sigma * math.sqrt(dt)
    return decay, noise


def langevin_simulate(cfg: LangevinConfig, stream: RandomStream) -> LangevinResult:
    """Run ``burn_in`` steps, then record ``n_samples`` values ``thin`` steps apart.

    Paths are simulated in blocks of 8192, and block b uses ``stream.spawn(b)``.
    """
    samples, betas = [], []
    for b, start in enumerate(range(0, cfg.n_paths, _PATH_BLOCK)):
        s = stream.spawn(b)
        size = min(_PATH_BLOCK, cfg.n_paths - start)
        beta = np.asarray(cfg.beta_law.sample(s, size), dtype=float).reshape(size)
        if np.any(~(beta > 0)):
            raise DomainError("beta law produced non-positive values")
        decay, noise = _step_coeffs(cfg, np.sqrt(cfg.gamma / beta))
        v = np.full(size, float(cfg.v0))
        for _ in range(cfg.burn_in):
            v = v * decay + noise * sample_normal(s, size)
        out = np.empty((size, cfg.n_samples))
        for k in range(cfg.n_samples):
            if k:
                for _ in range(cfg.thin):
                    v = v * decay + noise * sample_normal(s, size)
            out[:, k] = v
        samples.append(out)
        betas.append(beta)
    return LangevinResult(np.concatenate(samples), np.concatenate(betas), cfg)


def superstat_beta_law(q: float) -> Gamma:
    """beta-law whose superstatistics reproduce g_q: Gamma(dof/2, scale q-1)."""
    law = MixingLaw(q)
    return Gamma(0.5 * law.dof, q - 1.0)


def superstat_closed_form(q: float, energy) -> np.ndarray:
    """[1 + (q-1) E]^{-(3-q)/(2(q-1))}."""
    e = np.asarray(energy, dtype=float)
    return np.exp(-(3.0 - q) / (2.0 * (q - 1.0)) * np.log1p((q - 1.0) * e))


def superstat_factor(energy: float, beta_law, tol: QuadTolerance | None = None) -> float:
    """B(E) = ∫_0^∞ k(beta) exp(-beta E) d beta."""
    e = float(energy)
    if not e >= 0:
        raise DomainError(f"energy must be >= 0, got {energy}")
    if isinstance(beta_law, PointMass):
        return math.exp(-beta_law.value * e)
    if isinstance(beta_law, DiscreteMeasure):
        return math.fsum(w * math.exp(-b * e) for b, w in zip(beta_law.points, beta_law.weights))
    tol = tol or QuadTolerance(1e-14, 1e-12)
    if isinstance(beta_law, Gamma):
        shape, scale = beta_law.shape, beta_law.scale
        peak = max(shape - 1.0, 0.0) * scale / (1.0 + scale * e) or scale
        return integrate(lambda b: np.exp(beta_law.logpdf(b) - b * e), 0.0, math.inf, tol,
                         mapping="log", points=[peak]).value
    if not hasattr(beta_law, "pdf"):
        raise DomainError(f"{type(beta_law).__name__} has no density")
    return integrate(lambda b: beta_law.pdf(b) * np.exp(-b * e), 0.0, math.inf, tol, mapping="log").value
