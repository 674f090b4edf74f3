"""q-Brownian motion realized as B^q_t = V * B_t with one latent V per path.

Kernel convention: for 1 < q < 3 the latent is the q-Gaussian mixing law, so
B^q_1 has density g_q exactly.  At q = 1 the latent is the constant 1/sqrt(2),
giving variance t/2 per unit time.  The q = 1 marginal at t = 1 is therefore
g_1(x) = exp(-x^2)/sqrt(pi), which keeps the family continuous in q.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..numerics import (
    KS_COEFF_1PCT,
    DomainError,
    KsReport,
    QuadTolerance,
    RandomStream,
    integrate,
    ks_statistic,
    ks_two_sample,
    sample_normal,
)
from ..qgaussian import QGaussian
from ..vmon import MixingLaw, mixture_density

__all__ = [
    "QbmPath",
    "QbmEnsemble",
    "sample_qbm_path",
    "sample_qbm_ensemble",
    "qbm_transition_density",
    "transition_density_closed_form",
    "chapman_kolmogorov_gap",
    "increment_stationarity",
    "increment_autocorrelation",
    "marginal_ks",
]

Q1_SCALE = 1.0 / math.sqrt(2.0)
_PATH_BLOCK = 4096


def _check_q(q: float) -> float:
    q = float(q)
    if not 1.0 <= q < 3.0:
        raise DomainError(f"q-Brownian motion needs 1 <= q < 3, got {q}")
    return q


def _check_times(times) -> np.ndarray:
    t = np.asarray(times, dtype=float)
    if t.ndim != 1 or t.size < 2:
        raise DomainError("times must be a 1-d array with at least two entries")
    if t[0] != 0.0:
        raise DomainError("times must start at 0")
    if np.any(np.diff(t) <= 0):
        raise DomainError("times must be strictly increasing")
    return t


def _latent(q: float, stream: RandomStream, size: int) -> np.ndarray:
    if q == 1.0:
        return np.full(size, Q1_SCALE)
    return np.asarray(MixingLaw(q).sample(stream, size), dtype=float)


@dataclass(frozen=True)
class QbmPath:
    q: float
    times: np.ndarray
    values: np.ndarray
    latent_v: float


@dataclass(frozen=True)
class QbmEnsemble:
    q: float
    times: np.ndarray
    values: np.ndarray  # (paths, len(times))
    latent_v: np.ndarray

    def path(self, i: int) -> QbmPath:
        return QbmPath(self.q, self.times, self.values[i], float(self.latent_v[i]))


def _brownian(stream: RandomStream, times: np.ndarray, size: int) -> np.ndarray:
    dt = np.diff(times)
    inc = sample_normal(stream, (size, dt.size)) * np.sqrt(dt)
    out = np.zeros((size, times.size))
    np.cumsum(inc, axis=1, out=out[:, 1:])
    return out


def sample_qbm_path(q: float, times, stream: RandomStream) -> QbmPath:
    q = _check_q(q)
    t = _check_times(times)
    v = float(_latent(q, stream, 1)[0])
    return QbmPath(q, t, v * _brownian(stream, t, 1)[0], v)


def sample_qbm_ensemble(q: float, times, stream: RandomStream, n_paths: int) -> QbmEnsemble:
    """``n_paths`` independent paths; block b of 4096 paths uses ``stream.spawn(b)``."""
    q = _check_q(q)
    t = _check_times(times)
    if n_paths < 1:
        raise DomainError("n_paths must be >= 1")
    vs, paths = [], []
    for b, start in enumerate(range(0, n_paths, _PATH_BLOCK)):
        s = stream.spawn(b)
        size = min(_PATH_BLOCK, n_paths - start)
        v = _latent(q, s, size)
        vs.append(v)
        paths.append(v[:, None] * _brownian(s, t, size))
    return QbmEnsemble(q, t, np.concatenate(paths), np.concatenate(vs))


# ---------------------------------------------------------------------------
# transition densities


def qbm_transition_density(q: float, t: float, x: float, y: float,
                           tol: QuadTolerance | None = None) -> float:
    """∫ N(x - y; 0, v^2 t) f_V(v) dv by quadrature over the mixing law."""
    if not t > 0:
        raise DomainError(f"duration t must be > 0, got {t}")
    q = float(q)
    if not 1.0 < q < 3.0:
        raise DomainError("transition density quadrature needs 1 < q < 3")
    st = math.sqrt(t)
    return mixture_density(q, (x - y) / st, tol) / st


def transition_density_closed_form(q: float, t: float, x, y=0.0):
    """g_q((x - y)/sqrt t)/sqrt t, the scaling form of the same density."""
    if not t > 0:
        raise DomainError(f"duration t must be > 0, got {t}")
    st = math.sqrt(t)
    return QGaussian(_check_q(q)).density((np.asarray(x, dtype=float) - y) / st) / st


def chapman_kolmogorov_gap(q: float, s: float = 1.0, t: float = 1.0, x: float = 0.0,
                           y: float = 0.0) -> tuple[float, float, float]:
    """(composed, direct, composed - direct) for the mixture transition kernel.

    composed = ∫ P(s, x|z) P(t, z|y) dz, direct = P(s + t, x|y).  A Markov
    kernel would give zero; the mixture is Markov only conditionally on V.
    """
    _check_q(q)

    def f(z):
        return (transition_density_closed_form(q, s, x, z)
                * transition_density_closed_form(q, t, z, y))

    pts = sorted({x, y})
    composed = integrate(f, -math.inf, math.inf, QuadTolerance(1e-13, 1e-12), points=pts).value
    direct = float(transition_density_closed_form(q, s + t, x, y))
    return composed, direct, composed - direct


# ---------------------------------------------------------------------------
# ensemble diagnostics


def increment_stationarity(ens: QbmEnsemble, lag_index: int, start_a: int, start_b: int) -> KsReport:
    """Two-sample KS between increments over [t_a, t_a + lag] and [t_b, t_b + lag] (index lags)."""
    v = ens.values
    da = v[:, start_a + lag_index] - v[:, start_a]
    db = v[:, start_b + lag_index] - v[:, start_b]
    ta = ens.times[start_a + lag_index] - ens.times[start_a]
    tb = ens.times[start_b + lag_index] - ens.times[start_b]
    if not math.isclose(ta, tb, rel_tol=1e-12):
        raise DomainError("increments must span equal durations")
    return ks_two_sample(da, db, target_name="increment stationarity")


def increment_autocorrelation(ens: QbmEnsemble) -> tuple[float, float]:
    """Pooled lag-1 autocorrelation of increments scaled by latent_v*sqrt(dt), with its SE."""
    dt = np.diff(ens.times)
    z = np.diff(ens.values, axis=1) / (ens.latent_v[:, None] * np.sqrt(dt)[None, :])
    a, b = z[:, :-1].ravel(), z[:, 1:].ravel()
    r = float(np.mean(a * b) / math.sqrt(np.mean(a * a) * np.mean(b * b)))
    return r, 1.0 / math.sqrt(a.size)


def marginal_ks(ens: QbmEnsemble, time_index: int, threshold: float | None = None) -> KsReport:
    """KS of B^q_t / sqrt(t) against g_q."""
    t = ens.times[time_index]
    x = ens.values[:, time_index] / math.sqrt(t)
    thr = KS_COEFF_1PCT / math.sqrt(x.size) if threshold is None else threshold
    return ks_statistic(x, QGaussian(ens.q).cdf, threshold=thr, target_name=f"g_q, q={ens.q}")
