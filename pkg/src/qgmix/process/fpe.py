"""Explicit conservative solver for P_t = (1/2) (P^{2-q})_xx, 1 <= q < 2.

The unknown lives on nodes x_0 < ... < x_{N-1}.  Each node owns a trapezoid
cell of width w_i, and mass is sum_i w_i P_i.  With u = P^{2-q} the update is

    P_i <- P_i + dt/w_i * (F_{i-1/2} - F_{i+1/2}),   F_{i+1/2} = -(u_{i+1} - u_i) / (2 h_{i+1/2}),

with zero flux through both ends, so the discrete mass is conserved exactly.
Writing u_{i+1} - u_i = a_{i+1/2} (P_{i+1} - P_i) with secant slopes a >= 0,
the step is monotone (hence positivity preserving) while
dt * (a_+/(2h_+) + a_-/(2h_-)) / w_i <= 1.  That bound is enforced with a
safety factor.

For q > 1 the diffusivity grows like P^{1-q} where P is small, so the
solutions have power-law tails.  ``GridSpec`` therefore offers a sinh-stretched
grid x = c sinh(xi) with uniform xi.  On that grid the stable step stays
bounded in the tails.  q = 1 gives the linear heat equation with u = P.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..numerics import DomainError
from ..qgaussian import QGaussian, c_q

__all__ = [
    "CflError",
    "GridSpec",
    "FpeGrid",
    "FpeTrajectory",
    "fpe_solve",
    "barenblatt_time",
    "barenblatt_scale",
    "barenblatt_profile",
    "profile_quantile",
    "iqr_scale",
    "shape_error",
    "width_exponent",
    "DENSITY_FLOOR",
    "CFL_SAFETY",
]

DENSITY_FLOOR = 1e-12
CFL_SAFETY = 0.4


class CflError(RuntimeError):
    """The stable time step is too small to reach the end time within the step budget."""


@dataclass(frozen=True)
class GridSpec:
    """``nodes`` points on [-half_width, half_width].

    With ``core_width=None`` the nodes are uniform.  Otherwise they are
    x = core_width * sinh(xi) for uniform xi.
    """

    nodes: int
    half_width: float
    core_width: float | None = None

    def __post_init__(self):
        if self.nodes < 5:
            raise DomainError("grid needs at least 5 nodes")
        if not self.half_width > 0:
            raise DomainError("half_width must be > 0")
        if self.core_width is not None and not self.core_width > 0:
            raise DomainError("core_width must be > 0")

    def build(self) -> np.ndarray:
        if self.core_width is None:
            return np.linspace(-self.half_width, self.half_width, self.nodes)
        xi_max = math.asinh(self.half_width / self.core_width)
        return self.core_width * np.sinh(np.linspace(-xi_max, xi_max, self.nodes))


def _cell_widths(x: np.ndarray) -> np.ndarray:
    h = np.diff(x)
    w = np.empty_like(x)
    w[0], w[-1] = 0.5 * h[0], 0.5 * h[-1]
    w[1:-1] = 0.5 * (h[:-1] + h[1:])
    return w


@dataclass(frozen=True)
class FpeGrid:
    """One snapshot: nodes, last step size, profile and absolute time."""

    x_nodes: np.ndarray
    dt: float
    profile: np.ndarray
    t: float
    q: float

    def mass(self) -> float:
        return math.fsum(_cell_widths(self.x_nodes) * self.profile)


@dataclass(frozen=True)
class FpeTrajectory:
    snapshots: tuple[FpeGrid, ...]
    steps: int
    floor_mass: float  # mass injected by the density floor
    max_mass_error: float
    boundary_mass: float  # largest mass above the floor seen beyond half the domain
    config: dict = field(default_factory=dict)


def _check_q(q: float) -> float:
    q = float(q)
    if not 1.0 <= q < 2.0:
        raise DomainError(f"the solver handles 1 <= q < 2 (u = P^(2-q) needs a positive exponent), got {q}")
    return q


def fpe_solve(initial, q: float, t_end: float, grid: GridSpec, *, t0: float = 0.0,
              output_times=None, eps: float = DENSITY_FLOOR, safety: float = CFL_SAFETY,
              max_steps: int = 5_000_000, mass_tol: float = 1e-3) -> FpeTrajectory:
    """Evolve ``initial`` from absolute time t0 to t_end.

    ``initial`` is a callable density or an array of node values.  Its
    trapezoid mass must be within ``mass_tol`` of 1.  It is then floored at
    ``eps`` and rescaled to unit discrete mass, so conservation is measured
    against exactly 1.  Snapshots are stored at t0, at each entry of
    ``output_times``, and at t_end.
    """
    q = _check_q(q)
    if not t_end > t0:
        raise DomainError("t_end must exceed the start time")
    if not 0 < safety <= 1:
        raise DomainError("CFL safety must be in (0, 1]")
    x = grid.build()
    h = np.diff(x)
    w = _cell_widths(x)
    p = np.asarray(initial(x) if callable(initial) else initial, dtype=float).copy()
    if p.shape != x.shape:
        raise DomainError(f"initial profile has shape {p.shape}, grid has {x.shape}")
    if np.any(~np.isfinite(p)) or np.any(p < 0):
        raise DomainError("initial profile must be finite and nonnegative")
    m0 = math.fsum(w * p)
    if abs(m0 - 1.0) > mass_tol:
        raise DomainError(f"initial profile has mass {m0!r}, expected 1")
    p = np.maximum(p, eps)
    p /= math.fsum(w * p)

    m = 2.0 - q
    linear = q == 1.0
    outs = sorted({float(s) for s in (output_times or ()) if t0 < s < t_end} | {float(t_end)})
    far = np.abs(x) > 0.5 * grid.half_width

    snaps = [FpeGrid(x.copy(), 0.0, p.copy(), t0, q)]
    t, steps, floor_mass, max_err, bmass = t0, 0, 0.0, abs(math.fsum(w * p) - 1.0), 0.0
    dt = 0.0
    for target in outs:
        while t < target:
            if linear:
                u = p
                a = np.ones_like(h)
            else:
                u = p ** m
                dp = np.diff(p)
                du = np.diff(u)
                with np.errstate(divide="ignore", invalid="ignore"):
                    sec = du / dp
                # equal neighbours: use the derivative m P^{m-1}
                pm = 0.5 * (p[1:] + p[:-1])
                a = np.where(np.abs(dp) > 1e-14 * pm, sec, m * pm ** (m - 1.0))
            rate = np.zeros_like(p)
            rate[:-1] += a / (2.0 * h)
            rate[1:] += a / (2.0 * h)
            dt_stable = safety * float(np.min(w / rate))
            if (target - t) / dt_stable + steps > max_steps:
                raise CflError(
                    f"CFL step {dt_stable:.3e} needs more than max_steps={max_steps} steps to reach "
                    f"t={target}; raise the density floor, coarsen the tails or raise max_steps")
            dt = min(dt_stable, target - t)
            flux = -(np.diff(u)) / (2.0 * h)
            div = np.zeros_like(p)
            div[:-1] -= flux
            div[1:] += flux
            p = p + dt * div / w
            low = p < eps
            if np.any(low):
                floor_mass += math.fsum(w[low] * (eps - p[low]))
                p[low] = eps
            t = target if dt == target - t else t + dt
            steps += 1
        mass = math.fsum(w * p)
        max_err = max(max_err, abs(mass - 1.0 - floor_mass))
        bmass = max(bmass, math.fsum(w[far] * (p[far] - eps)))
        snaps.append(FpeGrid(x.copy(), dt, p.copy(), t, q))
    cfg = {"q": q, "t0": t0, "t_end": t_end, "nodes": grid.nodes, "half_width": grid.half_width,
           "core_width": grid.core_width, "eps": eps, "safety": safety}
    return FpeTrajectory(tuple(snaps), steps, floor_mass, max_err, bmass, cfg)


# ---------------------------------------------------------------------------
# self-similar (Barenblatt-type) solution and shape diagnostics
#
# P(x, t) = g_q(x / s(t)) / s(t) solves the equation when
# s(t)^{3-q} = (3-q)(2-q) C_q^{1-q} t; for q = 1 this is s = sqrt(2 t).


def barenblatt_scale(q: float, t: float) -> float:
    q = _check_q(q)
    return ((3.0 - q) * (2.0 - q) * c_q(q) ** (1.0 - q) * t) ** (1.0 / (3.0 - q))


def barenblatt_time(q: float, scale: float = 1.0) -> float:
    """Time at which the self-similar solution has scale ``scale``."""
    q = _check_q(q)
    return scale ** (3.0 - q) / ((3.0 - q) * (2.0 - q) * c_q(q) ** (1.0 - q))


def barenblatt_profile(q: float, t: float, x):
    s = barenblatt_scale(q, t)
    return QGaussian(q).density(np.asarray(x, dtype=float) / s) / s


def _cumulative(snap: FpeGrid) -> np.ndarray:
    x, p = snap.x_nodes, snap.profile
    c = np.concatenate([[0.0], np.cumsum(0.5 * (p[1:] + p[:-1]) * np.diff(x))])
    return c / c[-1]


def profile_quantile(snap: FpeGrid, prob) -> np.ndarray:
    c = _cumulative(snap)
    return np.interp(prob, c, snap.x_nodes)


def iqr_scale(snap: FpeGrid) -> float:
    """Scale s such that the profile's interquartile range equals that of g_q(x/s)/s."""
    lo, hi = profile_quantile(snap, [0.25, 0.75])
    ref = QGaussian(snap.q).quantile(0.75)
    return float((hi - lo) / (2.0 * ref))


def shape_error(snap: FpeGrid, central: float = 0.95) -> tuple[float, float]:
    """(L-inf error of s P(s y) vs g_q(y) on the central mass region, fitted s)."""
    s = iqr_scale(snap)
    g = QGaussian(snap.q)
    ymax = g.quantile(0.5 + 0.5 * central)
    y = np.linspace(-ymax, ymax, 801)
    rescaled = s * np.interp(s * y, snap.x_nodes, snap.profile)
    return float(np.max(np.abs(rescaled - g.density(y)))), s


def width_exponent(traj: FpeTrajectory) -> float:
    """Least-squares slope of log IQR against log t over the stored snapshots."""
    t = np.array([s.t for s in traj.snapshots])
    iqr = np.array([np.diff(profile_quantile(s, [0.25, 0.75]))[0] for s in traj.snapshots])
    return float(np.polyfit(np.log(t), np.log(iqr), 1)[0])
