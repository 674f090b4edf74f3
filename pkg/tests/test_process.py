import math

import numpy as np
import pytest
from scipy import integrate as sci_integrate
from scipy import stats

from qgmix.laws import DiscreteMeasure, Gamma, PointMass
from qgmix.numerics import DomainError, RandomStream, ks_statistic, ks_two_sample
from qgmix.process import (
    CflError,
    GridSpec,
    LangevinConfig,
    barenblatt_profile,
    barenblatt_scale,
    barenblatt_time,
    chapman_kolmogorov_gap,
    fpe_solve,
    increment_autocorrelation,
    increment_stationarity,
    langevin_simulate,
    marginal_ks,
    qbm_transition_density,
    sample_qbm_ensemble,
    sample_qbm_path,
    shape_error,
    superstat_beta_law,
    superstat_closed_form,
    superstat_factor,
    transition_density_closed_form,
    width_exponent,
)
from qgmix.qgaussian import QGaussian, c_q

TIMES = np.linspace(0.0, 2.0, 9)


# ---------------------------------------------------------------------------
# q-Brownian motion


def test_path_structure():
    p = sample_qbm_path(1.5, TIMES, RandomStream(100))
    assert p.values[0] == 0.0 and p.values.shape == TIMES.shape and p.latent_v > 0
    # given V, increments are N(0, V^2 dt)
    ens = sample_qbm_ensemble(1.5, TIMES, RandomStream(101), 20_000)
    z = np.diff(ens.values, axis=1) / (ens.latent_v[:, None] * math.sqrt(0.25))
    assert ks_statistic(z.ravel(), stats.norm.cdf).passed


def test_q1_paths_use_half_variance_kernel():
    ens = sample_qbm_ensemble(1.0, TIMES, RandomStream(102), 100_000)
    assert np.all(ens.latent_v == 1 / math.sqrt(2))
    x = ens.values[:, -1] / math.sqrt(TIMES[-1])
    assert ks_statistic(x, QGaussian(1.0).cdf).passed
    assert ks_statistic(math.sqrt(2) * x, stats.norm.cdf).passed


@pytest.mark.parametrize("q", [1.5, 2.0, 2.5])
def test_marginal_matches_q_gaussian(q):
    ens = sample_qbm_ensemble(q, TIMES, RandomStream(103, int(10 * q)), 100_000)
    for k in (2, 8):
        assert marginal_ks(ens, k).passed


def test_increments_stationary_and_exchangeable():
    ens = sample_qbm_ensemble(1.5, TIMES, RandomStream(104), 100_000)
    assert increment_stationarity(ens, 2, 0, 5).passed
    # two disjoint equal increments, swapped, have the same joint law
    from qgmix.exchangeable import permutation_invariance

    d = np.column_stack([ens.values[:, 2] - ens.values[:, 0], ens.values[:, 8] - ens.values[:, 6]])
    assert permutation_invariance(d).passed


def test_increments_conditionally_independent():
    ens = sample_qbm_ensemble(2.0, TIMES, RandomStream(105), 50_000)
    r, se = increment_autocorrelation(ens)
    assert abs(r) < 3 * se


def test_increments_dependent_without_conditioning():
    # increments share V: squared increments are positively correlated
    ens = sample_qbm_ensemble(1.3, TIMES, RandomStream(106), 200_000)
    a = np.diff(ens.values[:, :2], axis=1).ravel()
    b = np.diff(ens.values[:, 1:3], axis=1).ravel()
    assert np.corrcoef(a * a, b * b)[0, 1] > 0.05


def test_ensemble_determinism_and_path_view():
    a = sample_qbm_ensemble(1.7, TIMES, RandomStream(7), 5000)
    b = sample_qbm_ensemble(1.7, TIMES, RandomStream(7), 5000)
    np.testing.assert_array_equal(a.values, b.values)
    p = a.path(3)
    np.testing.assert_array_equal(p.values, a.values[3])
    assert p.latent_v == a.latent_v[3]


@pytest.mark.parametrize("times", [[0.0, 2.0, 1.0], [0.5, 1.0], [0.0, 1.0, 1.0], [0.0]])
def test_bad_times(times):
    with pytest.raises(DomainError):
        sample_qbm_path(1.5, times, RandomStream(0))


@pytest.mark.parametrize("q", [0.9, 3.0])
def test_bad_q(q):
    with pytest.raises(DomainError):
        sample_qbm_path(q, TIMES, RandomStream(0))


def test_transition_density_cauchy():
    for x in (0.0, 0.7, 5.0):
        assert qbm_transition_density(2.0, 1.0, x, 0.0) == pytest.approx(1 / (math.pi * (1 + x * x)), abs=1e-12)


@pytest.mark.parametrize("q", [1.2, 1.5, 2.5])
def test_transition_density_matches_scaling_form(q):
    for t, x, y in ((1.0, 0.3, 0.0), (2.5, 1.0, -0.4), (0.1, 0.05, 0.0)):
        assert qbm_transition_density(q, t, x, y) == pytest.approx(
            float(transition_density_closed_form(q, t, x, y)), rel=1e-9)


def test_transition_density_symmetry_and_mass():
    q, t, y = 1.6, 0.7, 0.4
    assert qbm_transition_density(q, t, y + 0.3, y) == pytest.approx(qbm_transition_density(q, t, y - 0.3, y),
                                                                      rel=1e-12)
    mass = sci_integrate.quad(lambda x: qbm_transition_density(q, t, x, y), -np.inf, np.inf, limit=200)[0]
    assert abs(mass - 1) < 1e-8


def test_transition_density_domain():
    for t in (0.0, -1.0):
        with pytest.raises(DomainError):
            qbm_transition_density(1.5, t, 0.0, 0.0)
    with pytest.raises(DomainError):
        qbm_transition_density(1.0, 1.0, 0.0, 0.0)


def test_chapman_kolmogorov_fails():
    composed, direct, gap = chapman_kolmogorov_gap(2.0)
    assert direct == pytest.approx(1 / (math.pi * math.sqrt(2)), rel=1e-12)
    assert composed == pytest.approx(1 / (2 * math.pi), rel=1e-9)  # ∫ Cauchy(z)^2 dz = 1/(2 pi)
    assert abs(gap) > 1e-3


def test_chapman_kolmogorov_holds_conditionally():
    # for a fixed v the Gaussian kernel composes exactly: check through scipy quadrature
    v, s, t = 1.3, 1.0, 1.0
    k = lambda tau, d: stats.norm.pdf(d, scale=v * math.sqrt(tau))  # noqa: E731
    composed = sci_integrate.quad(lambda z: k(s, 0.2 - z) * k(t, z), -np.inf, np.inf)[0]
    assert composed == pytest.approx(k(s + t, 0.2), rel=1e-10)


# ---------------------------------------------------------------------------
# nonlinear Fokker-Planck


def test_barenblatt_scale_and_time():
    q = 1.5
    t0 = barenblatt_time(q)
    assert barenblatt_scale(q, t0) == pytest.approx(1.0, rel=1e-14)
    assert t0 == pytest.approx(c_q(q) ** (q - 1) / ((3 - q) * (2 - q)), rel=1e-14)
    assert barenblatt_scale(1.0, 2.0) == pytest.approx(2.0, rel=1e-14)


def test_barenblatt_solves_the_equation():
    # P_t = (1/2) (P^{2-q})_xx checked by finite differences at a few points
    q, t, h, dt = 1.5, 1.3, 1e-3, 1e-5
    x = np.array([-2.0, -0.3, 0.0, 0.8, 3.0])
    pt = (barenblatt_profile(q, t + dt, x) - barenblatt_profile(q, t - dt, x)) / (2 * dt)
    u = lambda y: barenblatt_profile(q, t, y) ** (2 - q)  # noqa: E731
    uxx = (u(x + h) - 2 * u(x) + u(x - h)) / h ** 2
    np.testing.assert_allclose(pt, 0.5 * uxx, rtol=1e-5, atol=1e-8)


@pytest.fixture(scope="module")
def fpe_run():
    q = 1.5
    t0 = barenblatt_time(q)
    grid = GridSpec(1025, 5000.0, core_width=1.0)
    out = list(t0 * np.geomspace(1, 10, 11)[1:-1])
    traj = fpe_solve(lambda x: QGaussian(q).density(x), q, 10 * t0, grid, t0=t0, output_times=out)
    return q, t0, traj


def test_fpe_mass_conservation(fpe_run):
    _, _, traj = fpe_run
    assert traj.max_mass_error < 1e-6
    for snap in traj.snapshots:
        assert abs(snap.mass() - 1.0) < 1e-6 + traj.floor_mass
        assert np.all(snap.profile > 0)
    assert traj.boundary_mass < 1e-8


def test_fpe_self_similar_shape(fpe_run):
    q, t0, traj = fpe_run
    snap = min(traj.snapshots, key=lambda s: abs(s.t - 2 * t0))
    linf, s = shape_error(snap)
    assert linf < 2e-2
    assert s == pytest.approx(barenblatt_scale(q, snap.t), rel=1e-2)
    # direct comparison with the exact self-similar solution
    x = np.linspace(-3, 3, 61)
    exact = barenblatt_profile(q, snap.t, x)
    assert np.max(np.abs(np.interp(x, snap.x_nodes, snap.profile) - exact)) < 1e-3


def test_fpe_width_exponent(fpe_run):
    q, _, traj = fpe_run
    assert width_exponent(traj) == pytest.approx(1 / (3 - q), rel=0.05)


def test_fpe_heat_equation_limit():
    grid = GridSpec(4096, 12.0)
    t0 = 0.25
    init = lambda x: stats.norm.pdf(x, scale=math.sqrt(t0))  # noqa: E731  heat kernel for P_t = P_xx / 2
    traj = fpe_solve(init, 1.0, t0 + 1.0, grid, t0=t0)
    end = traj.snapshots[-1]
    assert np.max(np.abs(end.profile - stats.norm.pdf(end.x_nodes, scale=math.sqrt(t0 + 1.0)))) < 1e-4


def test_fpe_cfl_failure_names_constraint():
    grid = GridSpec(2001, 20.0)
    with pytest.raises(CflError, match="CFL"):
        fpe_solve(lambda x: QGaussian(1.5).density(x), 1.5, 10.0, grid, t0=0.1, max_steps=100)


@pytest.mark.parametrize("q", [0.5, 2.0, 2.5])
def test_fpe_q_domain(q):
    with pytest.raises(DomainError):
        fpe_solve(lambda x: QGaussian(1.5).density(x), q, 1.0, GridSpec(101, 10.0))


def test_fpe_rejects_bad_initial_profile():
    grid = GridSpec(101, 10.0)
    with pytest.raises(DomainError):
        fpe_solve(lambda x: 2 * QGaussian(1.5).density(x), 1.5, 1.0, grid)
    with pytest.raises(DomainError):
        fpe_solve(np.full(50, 0.05), 1.5, 1.0, grid)
    with pytest.raises(DomainError):
        fpe_solve(lambda x: QGaussian(1.5).density(x) - 0.01, 1.5, 1.0, grid)


# ---------------------------------------------------------------------------
# superstatistics


def test_langevin_deterministic_beta():
    cfg = LangevinConfig(gamma=1.0, beta_law=PointMass(1.0), dt=0.1, burn_in=100, n_paths=100_000)
    res = langevin_simulate(cfg, RandomStream(110))
    assert ks_statistic(res.pooled(), lambda v: stats.norm.cdf(v, scale=math.sqrt(0.5))).passed


def test_langevin_superstatistics_q_gaussian():
    q = 1.5
    cfg = LangevinConfig(gamma=1.0, beta_law=superstat_beta_law(q), dt=0.1, burn_in=100, n_paths=100_000)
    res = langevin_simulate(cfg, RandomStream(111))
    assert ks_statistic(res.pooled(), QGaussian(q).cdf).passed
    assert res.beta.shape == (100_000,)


def test_langevin_burn_in_matters():
    base = dict(gamma=1.0, beta_law=PointMass(1.0), dt=0.1, n_paths=100_000, v0=10.0)
    early = langevin_simulate(LangevinConfig(burn_in=0, **base), RandomStream(112)).pooled()
    late = langevin_simulate(LangevinConfig(burn_in=200, **base), RandomStream(112)).pooled()
    target = lambda v: stats.norm.cdf(v, scale=math.sqrt(0.5))  # noqa: E731
    assert not ks_statistic(early, target).passed
    assert ks_statistic(late, target).passed


def test_exact_step_has_no_discretization_bias():
    base = dict(gamma=2.0, beta_law=PointMass(1.0), dt=0.5, burn_in=60, n_paths=100_000)
    target = lambda v: stats.norm.cdf(v, scale=math.sqrt(0.5))  # noqa: E731
    assert ks_statistic(langevin_simulate(LangevinConfig(**base), RandomStream(113)).pooled(), target).passed
    euler = langevin_simulate(LangevinConfig(scheme="euler", **base), RandomStream(113)).pooled()
    assert not ks_statistic(euler, target).passed


def test_langevin_multiple_samples_and_validation():
    cfg = LangevinConfig(gamma=1.0, beta_law=PointMass(2.0), dt=0.05, burn_in=200, n_paths=1000,
                         n_samples=5, thin=10)
    res = langevin_simulate(cfg, RandomStream(114))
    assert res.samples.shape == (1000, 5)
    for kwargs in (dict(gamma=0.0), dict(dt=-1.0), dict(n_paths=0), dict(scheme="rk4")):
        args = dict(gamma=1.0, beta_law=PointMass(1.0), dt=0.1, burn_in=1, n_paths=1)
        args.update(kwargs)
        with pytest.raises(DomainError):
            LangevinConfig(**args)


def test_superstat_beta_law_matches_mixing():
    # 1/(2 beta) has the law of V^2
    q = 1.7
    law = superstat_beta_law(q)
    b = law.sample(RandomStream(115), 100_000)
    from qgmix.vmon import MixingLaw

    v = MixingLaw(q)
    assert ks_statistic(np.sqrt(1 / (2 * b)), v.cdf).passed


@pytest.mark.parametrize("shape,scale", [(0.5, 1.0), (2.0, 0.3), (7.5, 2.0)])
def test_superstat_gamma_closed_form(shape, scale):
    for e in (0.0, 0.1, 1.0, 10.0, 1e3):
        assert superstat_factor(e, Gamma(shape, scale)) == pytest.approx((1 + scale * e) ** -shape, abs=1e-9)


@pytest.mark.parametrize("q", [1.2, 1.5, 2.0, 2.5])
def test_superstat_q_exponential(q):
    e = np.array([0.0, 0.5, 2.0, 20.0])
    got = np.array([superstat_factor(x, superstat_beta_law(q)) for x in e])
    np.testing.assert_allclose(got, superstat_closed_form(q, e), atol=1e-9)
    assert got[0] == pytest.approx(1.0, abs=1e-12)


def test_superstat_point_and_discrete():
    assert superstat_factor(2.0, PointMass(1.5)) == pytest.approx(math.exp(-3.0), rel=1e-15)
    d = DiscreteMeasure((1.0, 3.0), (0.25, 0.75))
    assert superstat_factor(1.0, d) == pytest.approx(0.25 * math.exp(-1) + 0.75 * math.exp(-3), rel=1e-15)


def test_superstat_completely_monotone():
    law = superstat_beta_law(1.5)
    e = np.linspace(0, 5, 41)
    b = np.array([superstat_factor(x, law) for x in e])
    for order in range(1, 5):
        d = np.diff(b, n=order)
        assert np.all((-1) ** order * d > 0)


def test_superstat_generic_density():
    class Exp1:
        def pdf(self, x):
            return np.exp(-np.asarray(x))

    assert superstat_factor(3.0, Exp1()) == pytest.approx(0.25, abs=1e-10)
    with pytest.raises(DomainError):
        superstat_factor(-1.0, Gamma(1.0))
