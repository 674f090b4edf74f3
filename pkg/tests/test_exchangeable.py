import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate as sci_integrate
from scipy import stats

from qgmix.exchangeable import (
    BernoulliMixture,
    ScaleMixture,
    ShiftMixture,
    TriangularRowModel,
    clt_case_i,
    clt_triangular,
    exchangeability_diagnostic,
    generate_sequence,
    leibnitz_from_mixing,
    lln_case_ii,
    permutation_invariance,
    sample_matrix,
    scale_mixture_cdf,
)
from qgmix.laws import Beta, CenteredUniform, DiscreteMeasure, Normal, PointMass, Rademacher, Uniform
from qgmix.numerics import DomainError, RandomStream, ks_statistic
from qgmix.qgaussian import QGaussian
from qgmix.vmon import ContractError, MixingLaw


def q_model(q, mixand=None):
    return ScaleMixture(MixingLaw(q), mixand or Normal())


# ---------------------------------------------------------------------------
# sequences


def test_scale_sequence_keeps_latent_fixed():
    lat, x = generate_sequence(q_model(1.5), RandomStream(70), 20_000)
    y = x / lat["v"]
    assert abs(y.std() - 1.0) < 0.02
    assert ks_statistic(y, stats.norm.cdf).passed


def test_scale_mixture_marginal_is_q_gaussian():
    x = sample_matrix(q_model(1.5), RandomStream(71), 100_000, 3)
    for j in range(3):
        assert ks_statistic(x[:, j], QGaussian(1.5).cdf).passed


def test_shift_with_zero_latent_is_iid_noise():
    lat, x = generate_sequence(ShiftMixture(PointMass(0.0), Normal()), RandomStream(72), 50_000)
    assert lat == {"y": 0.0}
    assert ks_statistic(x, stats.norm.cdf).passed


def test_bernoulli_fair_coin():
    lat, x = generate_sequence(BernoulliMixture(PointMass(0.5)), RandomStream(73), 100_000)
    assert set(np.unique(x)) <= {0.0, 1.0}
    assert abs(x.mean() - 0.5) < 4 * 0.5 / math.sqrt(1e5)


def test_triangular_sequence_row():
    m = TriangularRowModel(PointMass(2.0), PointMass(3.0), Normal(), row_perturbation=lambda n: 1.0)
    lat, x = generate_sequence(m, RandomStream(74), 10_000)
    assert lat == {"v": 2.0, "u": 3.0}
    assert abs(x.mean() - 0.03) < 4 * 2 / 100 and abs(x.std() - 2.0) < 0.06


def test_sequence_domain_and_contracts():
    with pytest.raises(DomainError):
        generate_sequence(q_model(1.5), RandomStream(0), 0)
    with pytest.raises(ContractError):
        generate_sequence(ScaleMixture(PointMass(-1.0), Normal()), RandomStream(0), 5)
    with pytest.raises(ContractError):
        generate_sequence(BernoulliMixture(PointMass(1.5)), RandomStream(0), 5)
    with pytest.raises(ContractError):
        ScaleMixture(MixingLaw(1.5), PointMass(0.0))


def test_sample_matrix_is_deterministic():
    a = sample_matrix(q_model(1.7), RandomStream(5, 1), 300, 4)
    b = sample_matrix(q_model(1.7), RandomStream(5, 1), 300, 4)
    np.testing.assert_array_equal(a, b)
    assert a.shape == (300, 4)


# ---------------------------------------------------------------------------
# case i


def test_case_i_normal_mixands_exact_at_n1():
    e = clt_case_i(q_model(1.5), 1, 20_000, RandomStream(75))
    assert e.report.passed and e.values.shape == (20_000,) and e.latents.shape == (20_000, 1)


@pytest.mark.parametrize("mixand", [Rademacher(), CenteredUniform()], ids=["rademacher", "uniform"])
def test_case_i_converges_for_non_normal_mixands(mixand):
    e = clt_case_i(q_model(2.0, mixand), 2_000, 5_000, RandomStream(76))
    assert e.report.passed


def test_case_i_degenerate_latent_is_classical_clt():
    e = clt_case_i(ScaleMixture(PointMass(1.0), CenteredUniform()), 1_000, 10_000, RandomStream(77))
    assert e.report.passed
    assert ks_statistic(e.values, stats.norm.cdf).statistic == pytest.approx(e.report.statistic, abs=1e-12)


def test_case_i_general_latent_uses_quadrature_target():
    latent = DiscreteMeasure((0.5, 2.0), (0.5, 0.5))
    e = clt_case_i(ScaleMixture(latent, Normal()), 10, 20_000, RandomStream(78))
    assert e.report.passed
    ref = lambda x: 0.5 * stats.norm.cdf(x / 0.5) + 0.5 * stats.norm.cdf(x / 2.0)  # noqa: E731
    assert ks_statistic(e.values, ref).statistic == pytest.approx(e.report.statistic, abs=1e-6)


def test_case_i_rejects_uncentered_mixand():
    with pytest.raises(ContractError):
        clt_case_i(ScaleMixture(MixingLaw(1.5), Uniform()), 10, 100, RandomStream(0))
    with pytest.raises(ContractError):
        clt_case_i(ShiftMixture(Uniform(), Normal()), 10, 100, RandomStream(0))


def test_case_i_detects_wrong_scale():
    # the target for a variance-1/2 mixand is g_q(x sqrt 2), not g_q
    e = clt_case_i(q_model(1.5, Normal(0, 1 / math.sqrt(2))), 1, 50_000, RandomStream(79))
    assert e.report.passed
    assert not ks_statistic(e.values, QGaussian(1.5).cdf).passed


def test_scale_mixture_cdf_against_scipy():
    latent = Beta(2.0, 3.0)
    x = 0.7
    ref = sci_integrate.quad(lambda v: stats.norm.cdf(x / (1.3 * v)) * stats.beta.pdf(v, 2, 3), 0, 1)[0]
    assert scale_mixture_cdf(latent, x, 1.3) == pytest.approx(ref, abs=1e-10)


def test_worker_count_does_not_change_results():
    a = clt_case_i(q_model(1.5, Rademacher()), 50, 1_000, RandomStream(80), workers=1)
    b = clt_case_i(q_model(1.5, Rademacher()), 50, 1_000, RandomStream(80), workers=2)
    np.testing.assert_array_equal(a.values, b.values)


# ---------------------------------------------------------------------------
# case ii


def test_lln_shift_uniform():
    e = lln_case_ii(ShiftMixture(Uniform(), Normal()), 100_000, 10_000, RandomStream(81))
    assert e.report.passed


def test_lln_constant_latent_concentrates():
    n = 10_000
    e = lln_case_ii(ShiftMixture(PointMass(0.3), CenteredUniform()), n, 2_000, RandomStream(82))
    assert np.var(e.values) < 10 / n
    assert abs(e.values.mean() - 0.3) < 4 / math.sqrt(n * 2_000)


def test_lln_bernoulli_uniform_mixing():
    e = lln_case_ii(BernoulliMixture(Uniform()), 100_000, 10_000, RandomStream(83))
    assert e.report.passed


def test_lln_bernoulli_centered_offset():
    e = lln_case_ii(BernoulliMixture(Beta(2, 2), offset=0.5), 100_000, 10_000, RandomStream(84))
    assert e.report.passed
    assert abs(e.values.mean()) < 0.02


def test_case_dichotomy():
    m = q_model(1.5, Rademacher())
    assert clt_case_i(m, 1_000, 5_000, RandomStream(85)).report.passed
    e = lln_case_ii(m, 1_000, 5_000, RandomStream(86))
    assert e.report.passed and e.report.statistic < 0.01
    # a shift model is not degenerate at 0
    e2 = lln_case_ii(ShiftMixture(Normal(1.0, 1.0), Normal()), 1_000, 5_000, RandomStream(87))
    assert abs(e2.values.mean() - 1.0) < 0.1 and e2.values.std() > 0.5


def test_lln_wrong_target_fails():
    e = lln_case_ii(ShiftMixture(Uniform(), Normal()), 100_000, 10_000, RandomStream(88))
    assert not ks_statistic(e.values, Beta(2, 2).cdf).passed


# ---------------------------------------------------------------------------
# triangular arrays


def test_triangular_reduces_to_case_i():
    # n even puts an atom of mass ~sqrt(2/(pi n)) at 0 for Rademacher sums; n = 1e4 keeps it at 0.008
    m = TriangularRowModel(MixingLaw(1.5), PointMass(0.0), Rademacher())
    e = clt_triangular(m, 10_000, 10_000, RandomStream(89))
    assert e.report.passed
    assert e.latents.shape == (10_000, 2)


def test_triangular_part1_convolution_target():
    m = TriangularRowModel(MixingLaw(1.5), Normal(), Rademacher())
    e = clt_triangular(m, 1_000, 4_000, RandomStream(90))
    assert e.report.passed


def test_triangular_part2_needs_large_n():
    m = TriangularRowModel(MixingLaw(1.5), Uniform(), Rademacher(), alpha=0.75)
    small = clt_triangular(m, 10_000, 10_000, RandomStream(91), part=2)
    # residual scale n^{1/2 - alpha} = 0.1 at n = 1e4 keeps the statistic near 0.05
    assert not small.report.passed and small.report.statistic > 0.03
    large = clt_triangular(m, 100_000_000, 10_000, RandomStream(91), part=2)
    assert large.report.passed


@pytest.mark.parametrize("alpha", [0.5, 0.3, -1.0])
def test_triangular_alpha_domain(alpha):
    with pytest.raises(DomainError):
        TriangularRowModel(MixingLaw(1.5), Uniform(), Rademacher(), alpha=alpha)


def test_triangular_part_domain_and_centering():
    m = TriangularRowModel(MixingLaw(1.5), Uniform(), Rademacher())
    with pytest.raises(DomainError):
        clt_triangular(m, 10, 10, RandomStream(0), part=3)
    with pytest.raises(ContractError):
        TriangularRowModel(MixingLaw(1.5), Uniform(), Uniform())


# ---------------------------------------------------------------------------
# diagnostics


def test_uncorrelated_but_dependent():
    x = sample_matrix(q_model(1.2), RandomStream(92), 1_000_000, 2)
    r = exchangeability_diagnostic(x)
    assert abs(r.corr_x) < 3 * r.corr_x_se
    assert r.corr_sq > 3 * r.corr_sq_se
    # oracle for corr(X1^2, X2^2) with Y normal: Var(V^2) / (3 E V^4 - (E V^2)^2)
    law = MixingLaw(1.2)
    m2 = law.second_moment()
    m4 = sci_integrate.quad(lambda v: v ** 4 * law.pdf(v), 0, np.inf, limit=400)[0]
    assert abs(r.corr_sq - (m4 - m2 ** 2) / (3 * m4 - m2 ** 2)) < 4 * r.corr_sq_se


def test_iid_model_has_no_correlation():
    x = sample_matrix(ScaleMixture(PointMass(1.0), Normal()), RandomStream(93), 200_000, 2)
    r = exchangeability_diagnostic(x)
    assert abs(r.corr_x) < 4 * r.corr_x_se and abs(r.corr_sq) < 4 * r.corr_sq_se


def test_shift_covariance_is_latent_variance():
    x = sample_matrix(ShiftMixture(Uniform(), Normal()), RandomStream(94), 200_000, 2)
    r = exchangeability_diagnostic(x)
    assert r.corr_x > 0
    assert abs(r.cov_x - 1 / 12) < 4 * r.cov_x_se


@pytest.mark.parametrize("model", [
    ShiftMixture(Normal(0, 2), CenteredUniform()),
    BernoulliMixture(Beta(0.5, 0.5)),
    ScaleMixture(MixingLaw(1.3), Rademacher()),
], ids=["shift", "bernoulli", "scale"])
def test_covariance_nonnegative(model):
    x = sample_matrix(model, RandomStream(95), 100_000, 2)
    r = exchangeability_diagnostic(x)
    assert r.cov_x >= -3 * r.cov_x_se


@pytest.mark.parametrize("model", [q_model(1.5), ShiftMixture(Uniform(), Normal()), BernoulliMixture(Uniform())],
                         ids=["scale", "shift", "bernoulli"])
def test_permutation_invariance(model):
    x = sample_matrix(model, RandomStream(96), 100_000, 2)
    assert permutation_invariance(x).passed


def test_permutation_detects_asymmetry():
    s = RandomStream(97)
    z = s.generator.standard_normal((100_000, 2))
    x = np.column_stack([z[:, 0], 0.8 * z[:, 0] + 0.6 * z[:, 1] + 0.2])
    assert not permutation_invariance(x).passed


def test_diagnostic_domain():
    with pytest.raises(DomainError):
        exchangeability_diagnostic(np.zeros((1000, 1)))
    with pytest.raises(DomainError):
        exchangeability_diagnostic(np.zeros((10, 2)))


# ---------------------------------------------------------------------------
# Leibnitz triangles


def test_leibnitz_uniform_is_harmonic_triangle():
    t = leibnitz_from_mixing(Uniform(), 30)
    for N in range(31):
        for n in range(N + 1):
            assert t.r(N, n) == pytest.approx(1 / ((N + 1) * math.comb(N, n)), rel=1e-12)
    assert t.r(2, 1) == pytest.approx(1 / 6)


def test_leibnitz_point_mass_is_fair_coin():
    t = leibnitz_from_mixing(PointMass(0.5), 30)
    for N in range(31):
        np.testing.assert_allclose(t.rows[N], 2.0 ** -N, rtol=1e-15)


class _TriangleDensity:
    """Density 2p on [0, 1], a law without a closed-form branch."""

    def pdf(self, p):
        p = np.asarray(p, dtype=float)
        return np.where((p >= 0) & (p <= 1), 2 * p, 0.0)


@pytest.mark.parametrize("mu", [Uniform(), Beta(2.5, 0.7), PointMass(0.3),
                                DiscreteMeasure((0.1, 0.5, 0.95), (0.2, 0.3, 0.5)), _TriangleDensity()],
                         ids=["uniform", "beta", "point", "discrete", "density"])
def test_leibnitz_rule_and_row_mass(mu):
    t = leibnitz_from_mixing(mu, 30)
    assert t.rule_residual() < 1e-12
    assert t.row_mass_error() < 1e-12
    assert all(np.all(row >= 0) for row in t.rows)


def test_leibnitz_density_matches_beta_integral():
    # density 2p is Beta(2, 1)
    a = leibnitz_from_mixing(_TriangleDensity(), 20)
    b = leibnitz_from_mixing(Beta(2.0, 1.0), 20)
    for N in range(21):
        np.testing.assert_allclose(a.rows[N], b.rows[N], rtol=1e-12)


@settings(max_examples=20, deadline=None)
@given(a=st.floats(0.1, 20), b=st.floats(0.1, 20))
def test_leibnitz_rule_for_beta_family(a, b):
    t = leibnitz_from_mixing(Beta(a, b), 30)
    assert t.rule_residual() < 1e-12


def test_leibnitz_domain():
    with pytest.raises(DomainError):
        leibnitz_from_mixing(DiscreteMeasure((0.1, 0.2), (0.5, 0.5 + 1e-9)), 5)
    with pytest.raises(DomainError):
        leibnitz_from_mixing(Uniform(), -1)
