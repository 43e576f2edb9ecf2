import math

import numpy as np
import pytest
from scipy import stats

from ecc_gof import (
    ArctanRescale,
    Cauchy,
    CopulaPIT,
    InvalidSpec,
    Mixture,
    MultivariateNormal,
    Normal,
    NotUnivariate,
    ParseError,
    PiecewiseDensity,
    Product,
    StudentT,
    Uniform,
    apply_transform,
    cdf,
    counterexample_pair,
    mg_spec,
    parse_spec,
    parse_transform,
    sample,
    spec_to_string,
    transform_to_string,
)

UNIVARIATE_SPECS = [
    ("normal(0.0,1.0)", stats.norm()),
    ("normal(2.0,1.5)", stats.norm(2.0, 1.5)),
    ("uniform(0.0,1.0)", stats.uniform()),
    ("uniform(-1.0,3.0)", stats.uniform(-1.0, 4.0)),
    ("beta(3.0,3.0)", stats.beta(3.0, 3.0)),
    ("t(5.0)", stats.t(5.0)),
    ("cauchy(0.0,1.0)", stats.cauchy()),
    ("laplace(0.0,1.0)", stats.laplace()),
    ("logistic(0.0,1.0)", stats.logistic()),
]


class TestGrammar:
    @pytest.mark.parametrize("text", [
        "normal(0.0,1.0)",
        "uniform(-1.0,3.0)",
        "beta(3.0,3.0)",
        "cosine()",
        "t(5.0)",
        "cauchy(0.0,1.0)",
        "laplace(1.0,2.0)",
        "logistic(0.0,1.0)",
        "piecewise([0.0,2.0,3.0],[0.25,0.5])",
        "prod(normal(0.0,1.0),uniform(0.0,1.0))",
        "mix(0.7:normal(0.0,1.0),0.3:normal(1.0,2.0))",
        "mvn([0.0,0.0],[[1.0,0.5],[0.5,1.0]])",
        "mg(0.5,2)",
        "prod(mix(0.5:normal(0.0,1.0),0.5:cauchy(0.0,1.0)),t(3.0))",
    ])
    def test_round_trip_from_text(self, text):
        spec = parse_spec(text)
        assert parse_spec(spec_to_string(spec)) == spec

    def test_whitespace_tolerated(self):
        assert parse_spec(" normal( 0 , 1 ) ") == Normal(0.0, 1.0)

    def test_integer_literals_canonicalize(self):
        assert spec_to_string(parse_spec("normal(0,1)")) == "normal(0.0,1.0)"

    def test_mg_shorthand_expands_to_mvn(self):
        spec = parse_spec("mg(0.5,2)")
        assert isinstance(spec, MultivariateNormal)
        assert spec == mg_spec(0.5, 2)
        np.testing.assert_allclose(np.asarray(spec.cov),
                                   [[1.0, 0.5], [0.5, 1.0]])

    def test_parse_error_reports_position(self):
        with pytest.raises(ParseError) as exc:
            parse_spec("normal(0,1) trailing")
        assert "position" in str(exc.value) or exc.value.position is not None

    @pytest.mark.parametrize("bad", [
        "",
        "gauss(0,1)",
        "normal(0)",
        "normal(0,1,2)",
        "mix(0.7:normal(0,1))x",
        "prod()",
        "mvn([0,0],[[1,0]])",
        "piecewise([0,1],[0.5,0.5])",
    ])
    def test_malformed_specs_raise_parse_error(self, bad):
        with pytest.raises((ParseError, InvalidSpec)):
            parse_spec(bad)

    def test_transform_round_trip(self):
        for text in ["identity",
                     "arctan(0.2)",
                     "arctan(0.2,0.3)",
                     "copula(normal(0.0,1.0),t(3.0))"]:
            t = parse_transform(text)
            assert transform_to_string(t) == text

    def test_transform_none_is_identity(self):
        assert transform_to_string(None) == "identity"


class TestSpecValidation:
    def test_mixture_weights_must_sum_to_one(self):
        with pytest.raises(InvalidSpec):
            Mixture(weights=(0.6, 0.6),
                    components=(Normal(0, 1), Normal(1, 1)))

    def test_mixture_weights_must_be_positive(self):
        with pytest.raises(InvalidSpec):
            Mixture(weights=(1.5, -0.5),
                    components=(Normal(0, 1), Normal(1, 1)))

    def test_mvn_requires_positive_definite_cov(self):
        with pytest.raises(InvalidSpec):
            MultivariateNormal(mean=(0.0, 0.0),
                               cov=((1.0, 2.0), (2.0, 1.0)))

    def test_mvn_requires_symmetric_cov(self):
        with pytest.raises(InvalidSpec):
            MultivariateNormal(mean=(0.0, 0.0),
                               cov=((1.0, 0.1), (0.4, 1.0)))

    def test_piecewise_mass_must_be_one(self):
        with pytest.raises(InvalidSpec):
            PiecewiseDensity(breakpoints=(0.0, 1.0), heights=(0.5,))

    def test_piecewise_breakpoints_must_increase(self):
        with pytest.raises(InvalidSpec):
            PiecewiseDensity(breakpoints=(0.0, 0.0, 1.0), heights=(0.5, 0.5))

    def test_scale_parameters_must_be_positive(self):
        for bad in ["normal(0,-1)", "t(0)", "uniform(2,1)", "beta(0,1)"]:
            with pytest.raises((ParseError, InvalidSpec)):
                parse_spec(bad)

    def test_mg_correlation_magnitude(self):
        with pytest.raises(InvalidSpec):
            mg_spec(1.0, 2)


class TestSampling:
    def test_deterministic_given_seed(self):
        spec = parse_spec("mix(0.5:normal(0.0,1.0),0.5:t(3.0))")
        a = sample(spec, 500, seed=123).points
        b = sample(spec, 500, seed=123).points
        np.testing.assert_array_equal(a, b)

    def test_different_seeds_differ(self):
        spec = parse_spec("normal(0.0,1.0)")
        a = sample(spec, 100, seed=1).points
        b = sample(spec, 100, seed=2).points
        assert not np.array_equal(a, b)

    def test_normal_moments(self):
        x = sample(Normal(0.0, 1.0), 100_000, seed=7).points[:, 0]
        assert abs(x.mean()) < 0.02
        assert abs(x.var() - 1.0) < 0.02

    def test_mg_sample_correlation(self):
        x = sample(mg_spec(0.5, 2), 100_000, seed=11).points
        r = np.corrcoef(x[:, 0], x[:, 1])[0, 1]
        assert abs(r - 0.5) < 0.01

    @pytest.mark.parametrize("text,frozen", UNIVARIATE_SPECS)
    def test_ks_self_consistency(self, text, frozen):
        spec = parse_spec(text)
        x = sample(spec, 100_000, seed=40_000 + abs(hash(text)) % 1000).points
        stat, p = stats.kstest(x[:, 0], frozen.cdf)
        assert p > 0.001, f"{text}: KS p={p:.2e}"

    def test_piecewise_ks_self_consistency(self):
        f, _ = counterexample_pair()
        x = sample(f, 100_000, seed=77).points[:, 0]
        stat, p = stats.kstest(x, lambda t: cdf(f, t))
        assert p > 0.001

    def test_cosine_ks_self_consistency(self):
        # raised-cosine bump on [0,1]: CDF(x) = x - sin(2 pi x) / (2 pi)
        from ecc_gof.distributions import Cosine
        x = sample(Cosine(), 100_000, seed=78).points[:, 0]
        assert x.min() >= 0.0 and x.max() <= 1.0
        stat, p = stats.kstest(
            x, lambda t: t - np.sin(2 * np.pi * t) / (2 * np.pi))
        assert p > 0.001

    def test_mixture_component_proportions(self):
        spec = parse_spec("mix(0.7:normal(0.0,0.1),0.3:normal(10.0,0.1))")
        x = sample(spec, 10_000, seed=5).points[:, 0]
        frac_low = np.mean(x < 5.0)
        # binomial 3-sigma band around 0.7 at n=10000
        assert abs(frac_low - 0.7) < 3 * math.sqrt(0.7 * 0.3 / 10_000)

    def test_product_stacks_independent_coordinates(self):
        spec = parse_spec("prod(uniform(0.0,1.0),normal(0.0,1.0),t(5.0))")
        x = sample(spec, 2_000, seed=9).points
        assert x.shape == (2000, 3)
        assert x[:, 0].min() >= 0.0 and x[:, 0].max() <= 1.0
        r = np.corrcoef(x[:, 0], x[:, 1])[0, 1]
        assert abs(r) < 0.08

    def test_mvn_dimension(self):
        x = sample(parse_spec("mg(0.3,3)"), 50, seed=3).points
        assert x.shape == (50, 3)


class TestCdf:
    def test_normal_cdf_at_mean(self):
        assert cdf(Normal(0.0, 1.0), 0.0) == pytest.approx(0.5, abs=1e-12)

    def test_uniform_cdf_interior(self):
        assert cdf(Uniform(0.0, 1.0), 0.3) == pytest.approx(0.3, abs=1e-12)

    def test_student_t_cdf_frozen_value(self):
        assert cdf(StudentT(3.0), 1.0) == pytest.approx(0.80450, abs=1e-5)

    def test_cauchy_cdf_quartile(self):
        assert cdf(Cauchy(0.0, 1.0), 1.0) == pytest.approx(0.75, abs=1e-12)

    def test_mixture_cdf_is_weighted_sum(self):
        spec = parse_spec("mix(0.7:normal(0.0,1.0),0.3:normal(1.0,2.0))")
        expected = 0.7 * stats.norm.cdf(0.5) + 0.3 * stats.norm(1, 2).cdf(0.5)
        assert cdf(spec, 0.5) == pytest.approx(expected, abs=1e-12)

    def test_cdf_vectorized(self):
        got = cdf(Normal(0.0, 1.0), np.array([-1.0, 0.0, 1.0]))
        np.testing.assert_allclose(got, stats.norm.cdf([-1.0, 0.0, 1.0]),
                                   atol=1e-12)

    def test_cdf_rejects_multivariate(self):
        with pytest.raises(NotUnivariate):
            cdf(parse_spec("prod(normal(0.0,1.0),normal(0.0,1.0))"), 0.5)
        with pytest.raises(NotUnivariate):
            cdf(mg_spec(0.5, 2), 0.5)


class TestCounterexamplePair:
    """Two densities with equal super-level-set geometry but different CDFs."""

    def test_specs(self):
        f, g = counterexample_pair()
        assert f == PiecewiseDensity((0.0, 2.0, 3.0), (0.25, 0.5))
        assert g == PiecewiseDensity((0.0, 1.0, 2.0, 3.0), (0.25, 0.5, 0.25))

    def test_super_level_set_masses_agree(self):
        # mass of {x : density(x) > t}, computed from the raw pieces here
        f, g = counterexample_pair()

        def superlevel_mass(spec, t):
            bp = np.asarray(spec.breakpoints)
            widths = np.diff(bp)
            hs = np.asarray(spec.heights)
            return float(np.sum(widths[hs > t] * hs[hs > t]))

        for t in [0.0, 0.1, 0.25 - 1e-9, 0.3, 0.49, 0.5, 0.7]:
            assert superlevel_mass(f, t) == pytest.approx(
                superlevel_mass(g, t), abs=1e-12)
        # and the actual values, by hand:
        assert superlevel_mass(f, 0.1) == pytest.approx(1.0)
        assert superlevel_mass(f, 0.3) == pytest.approx(0.5)
        assert superlevel_mass(f, 0.6) == pytest.approx(0.0)

    def test_cdfs_differ(self):
        f, g = counterexample_pair()
        assert cdf(f, 1.5) == pytest.approx(0.375, abs=1e-12)
        assert cdf(g, 1.5) == pytest.approx(0.5, abs=1e-12)

    def test_total_mass_one(self):
        f, g = counterexample_pair()
        assert cdf(f, 3.0) == pytest.approx(1.0, abs=1e-12)
        assert cdf(g, 3.0) == pytest.approx(1.0, abs=1e-12)


class TestTransforms:
    def test_arctan_bounds_heavy_tails(self):
        x = sample(Cauchy(0.0, 1.0), 10_000, seed=21)
        y = apply_transform(ArctanRescale((1.0,)), x).points
        assert y.min() > -math.pi / 2
        assert y.max() < math.pi / 2

    def test_arctan_gamma_for_unit_std(self):
        assert ArctanRescale.gamma_for_std(1) == pytest.approx(0.2)

    def test_arctan_monotone_per_coordinate(self):
        x = sample(parse_spec("prod(cauchy(0.0,1.0),cauchy(0.0,1.0))"),
                   500, seed=22)
        t = parse_transform("arctan(0.2,0.5)")
        y = apply_transform(t, x).points
        for j in range(2):
            order_x = np.argsort(x.points[:, j])
            order_y = np.argsort(y[:, j])
            np.testing.assert_array_equal(order_x, order_y)

    def test_arctan_gamma_arity_must_match(self):
        x = sample(parse_spec("prod(normal(0.0,1.0),normal(0.0,1.0))"),
                   10, seed=1)
        with pytest.raises(InvalidSpec):
            apply_transform(ArctanRescale((0.2, 0.2, 0.2)), x)

    def test_copula_pit_gives_uniform_marginals(self):
        spec = mg_spec(0.5, 2)
        x = sample(spec, 10_000, seed=30)
        t = CopulaPIT((Normal(0.0, 1.0), Normal(0.0, 1.0)))
        u = apply_transform(t, x).points
        assert u.min() > 0.0 and u.max() < 1.0
        for j in range(2):
            stat, p = stats.kstest(u[:, j], "uniform")
            assert p > 0.01, f"coordinate {j}: p={p:.3g}"

    def test_copula_preserves_dependence_sign(self):
        x = sample(mg_spec(0.7, 2), 20_000, seed=31)
        u = apply_transform(CopulaPIT((Normal(0.0, 1.0),) * 2), x).points
        r = np.corrcoef(u[:, 0], u[:, 1])[0, 1]
        assert r > 0.4

    def test_copula_parse_matches_constructor(self):
        t = parse_transform("copula(normal(0.0,1.0),normal(0.0,1.0))")
        assert t == CopulaPIT((Normal(0.0, 1.0), Normal(0.0, 1.0)))

    def test_identity_transform_is_noop(self):
        x = sample(Normal(0.0, 1.0), 50, seed=2)
        y = apply_transform(parse_transform("identity"), x)
        np.testing.assert_array_equal(x.points, y.points)
