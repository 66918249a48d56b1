"""Distribution machinery: samplers, Mellin transforms, densities, CF, tails."""

import math

import numpy as np
import pytest
import scipy.special as sp
import scipy.stats as st

from steinprod import dist
from steinprod.steinops import ProductSpec

PN1 = ProductSpec(normal_count=1, sigma=1.0)
PN2 = ProductSpec(normal_count=2, sigma=1.0)
PG2 = ProductSpec(gamma_shapes=(1.4, 2.2), lam=1.0)
XYZ = ProductSpec(beta_pairs=((1.3, 0.6),), gamma_shapes=(1.4,), lam=1.0,
                  normal_count=1, sigma=1.0)


class TestSampler:
    def test_normal_moments(self):
        spec = ProductSpec(normal_count=1, sigma=2.0)
        w = dist.sample(spec, 200_000, seed=42)
        assert abs(np.mean(w)) < 4 * 2.0 / math.sqrt(len(w))
        assert np.var(w) == pytest.approx(4.0, rel=0.02)

    def test_product_gamma_mean(self):
        spec = ProductSpec(gamma_shapes=(1.5, 2.0), lam=1.3)
        w = dist.sample(spec, 400_000, seed=7)
        assert np.mean(w) == pytest.approx(1.5 * 2.0 / 1.3**2, rel=0.02)

    def test_generalised_gamma_power_moment(self):
        r, lam, q = 2.0, 1.5, 2.0
        w = dist.sample(ProductSpec(gamma_shapes=(r,), lam=lam, q=q), 400_000, seed=9)
        assert np.mean(w**q) == pytest.approx(r / (q * lam**q), rel=0.02)

    def test_deterministic(self):
        w1 = dist.sample(XYZ, 1000, seed=5)
        w2 = dist.sample(XYZ, 1000, seed=5)
        assert np.array_equal(w1, w2)

    def test_worker_sharding_deterministic(self):
        w1 = dist.sample(XYZ, 1001, seed=5, workers=4)
        w2 = dist.sample(XYZ, 1001, seed=5, workers=4)
        assert np.array_equal(w1, w2)
        assert len(w1) == 1001

    def test_half_normal_product_is_generalised_gamma(self):
        # |Z_1 Z_2| for centred normals has the q=2 generalised-gamma
        # product law with r=1 and rate 1/(sqrt(2) sigma): two-sample KS
        sigma = 1.0
        n = 200_000
        z = np.abs(dist.sample(ProductSpec(normal_count=2, sigma=sigma), n, seed=41))
        g = dist.sample(ProductSpec(gamma_shapes=(1.0, 1.0),
                                    lam=1.0 / (math.sqrt(2.0) * sigma), q=2.0),
                        n, seed=42)
        both = np.sort(np.concatenate([z, g]))
        fz = np.searchsorted(np.sort(z), both, side="right") / n
        fg = np.searchsorted(np.sort(g), both, side="right") / n
        d = np.max(np.abs(fz - fg))
        assert d < 1.63 * math.sqrt(2.0 / n)  # 1% two-sample critical value


class TestMellin:
    @pytest.mark.parametrize("spec", [PN1, PN2, PG2, XYZ,
                                      ProductSpec(beta_pairs=((1.3, 0.7),))])
    def test_total_probability(self, spec):
        assert dist.mellin(spec)(1.0) == pytest.approx(1.0, abs=1e-13)

    def test_normal_second_moment(self):
        assert dist.mellin(PN1)(3.0) == pytest.approx(1.0, rel=1e-13)

    def test_beta_mean(self):
        a, b = 1.3, 0.7
        spec = ProductSpec(beta_pairs=((a, b),))
        assert dist.mellin(spec)(2.0) == pytest.approx(a / (a + b), rel=1e-13)

    def test_strip_enforced(self):
        mel = dist.mellin(PG2)
        with pytest.raises(ValueError, match="strip"):
            mel(-1.0)

    @pytest.mark.parametrize("spec", [PN1, PN2, PG2, XYZ])
    def test_factorised_equals_g_form(self, spec):
        mel = dist.mellin(spec)
        lo, _ = mel.strip
        for s in np.linspace(max(lo + 0.1, 0.2), max(lo + 0.1, 0.2) + 6, 20):
            assert mel.log_value(float(s)) == pytest.approx(
                dist.mellin_gform_log(spec, float(s)), rel=1e-12, abs=1e-11)

    def test_duplication_identity(self):
        for s in (2.0, 3.7, 10.0):
            assert dist.duplication_gap(s) < 1e-13

    def test_multiplicative_under_products_vs_monte_carlo(self):
        mel = dist.mellin(XYZ)
        w = np.abs(dist.sample(XYZ, 400_000, seed=31))
        for s in (1.5, 2.0, 3.0):
            vals = w ** (s - 1.0)
            est = np.mean(vals)
            se = np.std(vals, ddof=1) / math.sqrt(len(w))
            assert abs(mel(s) - est) < 4 * se


class TestDensities:
    def test_single_normal_reduces_to_gaussian(self):
        ev = dist.density(PN1)
        for x in (0.0, 0.7, -1.3, 2.0):
            assert ev(x) == pytest.approx(st.norm.pdf(x), rel=1e-12)

    def test_two_normal_bessel_form(self):
        ev = dist.density(PN2)
        for x in (0.2, 0.9, 3.0):
            ref = sp.kv(0, abs(x)) / math.pi
            assert ev(x) == pytest.approx(ref, rel=1e-12)
            assert ev(x, method="gfunc") == pytest.approx(ref, rel=1e-8)

    def test_two_normal_diverges_at_zero(self):
        assert dist.density(PN2)(0.0) == math.inf

    def test_single_gamma(self):
        ev = dist.density(ProductSpec(gamma_shapes=(2.0,), lam=1.5))
        for x in (0.1, 1.0, 4.0):
            assert ev(x) == pytest.approx(st.gamma.pdf(x, 2.0, scale=1 / 1.5),
                                          rel=1e-12)

    def test_two_gamma_bessel_form(self):
        r1, r2, lam = 1.4, 2.2, 1.0
        ev = dist.density(ProductSpec(gamma_shapes=(r1, r2), lam=lam))
        for x in (0.05, 0.5, 2.0, 8.0):
            ref = (2 * lam ** (r1 + r2) / (math.gamma(r1) * math.gamma(r2))
                   * x ** ((r1 + r2) / 2 - 1) * sp.kv(r1 - r2, 2 * lam * math.sqrt(x)))
            assert ev(x) == pytest.approx(ref, rel=1e-11)
            assert ev(x, method="gfunc") == pytest.approx(ref, rel=1e-8)

    def test_single_beta(self):
        a, b = 1.3, 0.7
        ev = dist.density(ProductSpec(beta_pairs=((a, b),)))
        for x in (0.1, 0.5, 0.9):
            assert ev(x) == pytest.approx(st.beta.pdf(x, a, b), rel=1e-10)
        assert ev(-0.5) == 0.0
        assert ev(1.5) == 0.0

    def test_two_beta_convolution_vs_series(self):
        from steinprod.specfun import meijer_g

        ev = dist.density(ProductSpec(beta_pairs=((1.3, 0.7), (0.6, 1.1))))
        for x in (0.1, 0.4, 0.8):
            gen = ev.const * meijer_g(ev.reduced, x, method="series")
            assert ev(x) == pytest.approx(gen, rel=1e-8)

    def test_symmetry_bit_exact(self):
        ev = dist.density(XYZ)
        for x in (0.37, 1.9):
            assert ev(x) == ev(-x)

    def test_xyz_against_monte_carlo_kde(self):
        ev = dist.density(XYZ)
        w = dist.sample(XYZ, 1_000_000, seed=17)
        # histogram density estimate with analytic-error bars
        edges = np.array([0.3, 0.5, 0.8, 1.2, 1.7])
        counts, _ = np.histogram(w, bins=edges)
        for i in range(len(edges) - 1):
            width = edges[i + 1] - edges[i]
            est = counts[i] / len(w) / width
            mid_mass = dist.quad.adaptive(lambda u: ev.batch(u), edges[i],
                                          edges[i + 1], tol=1e-10) / width
            se = math.sqrt(counts[i]) / len(w) / width
            assert abs(est - mid_mass) < 4 * se + 1e-4

    @pytest.mark.parametrize("spec", [
        PN1, PN2, PG2, XYZ,
        ProductSpec(beta_pairs=((1.3, 0.7),)),
        ProductSpec(beta_pairs=((1.3, 0.6), (0.8, 1.15)), gamma_shapes=(1.4,),
                    lam=2.0, normal_count=2, sigma=0.5),
    ])
    def test_normalisation(self, spec):
        assert dist.normalization(spec) == pytest.approx(1.0, abs=1e-6)


class TestCharFunction:
    def test_unit_at_zero(self):
        assert dist.char_function(PN1, 0.0) == 1.0

    def test_gaussian_cf(self):
        for t in (0.5, 1.3, 2.0):
            assert dist.char_function(PN1, t) == pytest.approx(
                math.exp(-t * t / 2), abs=1e-8)

    def test_two_normal_cf_closed_form(self):
        for t in (0.5, 1.0, 2.0):
            assert dist.char_function(PN2, t) == pytest.approx(
                1.0 / math.sqrt(1.0 + t * t), abs=1e-7)

    def test_bounded_and_even(self):
        for t in (0.25, 0.75, 1.5, 3.0):
            v = dist.char_function(XYZ, t)
            assert abs(v) <= 1.0 + 1e-9
            assert dist.char_function(XYZ, -t) == v

    def test_mc_agreement(self):
        w = dist.sample(XYZ, 1_000_000, seed=3)
        for t in (0.5, 1.0, 2.0):
            mc = np.cos(t * w)
            est, se = np.mean(mc), np.std(mc, ddof=1) / math.sqrt(len(w))
            assert abs(dist.char_function(XYZ, t) - est) < 3 * se

    def test_requires_normal_factor(self):
        with pytest.raises(ValueError):
            dist.char_function(PG2, 1.0)


class TestTails:
    def test_gaussian_tail_exact(self):
        x = 9.0
        assert dist.density(PN1)(x) / dist.tail_asymptotic(PN1, x) == pytest.approx(
            1.0, abs=1e-6)

    def test_two_normal_matches_k0_asymptote(self):
        x = 30.0
        ref = math.sqrt(math.pi / (2 * x)) * math.exp(-x) / math.pi
        assert dist.tail_asymptotic(PN2, x) == pytest.approx(ref, rel=1e-12)

    @pytest.mark.parametrize("spec", [PN1, PN2, PG2_N := ProductSpec(
        gamma_shapes=(1.4,), lam=1.0, normal_count=1, sigma=1.0), XYZ])
    def test_closed_constants_match_g_route(self, spec):
        ev = dist.density(spec)
        sig = 2 * spec.n + spec.N
        y = (30.0 / sig) ** sig
        x = math.sqrt(y / ev.arg_coeff)
        closed = (dist.tail_constant(spec) * abs(x) ** dist.tail_alpha(spec)
                  * math.exp(-sig * y ** (1.0 / sig)))
        assert closed == pytest.approx(dist.tail_asymptotic(spec, x), rel=1e-10)

    def test_alpha_special_cases(self):
        assert dist.tail_alpha(PN1) == pytest.approx(0.0)
        assert dist.tail_alpha(PN2) == pytest.approx(-0.5)


class TestNumericCdf:
    def test_gamma_cdf(self):
        cdf = dist.NumericCdf(ProductSpec(gamma_shapes=(2.0,), lam=1.0))
        for x in (0.2, 1.0, 3.0, 7.0):
            assert cdf(x) == pytest.approx(st.gamma.cdf(x, 2.0), abs=1e-6)

    def test_normal_cdf_symmetric_fold(self):
        cdf = dist.NumericCdf(PN1)
        for x in (-1.5, 0.0, 0.7, 2.2):
            assert cdf(x) == pytest.approx(st.norm.cdf(x), abs=1e-6)

    def test_monotone(self):
        cdf = dist.NumericCdf(PN2)
        xs = np.linspace(-6, 6, 101)
        vals = cdf(xs)
        assert np.all(np.diff(vals) >= -1e-12)


class TestMomentRecursion:
    @pytest.mark.parametrize("spec", [PG2, PN2,
                                      ProductSpec(gamma_shapes=(1.0, 2.0), lam=1.0)])
    def test_report_passes(self, spec):
        rep = dist.moment_recursion_check(spec, 6)
        assert rep.passed, rep
        assert rep.estimate <= rep.tolerance

    def test_pn_unit_variance_case(self):
        spec = ProductSpec(normal_count=1, sigma=1.0)
        assert dist.moment(spec, 2) == pytest.approx(1.0, rel=1e-13)
