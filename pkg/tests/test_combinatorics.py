import math
from fractions import Fraction

import mpmath
import numpy as np
import pytest
from scipy import special

from speciesbnp.combinatorics import (
    digamma,
    gen_factorial_coeff,
    gen_factorial_coeff_sum,
    gen_factorial_row,
    gen_factorial_table,
    log_rising_factorial,
    signed_logsumexp,
    signless_stirling_noncentered,
    stirling_row,
    trigamma,
)
from helpers import gen_factorial_exact, rising

EULER = 0.57721566490153286


def _value(sign_log):
    s, lg = sign_log
    return s * math.exp(lg)


class TestRisingFactorial:
    @pytest.mark.parametrize("a,u,expected", [(1.0, 3, math.log(6)), (0.5, 0, 0.0), (11.0, 2, math.log(132))])
    def test_examples(self, a, u, expected):
        assert log_rising_factorial(a, u) == pytest.approx(expected, abs=1e-14)

    def test_large_order_matches_gammaln(self):
        a, u = 3.7, 5000
        assert log_rising_factorial(a, u) == pytest.approx(special.gammaln(a + u) - special.gammaln(a), rel=1e-13)

    def test_huge_base_keeps_precision(self):
        # lgamma differences lose digits here; the direct sum does not
        a = 1e12
        assert log_rising_factorial(a, 3) == pytest.approx(3 * math.log(a) + math.log1p(1 / a) + math.log1p(2 / a), rel=1e-15)

    def test_vectorized(self):
        out = log_rising_factorial(np.array([1.0, 2.0]), 2)
        np.testing.assert_allclose(out, np.log([2.0, 6.0]))

    def test_domain_error(self):
        with pytest.raises(ValueError):
            log_rising_factorial(-0.5, 2)
        with pytest.raises(ValueError):
            log_rising_factorial(1.0, -1)


class TestGeneralizedFactorial:
    def test_examples(self):
        assert _value(gen_factorial_coeff(2, 1, 0.5, 0.0)) == pytest.approx(0.25, rel=1e-14)
        for a in (0.3, 0.5, 1.7):
            assert _value(gen_factorial_coeff(2, 2, a)) == pytest.approx(a * a, rel=1e-14)
        assert _value(gen_factorial_coeff(2, 1, 0.5, -8.0)) == pytest.approx(8.25, rel=1e-14)
        assert gen_factorial_coeff_sum(2, 1, 0.5, -8.0) == pytest.approx(8.25, rel=1e-14)

    def test_row_anchor(self):
        s, lg = gen_factorial_row(2, 0.5, -8.0)
        np.testing.assert_allclose(s * np.exp(lg), [72.0, 8.25, 0.25], rtol=1e-14)

    @pytest.mark.parametrize("a,b", [(0.5, 0.0), (0.25, -3.0), (0.8, -7.6), (1.5, 0.0), (0.3, 2.2), (2.5, -1.0)])
    def test_recurrence_matches_exact_alternating_sum(self, a, b):
        table = gen_factorial_table(12, a, b)
        for u in range(13):
            scale = max(abs(table.value(u, v)) for v in range(u + 1))
            for v in range(u + 1):
                exact = float(gen_factorial_exact(u, v, Fraction(a), Fraction(b)))
                got = table.value(u, v)
                if exact == 0:
                    # signed regime: exact zeros come out as rounding residue
                    assert abs(got) <= 1e-12 * scale
                else:
                    assert got == pytest.approx(exact, rel=1e-9), (u, v)

    def test_float_alternating_sum_agrees_for_small_u(self):
        for u in range(7):
            for v in range(u + 1):
                assert gen_factorial_coeff_sum(u, v, 0.4, -2.0) == pytest.approx(
                    _value(gen_factorial_coeff(u, v, 0.4, -2.0)), rel=1e-10, abs=1e-300
                )

    @pytest.mark.parametrize("a", [0.2, 0.5, 0.9, 1.3])
    @pytest.mark.parametrize("b", [-4.0, -0.5, 0.0, 0.7])
    @pytest.mark.parametrize("t", [0.3, 1.0, 2.5, 7.0])
    def test_expansion_identity(self, a, b, t):
        for u in range(7):
            s, lg = gen_factorial_row(u, a, b)
            lhs = sum(s[v] * math.exp(lg[v]) * rising(t, v) for v in range(u + 1))
            rhs = rising(a * t - b, u)
            assert lhs == pytest.approx(rhs, rel=1e-10, abs=1e-12)

    @pytest.mark.parametrize("b", [0.0, -2.0, -5.5])
    def test_small_a_limit_is_stirling(self, b):
        a = 1e-6
        for u in range(1, 8):
            s, lg = gen_factorial_row(u, a, b)
            ls = stirling_row(u, -b)
            for v in range(1, u + 1):
                assert s[v] > 0
                assert math.exp(lg[v] - v * math.log(a)) == pytest.approx(math.exp(ls[v]), rel=1e-4)

    def test_table_structure(self):
        tab = gen_factorial_table(5, 0.5, -1.0)
        assert tab.signs[0, 0] == 1 and tab.logs[0, 0] == 0
        assert np.all(tab.signs[np.triu_indices(6, 1)] == 0)
        assert tab.u_max == 5

    def test_signed_entries_for_large_a(self):
        # b = 1.5, u = 2: C(2,1) = a(1 - a) < 0
        assert gen_factorial_coeff(2, 1, 1.5)[0] == -1.0

    def test_nonnegative_in_unseen_regime(self):
        s, _ = gen_factorial_row(300, 0.5, 0.5 * 40 - 200)
        assert np.all(s >= 0)

    def test_large_order_does_not_overflow(self):
        s, lg = gen_factorial_row(2000, 0.5, 50 * 0.5 - 1000)
        assert np.all(np.isfinite(lg[1:])) and lg.max() > 710

    def test_large_row_matches_mpmath(self):
        # exact rational recurrence at u = 60 in mpmath
        a, b, u = mpmath.mpf("0.5"), mpmath.mpf(-30), 60
        with mpmath.workdps(80):
            row = [mpmath.mpf(1)]
            for k in range(u):
                nxt = [mpmath.mpf(0)] * (k + 2)
                for v in range(k + 1):
                    nxt[v] += (k - v * a - b) * row[v]
                    nxt[v + 1] += a * row[v]
                row = nxt
            ref = [float(mpmath.log(x)) for x in row[1:]]
        _, lg = gen_factorial_row(u, 0.5, -30.0)
        np.testing.assert_allclose(lg[1:], ref, rtol=1e-12)


class TestStirling:
    @pytest.mark.parametrize("u,v,b,expected", [(2, 2, 0.0, 1.0), (2, 1, 0.0, 1.0), (2, 1, 3.0, 7.0), (2, 0, 3.0, 12.0)])
    def test_examples(self, u, v, b, expected):
        assert math.exp(signless_stirling_noncentered(u, v, b)) == pytest.approx(expected, rel=1e-14)

    def test_centered_values(self):
        # |s(5, v)| = 24, 50, 35, 10, 1
        np.testing.assert_allclose(np.exp(stirling_row(5)[1:]), [24, 50, 35, 10, 1], rtol=1e-13)

    @pytest.mark.parametrize("b", [0.0, 0.5, 4.0])
    def test_polynomial_identity(self, b):
        for u in range(8):
            row = np.exp(stirling_row(u, b))
            for t in (0.4, 1.0, 3.3):
                assert sum(row[v] * t**v for v in range(u + 1)) == pytest.approx(rising(t + b, u), rel=1e-12)

    def test_negative_b_rejected(self):
        with pytest.raises(ValueError):
            signless_stirling_noncentered(3, 1, -1.0)

    def test_v_above_u(self):
        assert signless_stirling_noncentered(2, 3) == -math.inf


class TestPolygamma:
    def test_examples(self):
        assert digamma(1.0) == pytest.approx(-EULER, abs=1e-13)
        assert digamma(2.0) == pytest.approx(1 - EULER, abs=1e-13)
        assert digamma(0.5) == pytest.approx(-EULER - 2 * math.log(2), abs=1e-13)
        assert trigamma(1.0) == pytest.approx(math.pi**2 / 6, abs=1e-12)
        assert trigamma(2.0) == pytest.approx(math.pi**2 / 6 - 1, abs=1e-12)
        assert trigamma(100.0) == pytest.approx(float(mpmath.psi(1, 100)), rel=1e-12)
        assert trigamma(100.0) == pytest.approx(0.0100502, abs=1e-7)

    @pytest.mark.parametrize("x", [0.1, 0.5, 1.0, 3.7, 50.0])
    def test_recurrence(self, x):
        assert digamma(x + 1) - digamma(x) == pytest.approx(1 / x, abs=1e-12)

    def test_against_mpmath(self):
        xs = np.concatenate([np.logspace(-6, 6, 200), [0.3, 7.5, 9.99, 10.0, 10.01]])
        ref_psi = np.array([float(mpmath.digamma(x)) for x in xs])
        ref_tri = np.array([float(mpmath.psi(1, x)) for x in xs])
        np.testing.assert_allclose(digamma(xs), ref_psi, rtol=1e-14, atol=1e-12)
        np.testing.assert_allclose(trigamma(xs), ref_tri, rtol=1e-10)

    def test_domain(self):
        for f in (digamma, trigamma):
            with pytest.raises(ValueError):
                f(0.0)
            with pytest.raises(ValueError):
                f(-1.5)


def test_signed_logsumexp_cancellation():
    s, lg = signed_logsumexp([1, -1, 1], np.log([5.0, 3.0, 0.5]))
    assert s == 1 and math.exp(lg) == pytest.approx(2.5)
    s, lg = signed_logsumexp([1, -1], [0.0, 0.0])
    assert s == 0 and lg == -np.inf
