import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sfslab import specfun
from sfslab.errors import DomainError
from sfslab.specfun import (ASYMPTOTIC_LIMIT, SERIES_LIMIT, bessel_i0_scaled, bessel_i1_scaled,
                            bessel_j0, bessel_j1, sr_kernel)

mpmath.mp.dps = 60


def series_j(n, x, terms=200):
    """Power-series oracle for J_n at extended precision."""
    x = mpmath.mpf(x)
    h = x / 2
    return float(mpmath.fsum((-1) ** k * h ** (2 * k + n) / (mpmath.factorial(k) * mpmath.factorial(k + n))
                             for k in range(terms)))


def series_i_scaled(n, x, terms=400):
    x = mpmath.mpf(x)
    h = x / 2
    s = mpmath.fsum(h ** (2 * k + n) / (mpmath.factorial(k) * mpmath.factorial(k + n)) for k in range(terms))
    return float(s * mpmath.exp(-x))


def close(value, ref, tol=1e-10):
    """Relative tolerance, absolute near zeros."""
    return abs(value - ref) <= tol * max(abs(ref), 1.0)


J0_ROOT = 2.404825557695773


class TestBesselJ:
    def test_origin(self):
        assert bessel_j0(0.0) == 1.0
        assert bessel_j1(0.0) == 0.0

    def test_first_zero_of_j0(self):
        # bisection on the series oracle
        lo, hi = 2.0, 3.0
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            if series_j(0, mid) > 0:
                lo = mid
            else:
                hi = mid
        assert abs(lo - J0_ROOT) < 1e-14
        assert abs(bessel_j0(J0_ROOT)) < 1e-10

    @pytest.mark.parametrize("x, n", [(5.0, 0), (3.0, 1)])
    def test_spot_values(self, x, n):
        f = bessel_j0 if n == 0 else bessel_j1
        assert close(f(x), series_j(n, x))

    def test_small_argument_j1(self):
        assert abs(bessel_j1(1e-8) / 5e-9 - 1.0) < 1e-8

    def test_dense_series_oracle_0_30(self):
        xs = np.linspace(0.0, 30.0, 301)
        for n, f in ((0, bessel_j0), (1, bessel_j1)):
            got = f(xs)
            for x, g in zip(xs, got):
                assert close(g, series_j(n, x)), (n, x)

    def test_large_arguments_to_100(self):
        xs = np.linspace(30.0, 100.0, 141)
        for n, f in ((0, bessel_j0), (1, bessel_j1)):
            got = f(xs)
            for x, g in zip(xs, got):
                assert close(g, float(mpmath.besselj(n, x))), (n, x)

    @pytest.mark.parametrize("seam", [SERIES_LIMIT, ASYMPTOTIC_LIMIT])
    def test_branches_agree_at_seams(self, seam):
        x = np.array([seam])
        miller = specfun._j_miller(x)
        for n in (0, 1):
            other = specfun._j_series(x, n) if seam == SERIES_LIMIT else specfun._j_hankel(x, n)
            ref = float(mpmath.besselj(n, seam))
            assert close(float(miller[n][0]), ref)
            assert close(float(other[0]), ref)
            assert abs(miller[n][0] - other[0]) < 1e-10

    def test_j1_is_odd_and_j0_even(self):
        xs = np.linspace(0.1, 60.0, 97)
        np.testing.assert_array_equal(bessel_j1(-xs), -bessel_j1(xs))
        np.testing.assert_array_equal(bessel_j0(-xs), bessel_j0(xs))

    def test_derivative_identity(self):
        # d/dx [x J1(x)] = x J0(x)
        rng = np.random.default_rng(7)
        xs = rng.uniform(0.1, 20.0, 100)
        h = 1e-5
        lhs = ((xs + h) * bessel_j1(xs + h) - (xs - h) * bessel_j1(xs - h)) / (2 * h)
        np.testing.assert_allclose(lhs, xs * bessel_j0(xs), atol=1e-6, rtol=0)

    @pytest.mark.parametrize("bad", [math.nan, math.inf, -math.inf])
    def test_non_finite_rejected(self, bad):
        with pytest.raises(DomainError):
            bessel_j0(bad)
        with pytest.raises(DomainError):
            bessel_j1(np.array([1.0, bad]))

    def test_scalar_and_array_shapes(self):
        assert isinstance(bessel_j0(1.0), float)
        assert bessel_j1(np.ones((3, 2))).shape == (3, 2)


class TestSrKernel:
    def test_origin_and_continuity(self):
        assert sr_kernel(0.0) == 1.0
        assert abs(sr_kernel(1e-12) - 1.0) < 1e-9

    def test_spot_value(self):
        assert close(sr_kernel(4.0), series_j(1, 4.0) / 2.0)

    @settings(max_examples=200, deadline=None)
    @given(st.floats(min_value=0.0, max_value=1e-3, exclude_min=True))
    def test_quadratic_expansion(self, u):
        # u^2 underflows double resolution for tiny u; allow one ulp of 1
        assert abs(sr_kernel(u) - (1.0 - u / 2.0)) < u * u + np.finfo(float).eps

    @settings(max_examples=100, deadline=None)
    @given(st.floats(min_value=0.0, max_value=225.0))
    def test_matches_series_oracle(self, u):
        if u == 0:
            return
        ref = series_j(1, 2.0 * math.sqrt(u)) / math.sqrt(u)
        assert close(sr_kernel(u), ref)

    def test_negative_rejected(self):
        with pytest.raises(DomainError):
            sr_kernel(-1e-3)


class TestScaledI:
    def test_origin(self):
        assert bessel_i0_scaled(0.0) == 1.0
        assert bessel_i1_scaled(0.0) == 0.0

    def test_fifty_against_series(self):
        assert close(bessel_i0_scaled(50.0), series_i_scaled(0, 50.0))
        assert close(bessel_i1_scaled(50.0), series_i_scaled(1, 50.0))

    def test_range_to_100(self):
        xs = np.linspace(0.0, 100.0, 201)
        for n, f in ((0, bessel_i0_scaled), (1, bessel_i1_scaled)):
            got = f(xs)
            for x, g in zip(xs, got):
                ref = float(mpmath.besseli(n, x) * mpmath.exp(-x))
                assert abs(g - ref) <= 1e-10 * abs(ref) + (1e-300 if x == 0 else 0), (n, x)

    def test_no_overflow_at_large_argument(self):
        for x in (700.0, 1e4, 1e6):
            i0, i1 = bessel_i0_scaled(x), bessel_i1_scaled(x)
            assert math.isfinite(i0) and math.isfinite(i1)
            ref = 1.0 / math.sqrt(2 * math.pi * x)
            assert abs(i0 / ref - 1.0) < 1.0 / x

    @settings(max_examples=200, deadline=None)
    @given(st.floats(min_value=1e-9, max_value=1e6))
    def test_bounds(self, x):
        i0, i1 = bessel_i0_scaled(x), bessel_i1_scaled(x)
        assert 0.0 < i0 <= 1.0
        assert 0.0 <= i1 < i0

    def test_monotone_decreasing_i0(self):
        xs = np.linspace(0.0, 200.0, 2001)
        assert np.all(np.diff(bessel_i0_scaled(xs)) < 0)

    def test_negative_rejected(self):
        with pytest.raises(DomainError):
            bessel_i0_scaled(-1.0)
        with pytest.raises(DomainError):
            bessel_i1_scaled(np.array([0.5, -0.5]))
