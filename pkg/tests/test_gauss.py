"""Gaussian numerics and covariance algebra."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from ruin2d import (
    Matrix2,
    ParameterError,
    biv_normal_pdf,
    biv_survival,
    brownian_cov,
    level_weights,
    norm_cdf,
    norm_sf,
    quad_form,
)
from ruin2d.gauss import log_norm_cdf, norm_pdf


def cdf_quadrature_oracle(x: float) -> float:
    """Independent high-accuracy CDF: quadrature of the density from 0."""
    val, _ = integrate.quad(norm_pdf, 0.0, x, epsabs=1e-14, epsrel=1e-13)
    return 0.5 + val


class TestNormCdf:
    def test_center(self):
        assert norm_cdf(0.0) == 0.5

    def test_against_quadrature(self):
        for x in (-3.0, -1.2, 0.31, 1.0, 2.5, 5.0, 7.9):
            assert abs(norm_cdf(x) - cdf_quadrature_oracle(x)) <= 1e-12

    def test_one(self):
        assert abs(norm_cdf(1.0) - 0.841344746068543) <= 1e-12

    def test_limits(self):
        assert norm_cdf(math.inf) == 1.0
        assert norm_cdf(-math.inf) == 0.0
        assert norm_sf(math.inf) == 0.0
        assert norm_sf(-math.inf) == 1.0

    def test_tail_relative_accuracy(self):
        # Psi must keep relative accuracy where 1 - Phi is pure cancellation.
        for x in (10.0, 15.0, 20.0, 30.0):
            tail, _ = integrate.quad(norm_pdf, x, x + 40.0, epsabs=0, epsrel=1e-13)
            assert norm_sf(x) == pytest.approx(tail, rel=1e-10)
            # classic envelope phi(x)(1/x - 1/x^3) < Psi(x) < phi(x)/x
            assert norm_pdf(x) * (1 / x - 1 / x**3) < norm_sf(x) < norm_pdf(x) / x

    def test_log_cdf_far_left(self):
        assert log_norm_cdf(-40.0) == pytest.approx(-804.608442013754, rel=1e-12)

    @given(st.floats(-8, 8))
    @settings(max_examples=200, deadline=None)
    def test_cdf_plus_sf_is_one(self, x):
        assert abs(norm_cdf(x) + norm_sf(x) - 1.0) <= 1e-14

    def test_strictly_increasing_on_grid(self):
        xs = np.linspace(-8, 8, 400)
        vals = [norm_cdf(float(x)) for x in xs]
        assert all(b > a for a, b in zip(vals, vals[1:]))


class TestCovMatrix:
    def test_unit_times(self):
        m = brownian_cov(1.0, 1.0, 0.5)
        assert (m.m11, m.m12, m.m22) == (1.0, 0.5, 1.0)

    def test_min_rule(self):
        m = brownian_cov(0.5, 1.0, -0.3)
        assert (m.m11, m.m12, m.m22) == (0.5, -0.15, 1.0)

    def test_det_formula(self):
        for t in (0.2, 0.7, 1.0):
            for rho in (-0.8, 0.0, 0.6):
                m = brownian_cov(1.0, t, rho)
                assert m.det == pytest.approx(t - rho**2 * t**2, abs=1e-15)

    @pytest.mark.parametrize("s,t,rho", [(0.0, 1.0, 0.5), (1.0, -0.1, 0.5), (1.0, 1.0, 1.0)])
    def test_rejects_degenerate(self, s, t, rho):
        with pytest.raises(ParameterError):
            brownian_cov(s, t, rho)

    @given(
        st.floats(0.01, 1.0),
        st.floats(0.01, 1.0),
        st.floats(-0.99, 0.99),
    )
    @settings(max_examples=200, deadline=None)
    def test_positive_definite(self, s, t, rho):
        m = brownian_cov(s, t, rho)
        assert m.is_pos_def()
        # eigenvalue floor: smallest eigenvalue of a 2x2 SPD matrix
        tr, det = m.m11 + m.m22, m.det
        lam_min = (tr - math.sqrt(tr * tr - 4 * det)) / 2
        assert lam_min > 0


class TestBivNormalPdf:
    def test_identity_factorizes(self):
        m = Matrix2(1.0, 0.0, 1.0)
        for x, y in ((0.0, 0.0), (1.0, -0.5), (2.0, 2.0)):
            assert biv_normal_pdf(x, y, m) == pytest.approx(
                norm_pdf(x) * norm_pdf(y), rel=1e-14
            )

    def test_mode_height(self):
        m = brownian_cov(1.0, 0.7, -0.4)
        assert biv_normal_pdf(0.0, 0.0, m) == pytest.approx(
            1.0 / (2 * math.pi * math.sqrt(m.det)), rel=1e-14
        )

    def test_exchangeable_when_equal_times(self):
        m = brownian_cov(0.8, 0.8, 0.6)
        assert biv_normal_pdf(1.3, -0.2, m) == biv_normal_pdf(-0.2, 1.3, m)

    def test_rejects_indefinite(self):
        with pytest.raises(ParameterError):
            biv_normal_pdf(0.0, 0.0, Matrix2(1.0, 2.0, 1.0))


def survival_dblquad_oracle(u, v, sigma, err_cap=1e-10):
    """Independent 2-D adaptive quadrature of the density."""

    def pdf(y, x):
        return biv_normal_pdf(x, y, sigma)

    hi = 9.0 * math.sqrt(max(sigma.m11, sigma.m22))
    val, err = integrate.dblquad(pdf, u, hi, v, hi, epsabs=1e-12)
    assert err < err_cap
    return val


class TestBivSurvival:
    def test_independent_product_rule(self):
        sigma = Matrix2(1.0, 0.0, 4.0)
        for u, v in ((0.3, -0.7), (1.5, 2.0), (-2.0, 0.0)):
            assert abs(
                biv_survival(u, v, sigma) - norm_sf(u) * norm_sf(v / 2.0)
            ) <= 1e-12

    def test_sheppard_orthant(self):
        sigma = Matrix2(1.0, 0.5, 1.0)
        expected = 0.25 + math.asin(0.5) / (2 * math.pi)
        assert biv_survival(0.0, 0.0, sigma) == pytest.approx(expected, abs=1e-11)
        assert expected == pytest.approx(1.0 / 3.0, abs=1e-15)

    def test_against_dblquad(self):
        sigma = Matrix2(1.0, 0.3, 1.0)
        assert abs(
            biv_survival(1.0, 0.5, sigma) - survival_dblquad_oracle(1.0, 0.5, sigma)
        ) <= 1e-10

    def test_against_dblquad_varied(self):
        rng = np.random.Generator(np.random.PCG64(42))
        for _ in range(5):
            s = float(rng.uniform(0.3, 1.0))
            t = float(rng.uniform(0.3, 1.0))
            rho = float(rng.uniform(-0.9, 0.9))
            sigma = brownian_cov(s, t, rho)
            u = float(rng.uniform(-1.5, 2.0))
            v = float(rng.uniform(-1.5, 2.0))
            oracle = survival_dblquad_oracle(u, v, sigma, err_cap=5e-8)
            assert abs(biv_survival(u, v, sigma) - oracle) <= 5e-8

    def test_marginal_bound(self):
        rng = np.random.Generator(np.random.PCG64(3))
        for _ in range(50):
            sigma = brownian_cov(
                float(rng.uniform(0.2, 1.0)),
                float(rng.uniform(0.2, 1.0)),
                float(rng.uniform(-0.95, 0.95)),
            )
            u = float(rng.uniform(-2, 3))
            v = float(rng.uniform(-2, 3))
            bound = min(
                norm_sf(u / math.sqrt(sigma.m11)), norm_sf(v / math.sqrt(sigma.m22))
            )
            assert biv_survival(u, v, sigma) <= bound + 1e-12

    def test_deep_tail_absolute_accuracy(self):
        sigma = Matrix2(1.0, 0.4, 1.0)
        val = biv_survival(8.0, 8.0, sigma)
        assert 0.0 <= val <= norm_sf(8.0)

    def test_rejects_indefinite(self):
        with pytest.raises(ParameterError):
            biv_survival(0.0, 0.0, Matrix2(1.0, 1.1, 1.0))


class TestQuadFormAndWeights:
    def test_symmetric_unit_case(self):
        # a = 1, s = t = 1 collapses to 2 / (1 + rho)
        assert quad_form(1.0, 1.0, -0.5, 1.0) == pytest.approx(4.0, abs=1e-14)

    def test_worked_value(self):
        assert quad_form(1.0, 2.0 / 3.0, -0.5, 0.5) == pytest.approx(2.25, abs=1e-12)

    def test_matches_matrix_inverse(self):
        rng = np.random.Generator(np.random.PCG64(11))
        for _ in range(10_000):
            s = float(rng.uniform(0.05, 1.0))
            t = float(rng.uniform(0.05, 1.0))
            rho = float(rng.uniform(-0.95, 0.95))
            a = float(rng.uniform(0.05, 1.0))
            cov = np.array([[s, rho * min(s, t)], [rho * min(s, t), t]])
            av = np.array([1.0, a])
            expected = float(av @ np.linalg.solve(cov, av))
            assert abs(quad_form(s, t, rho, a) - expected) <= 1e-12 * max(1.0, expected)

    def test_weights_at_unit_times(self):
        rho, a = -0.3, 0.8
        b1, b2 = level_weights(1.0, 1.0, rho, a)
        den = 1 - rho * rho
        assert b1 == pytest.approx((1 - a * rho) / den, abs=1e-14)
        assert b2 == pytest.approx((a - rho) / den, abs=1e-14)

    def test_weights_cancellation_at_equal_ratio(self):
        # a = rho and s < t makes the second weight vanish identically.
        rho = a = 0.6
        for s, t in ((0.3, 0.9), (0.5, 0.7)):
            _, b2 = level_weights(s, t, rho, a)
            assert b2 == pytest.approx(0.0, abs=1e-15)

    def test_weights_residual(self):
        rng = np.random.Generator(np.random.PCG64(12))
        for _ in range(2_000):
            s = float(rng.uniform(0.05, 1.0))
            t = float(rng.uniform(0.05, 1.0))
            rho = float(rng.uniform(-0.95, 0.95))
            a = float(rng.uniform(0.05, 1.0))
            b1, b2 = level_weights(s, t, rho, a)
            m = brownian_cov(s, t, rho)
            r1 = m.m11 * b1 + m.m12 * b2 - 1.0
            r2 = m.m12 * b1 + m.m22 * b2 - a
            assert max(abs(r1), abs(r2)) <= 1e-12

    def test_weights_positive_on_diagonal(self):
        rng = np.random.Generator(np.random.PCG64(13))
        for _ in range(500):
            rho = float(rng.uniform(-0.95, 0.95))
            a = float(rng.uniform(max(0.0, rho) + 0.01, 1.0))
            s = float(rng.uniform(0.05, 1.0))
            b1, b2 = level_weights(s, s, rho, a)
            assert b1 > 0 and b2 > 0

    def test_rejects_degenerate_times(self):
        with pytest.raises(ParameterError):
            quad_form(0.0, 1.0, 0.2, 0.5)
        with pytest.raises(ParameterError):
            level_weights(1.0, 0.0, 0.2, 0.5)
