"""Regime classification, optimizers, constants, and approximants."""

import math

import numpy as np
import pytest
from scipy import optimize

from ruin2d import (
    ModelParams,
    ParameterError,
    Regime,
    approximant,
    classify,
    critical_rho,
    crossing_exp_integral_limit,
    curvature_constant,
    drift_constant,
    exp_rates,
    gaussian_sum_limit,
    level_weights,
    log_decay_rate,
    minimize_quad_form,
    norm_cdf,
    quad_form,
    single_ruin,
    t_star,
)
from ruin2d.asymptotics import taylor_coefficient_t


class TestCriticalRho:
    def test_at_one(self):
        assert critical_rho(1.0) == pytest.approx(-0.5, abs=1e-15)
        assert critical_rho(1.0, alt=True) == pytest.approx(-0.5, abs=1e-15)

    def test_at_half(self):
        assert critical_rho(0.5) == pytest.approx((1 - math.sqrt(3)) / 2, abs=1e-15)
        assert critical_rho(0.5, alt=True) == pytest.approx(
            (1 - math.sqrt(8.25)) / 2, abs=1e-15
        )

    def test_small_a_expansion(self):
        # leading behaviour -a + O(a^3)
        for a in (1e-2, 1e-3):
            assert critical_rho(a) == pytest.approx(-a, abs=5 * a**3)

    def test_in_range(self):
        for a in np.linspace(0.01, 1.0, 50):
            assert -1.0 < critical_rho(float(a)) < 0.0

    def test_rejects_bad_ratio(self):
        for a in (0.0, -0.5, 1.2):
            with pytest.raises(ParameterError):
                critical_rho(a)

    def test_crossing_characterization(self):
        # t* lies inside (0, 1) exactly below the critical correlation: the
        # dense-sample oracle that pins down which closed form is correct.
        for a in np.linspace(0.05, 1.0, 40):
            boundary = critical_rho(float(a))
            for rho in np.linspace(-0.99, 0.99, 199):
                if abs(rho) < 1e-12 or abs(rho - boundary) < 1e-9:
                    continue
                if abs(2 * a * rho - 1.0) < 1e-12:
                    continue
                ts = t_star(float(rho), float(a))
                assert (0.0 < ts < 1.0) == (rho < boundary)


class TestClassify:
    @pytest.mark.parametrize(
        "rho,a,expected",
        [
            (0.7, 0.3, Regime.DIM_REDUCTION_STRICT),
            (0.4, 0.4, Regime.DIM_REDUCTION_EQUAL),
            (-0.5, 1.0, Regime.FULL_DIM_III),
            ((1 - math.sqrt(3)) / 2, 0.5, Regime.FULL_DIM_II),
            (-0.9, 0.5, Regime.FULL_DIM_IV),
            (-0.8, 1.0, Regime.FULL_DIM_V),
            (0.2, 0.5, Regime.FULL_DIM_I),
            (-0.2, 1.0, Regime.FULL_DIM_I),
        ],
    )
    def test_examples(self, rho, a, expected):
        assert classify(rho, a) is expected

    def test_boundary_flip(self):
        tol = 1e-9
        for a in (0.3, 0.7, 1.0):
            boundary = critical_rho(a)
            below = classify(boundary - 2 * tol, a, tol=tol)
            at = classify(boundary, a, tol=tol)
            above = classify(boundary + 2 * tol, a, tol=tol)
            if a == 1.0:
                assert (below, at, above) == (
                    Regime.FULL_DIM_V, Regime.FULL_DIM_III, Regime.FULL_DIM_I
                )
            else:
                assert (below, at, above) == (
                    Regime.FULL_DIM_IV, Regime.FULL_DIM_II, Regime.FULL_DIM_I
                )

    def test_total_on_admissible_sample(self):
        rng = np.random.Generator(np.random.PCG64(2))
        for _ in range(500):
            a = float(rng.uniform(0.01, 1.0))
            rho = float(rng.uniform(-0.99, 0.99))
            if 0.0 < rho < 1.0 or a > max(0.0, rho):
                assert classify(rho, a) in Regime

    def test_alt_form_changes_boundary(self):
        # at a=0.5 the alternative form sits near -0.936, far below -0.366
        assert classify(-0.6, 0.5) is Regime.FULL_DIM_IV
        assert classify(-0.6, 0.5, alt_critical=True) is Regime.FULL_DIM_I

    def test_rejects_outside_rectangle(self):
        with pytest.raises(ParameterError):
            classify(1.0, 0.5)
        with pytest.raises(ParameterError):
            classify(0.2, 1.5)
        with pytest.raises(ParameterError):
            classify(0.2, 0.5, tol=-1.0)


class TestTStarAndRates:
    def test_substitutions(self):
        assert t_star(-1.0, 1.0) == pytest.approx(1.0 / 3.0, abs=1e-15)
        assert t_star(-0.5, 0.5) == pytest.approx(2.0 / 3.0, abs=1e-15)

    def test_undefined_denominator(self):
        with pytest.raises(ParameterError):
            t_star(0.0, 0.7)

    def test_matches_1d_search_in_interior_regime(self):
        rng = np.random.Generator(np.random.PCG64(9))
        count = 0
        while count < 20:
            a = float(rng.uniform(0.1, 1.0))
            rho = float(rng.uniform(-0.95, critical_rho(a) - 0.01))
            if rho <= -0.99:
                continue
            res = optimize.minimize_scalar(
                lambda t: quad_form(1.0, t, rho, a),
                bounds=(1e-6, 1.0),
                method="bounded",
                options={"xatol": 1e-10},
            )
            assert t_star(rho, a) == pytest.approx(res.x, abs=1e-6)
            count += 1

    def test_exp_rates(self):
        assert exp_rates(0.0, 0.7) == pytest.approx((1.0, 0.7))
        assert exp_rates(-0.5, 1.0) == pytest.approx((2.0, 2.0))

    def test_exp_rates_equal_unit_time_weights(self):
        for rho, a in ((-0.3, 0.8), (0.1, 0.5), (-0.7, 1.0)):
            assert exp_rates(rho, a) == pytest.approx(
                level_weights(1.0, 1.0, rho, a), abs=1e-14
            )


class TestMinimizeQuadForm:
    def test_corner_case_positive_rho(self):
        res = minimize_quad_form(0.3, 0.9)
        assert res.points == ((1.0, 1.0),)

    def test_symmetric_pair(self):
        res = minimize_quad_form(-0.8, 1.0)
        ts = 1.0 / ((-0.8) * (2 * (-0.8) - 1.0))
        assert res.points == ((1.0, pytest.approx(ts, abs=1e-12)),
                              (pytest.approx(ts, abs=1e-12), 1.0))
        assert ts == pytest.approx(0.4807692307692307, abs=1e-12)
        q1 = quad_form(*res.points[0], -0.8, 1.0)
        q2 = quad_form(*res.points[1], -0.8, 1.0)
        assert q1 == pytest.approx(q2, rel=1e-12)

    def test_against_grid_sample(self):
        rng = np.random.Generator(np.random.PCG64(21))
        grid = np.linspace(1.0 / 300, 1.0, 300)
        s_col = grid[:, None]
        t_row = grid[None, :]
        m = np.minimum(s_col, t_row)
        for _ in range(50):
            a = float(rng.uniform(0.05, 1.0))
            lo, hi = -0.95, min(a, 0.95) - 1e-3
            if hi <= lo:
                continue
            rho = float(rng.uniform(lo, hi))
            q = (t_row - 2 * a * rho * m + a * a * s_col) / (
                s_col * t_row - (rho * m) ** 2
            )
            res = minimize_quad_form(rho, a)
            # closed form can never lose to a feasible grid node
            assert res.q_min <= float(q.min()) + 1e-12
            assert abs(res.q_min - float(q.min())) <= 1e-3

    def test_rejects_dim_reduction_parameters(self):
        with pytest.raises(ParameterError):
            minimize_quad_form(0.7, 0.3)

    def test_decay_rate_values(self):
        assert log_decay_rate(0.0, 1.0) == pytest.approx(1.0, abs=1e-14)
        assert log_decay_rate(-0.5, 0.5) == pytest.approx(1.125, abs=1e-12)


class TestDriftConstant:
    def test_zero_drifts(self):
        assert drift_constant(0.0, 0.0, 0.7, -0.4, 0.8) == 0.0

    def test_linearity(self):
        rng = np.random.Generator(np.random.PCG64(31))
        for _ in range(200):
            rho = float(rng.uniform(-0.9, 0.9))
            a = float(rng.uniform(0.1, 1.0))
            t = float(rng.uniform(0.1, 1.0))
            c = rng.uniform(-2, 2, size=2)
            d = rng.uniform(-2, 2, size=2)
            al, be = rng.uniform(-3, 3, size=2)
            lhs = drift_constant(
                al * c[0] + be * d[0], al * c[1] + be * d[1], t, rho, a
            )
            rhs = al * drift_constant(c[0], c[1], t, rho, a) + be * drift_constant(
                d[0], d[1], t, rho, a
            )
            assert abs(lhs - rhs) <= 1e-10 * max(1.0, abs(lhs))

    def test_doubling_homogeneity(self):
        m = drift_constant(0.7, -0.2, 0.5, -0.6, 0.5)
        m2 = drift_constant(1.4, -0.4, 0.5, -0.6, 0.5)
        assert m2 == pytest.approx(2 * m, rel=1e-12)

    @pytest.mark.parametrize(
        "rho,a,c1,c2",
        [(-0.9, 0.5, 0.5, 0.5), (-0.9, 0.5, 1.0, -0.3), (-0.7, 1.0, 0.4, 0.8)],
    )
    def test_finite_u_shift_oracle(self, rho, a, c1, c2):
        # The drift constant is the u -> infinity rate at which the local
        # weight sum tilts when the second time slides off the optimizer:
        #   S ~ M * (l-1) * step / u  for the first row (k = 1).
        ts = t_star(rho, a)
        assert 0 < ts < 1
        u = 1e6
        step = 1.0
        ell = 11
        l_u = ts - (ell - 1) * step / u**2
        k_u = 1.0
        sig_lu = np.array([[k_u, rho * l_u], [rho * l_u, l_u]])
        sig_ts = np.array([[1.0, rho * ts], [rho * ts, ts]])
        cvec = np.array([c1, c2])
        av = np.array([u + c1, a * u + c2])
        s_val = -cvec @ (np.linalg.inv(sig_lu) - np.linalg.inv(sig_ts)) @ av
        s_val += (
            np.array([0.0, c2 * (ell - 1) * step / u**2])
            @ np.linalg.inv(sig_ts)
            @ np.array([u + c1 * k_u, a * u + c2 * l_u])
        )
        limit = u * s_val / ((ell - 1) * step)
        assert limit == pytest.approx(drift_constant(c1, c2, ts, rho, a), rel=1e-3)

    def test_finite_u_shift_oracle_at_unit_time(self):
        rho, a, c1, c2 = -0.2, 0.8, 0.6, 0.9
        u, step, ell = 1e6, 1.0, 21
        l_u = 1.0 - (ell - 1) * step / u**2
        sig_lu = np.array([[1.0, rho * l_u], [rho * l_u, l_u]])
        sig_1 = np.array([[1.0, rho], [rho, 1.0]])
        cvec = np.array([c1, c2])
        av = np.array([u + c1, a * u + c2])
        s_val = -cvec @ (np.linalg.inv(sig_lu) - np.linalg.inv(sig_1)) @ av
        s_val += (
            np.array([0.0, c2 * (ell - 1) * step / u**2])
            @ np.linalg.inv(sig_1)
            @ np.array([u + c1, a * u + c2 * l_u])
        )
        limit = u * s_val / ((ell - 1) * step)
        assert limit == pytest.approx(drift_constant(c1, c2, 1.0, rho, a), rel=1e-3)

    def test_rejects_bad_time(self):
        with pytest.raises(ParameterError):
            drift_constant(0.1, 0.1, 0.0, 0.3, 0.5)
        with pytest.raises(ParameterError):
            drift_constant(0.1, 0.1, 1.5, 0.3, 0.5)


class TestCurvatureConstant:
    def test_boundary_value(self):
        assert curvature_constant(Regime.FULL_DIM_III, -0.5, 1.0) == pytest.approx(
            4.0 / 3.0, abs=1e-15
        )

    def test_case_iv_worked_example(self):
        val = curvature_constant(Regime.FULL_DIM_IV, -0.9, 0.5)
        assert val == pytest.approx(0.729 * 1.9**4 / 0.725, rel=1e-12)
        assert val == pytest.approx(13.104, abs=1e-3)

    def test_case_v_is_case_iv_at_unit_ratio(self):
        for rho in (-0.6, -0.75, -0.9):
            assert curvature_constant(Regime.FULL_DIM_V, rho, 1.0) == pytest.approx(
                curvature_constant(Regime.FULL_DIM_IV, rho, 1.0), rel=1e-15
            )

    def test_matches_second_derivative_of_quad_form(self):
        # the defining property: the constant is half the transverse second
        # derivative of q_a at the optimizer (one-sided at the t = 1 corner)
        def half_qtt(rho, a, t0, eps=1e-5):
            q0 = quad_form(1.0, t0, rho, a)
            qm = quad_form(1.0, t0 - eps, rho, a)
            if t0 + eps <= 1.0:
                qp = quad_form(1.0, t0 + eps, rho, a)
                return 0.5 * (qp - 2 * q0 + qm) / eps**2
            q2m = quad_form(1.0, t0 - 2 * eps, rho, a)
            return 0.5 * (q2m - 2 * qm + q0) / eps**2

        cases = [
            (Regime.FULL_DIM_II, critical_rho(0.4), 0.4, 1.0),
            (Regime.FULL_DIM_II, critical_rho(0.7), 0.7, 1.0),
            (Regime.FULL_DIM_III, -0.5, 1.0, 1.0),
            (Regime.FULL_DIM_IV, -0.9, 0.5, t_star(-0.9, 0.5)),
            (Regime.FULL_DIM_IV, -0.7, 0.4, t_star(-0.7, 0.4)),
            (Regime.FULL_DIM_V, -0.8, 1.0, t_star(-0.8, 1.0)),
        ]
        for regime, rho, a, t0 in cases:
            assert curvature_constant(regime, rho, a) == pytest.approx(
                half_qtt(rho, a, t0), rel=1e-4
            )

    def test_positive_in_each_regime(self):
        rng = np.random.Generator(np.random.PCG64(17))
        n = 0
        while n < 10_000:
            a = float(rng.uniform(0.02, 1.0))
            rho = float(rng.uniform(-0.99, min(a, 0.99) - 1e-6))
            boundary = critical_rho(a)
            if rho < boundary:
                regime = Regime.FULL_DIM_V if a == 1.0 else Regime.FULL_DIM_IV
            else:
                regime = Regime.FULL_DIM_II  # formula also covers the boundary
                rho = boundary
            assert curvature_constant(regime, rho, a) > 0.0
            n += 1

    def test_rejects_regimes_without_constant(self):
        with pytest.raises(ParameterError):
            curvature_constant(Regime.FULL_DIM_I, 0.2, 0.5)
        with pytest.raises(ParameterError):
            curvature_constant(Regime.DIM_REDUCTION_STRICT, 0.7, 0.3)


class TestTaylorCoefficient:
    def test_sign_change_at_boundary(self):
        for a in (0.25, 0.5, 0.75, 1.0):
            boundary = critical_rho(a)
            assert taylor_coefficient_t(boundary - 1e-6, a) < 0
            assert taylor_coefficient_t(boundary + 1e-6, a) > 0
            assert abs(taylor_coefficient_t(boundary, a)) < 1e-12


class TestApproximant:
    def test_dim_reduction_strict_is_single_ruin(self):
        p = ModelParams.from_ratio(0.7, 0.4, 0.2, 3.0, 0.3)
        res = approximant(p)
        assert res.regime is Regime.DIM_REDUCTION_STRICT
        assert res.u_power == 0
        assert res.density_points == ()
        assert res.value == pytest.approx(single_ruin(0.4, 3.0, 1.0), rel=1e-14)

    def test_dim_reduction_equal_prefactor(self):
        rho = 0.4
        p = ModelParams.from_ratio(rho, 1.0, rho * 1.0, 3.0, rho)
        res = approximant(p)
        assert res.regime is Regime.DIM_REDUCTION_EQUAL
        # argument collapses to zero when c2 = rho * c1
        assert res.prefactor == pytest.approx(0.5, abs=1e-14)
        assert res.value == pytest.approx(0.5 * single_ruin(1.0, 3.0, 1.0), rel=1e-13)

    def test_equal_prefactor_in_unit_interval(self):
        rng = np.random.Generator(np.random.PCG64(23))
        for _ in range(100):
            rho = float(rng.uniform(0.05, 0.95))
            c1 = float(rng.uniform(-2, 2))
            c2 = float(rng.uniform(-2, 2))
            pre = norm_cdf((rho * c1 - c2) / math.sqrt(1 - rho * rho))
            assert 0.0 < pre < 1.0

    def test_regime_i_needs_constant(self):
        p = ModelParams.from_ratio(0.2, 0.0, 0.0, 4.0, 0.5)
        with pytest.raises(ParameterError):
            approximant(p)
        res = approximant(p, c1_constant=7.0)
        assert res.u_power == -2
        assert len(res.density_points) == 1

    def test_regime_ii_zero_drift_prefactor(self):
        a = 0.5
        rho = critical_rho(a)
        lam1, _ = exp_rates(rho, a)
        tau = curvature_constant(Regime.FULL_DIM_II, rho, a)
        p = ModelParams.from_ratio(rho, 0.0, 0.0, 5.0, a)
        res = approximant(p)
        assert res.regime is Regime.FULL_DIM_II
        expected = (2 * a / lam1) * math.sqrt(2 * math.pi / tau) * 0.5
        assert res.prefactor == pytest.approx(expected, rel=1e-13)
        assert res.u_power == -1

    def test_density_point_counts(self):
        cases = [
            (ModelParams.from_ratio(0.2, 0.1, 0.1, 4.0, 0.5), 1, {"c1_constant": 5.0}),
            (ModelParams.from_ratio(critical_rho(0.5), 0.0, 0.0, 4.0, 0.5), 1, {}),
            (ModelParams.from_ratio(-0.5, 0.2, 0.1, 4.0, 1.0), 1, {}),
            (ModelParams.from_ratio(-0.9, 0.2, 0.1, 4.0, 0.5), 1, {}),
            (ModelParams.from_ratio(-0.8, 0.2, 0.1, 4.0, 1.0), 2, {}),
        ]
        for params, n_points, kw in cases:
            res = approximant(params, **kw)
            assert len(res.density_points) == n_points
            assert len(res.term_weights) == n_points
            assert res.value >= 0.0

    def test_symmetric_case_swap_invariance(self):
        c1, c2, u = 0.7, -0.3, 4.0
        p = ModelParams.from_ratio(-0.8, c1, c2, u, 1.0)
        q = ModelParams.from_ratio(-0.8, c2, c1, u, 1.0)
        rp, rq = approximant(p), approximant(q)
        assert rp.regime is Regime.FULL_DIM_V
        assert rp.value == pytest.approx(rq.value, rel=1e-12)
        # swapping drifts swaps the two density terms
        assert rp.density_points[0][0][0] == pytest.approx(u + c1)
        assert rq.density_points[1][0][1] == pytest.approx(u + c1)

    def test_regime_mismatch_rejected(self):
        p = ModelParams.from_ratio(0.2, 0.0, 0.0, 4.0, 0.5)
        with pytest.raises(ParameterError):
            approximant(p, regime=Regime.FULL_DIM_IV)

    def test_requires_positive_u(self):
        with pytest.raises(ParameterError):
            approximant(ModelParams(0.2, 0.0, 0.0, 0.0, 0.0))


class TestScalarLimits:
    def test_crossing_one_sided(self):
        assert crossing_exp_integral_limit(1.0, 1.0, "one_sided") == pytest.approx(2.0)
        assert crossing_exp_integral_limit(2.0, 1.0, "one_sided") == pytest.approx(
            1.0 / 3.0 + 1.0
        )

    def test_crossing_normalized(self):
        assert crossing_exp_integral_limit(1.0, None, "normalized") == 1.0
        assert crossing_exp_integral_limit(0.25, None, "normalized") == 0.25

    def test_crossing_rejects(self):
        with pytest.raises(ParameterError):
            crossing_exp_integral_limit(1.0, 2.0, "one_sided")
        with pytest.raises(ParameterError):
            crossing_exp_integral_limit(-1.0, None, "normalized")
        with pytest.raises(ParameterError):
            crossing_exp_integral_limit(1.0, 1.0, "bogus")

    def test_gaussian_sum_values(self):
        root = math.sqrt(2 * math.pi)
        assert gaussian_sum_limit(1.0, 0.0, "one_sided") == pytest.approx(root / 2)
        assert gaussian_sum_limit(1.0, 0.0, "two_sided") == pytest.approx(root)

    def test_gaussian_sum_rejects(self):
        with pytest.raises(ParameterError):
            gaussian_sum_limit(0.0, 1.0, "one_sided")
        with pytest.raises(ParameterError):
            gaussian_sum_limit(1.0, 1.0, "sideways")
