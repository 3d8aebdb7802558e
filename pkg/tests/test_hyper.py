import math

import numpy as np
import pytest

from fpdecay import (
    DomainError,
    GaussianMixture,
    HyperParams,
    QuadratureSpec,
    e2_mixture,
    entropic_hyper_rhs,
    equilibrium_mixture,
    fitted_params,
    hyper_rhs,
    verify_hypercontractivity,
    waiting_time_T0,
    waiting_time_t0,
    waiting_time_t0bar,
    waiting_time_t1,
    weighted_mass,
)


def single_gaussian(mean, cov) -> GaussianMixture:
    mean = np.atleast_1d(np.asarray(mean, dtype=float))
    cov = np.atleast_2d(np.asarray(cov, dtype=float))
    return GaussianMixture(np.array([1.0]), mean[None, :], cov[None, :, :])


class TestWeightedMass:
    def test_zero_exponent_gives_mass(self):
        mix = GaussianMixture(
            np.array([0.4, 0.6]), np.zeros((2, 1)), np.array([[[1.0]], [[0.5]]])
        )
        assert weighted_mass(mix, 0.0) == pytest.approx(1.0)

    def test_unit_gaussian_quarter_exponent(self):
        assert weighted_mass(single_gaussian([0.0], [[1.0]]), 0.25) == pytest.approx(
            math.sqrt(2.0), rel=1e-12
        )

    def test_wide_gaussian_infinite(self):
        assert math.isinf(weighted_mass(single_gaussian([0.0], [[2.5]]), 0.25))

    def test_mean_shift_increases_mass(self):
        base = weighted_mass(single_gaussian([0.0], [[1.0]]), 0.2)
        shifted = weighted_mass(single_gaussian([1.0], [[1.0]]), 0.2)
        assert shifted > base


class TestWaitingTimes:
    PARAMS_SIMPLE = HyperParams(mu=1.0, n=0, c=1.0, c2=1.0)

    def test_t1_monotone_in_eps(self):
        p = HyperParams(mu=1.0, n=1, c=2.0)
        assert waiting_time_t1(0.05, p) > waiting_time_t1(0.1, p) > waiting_time_t1(1.0, p)

    def test_t1_closed_value_no_defect(self):
        # alpha = mu/2, c = 1, eps = 1: log 2 / mu
        assert waiting_time_t1(1.0, self.PARAMS_SIMPLE) == pytest.approx(math.log(2.0))

    def test_t0bar_diverges_at_one(self):
        assert waiting_time_t0bar(1.0 + 1e-9, self.PARAMS_SIMPLE) > 20.0

    def test_t0bar_closed_value(self):
        assert waiting_time_t0bar(2.0, self.PARAMS_SIMPLE) == pytest.approx(
            math.log(6.0), abs=1e-12
        )

    def test_t0bar_monotone_in_constants(self):
        base = waiting_time_t0bar(2.0, self.PARAMS_SIMPLE)
        bigger_c = waiting_time_t0bar(2.0, HyperParams(mu=1.0, n=0, c=3.0, c2=1.0))
        bigger_c2 = waiting_time_t0bar(2.0, HyperParams(mu=1.0, n=0, c=1.0, c2=3.0))
        assert bigger_c > base
        assert bigger_c2 > base

    def test_T0_diverges_at_one(self):
        assert waiting_time_T0(1.0 + 1e-9, self.PARAMS_SIMPLE) > 20.0

    def test_T0_formula_value_defective(self):
        params = HyperParams(mu=1.0, n=1, c=1.0, c2=1.0)
        lead = max(6.5, 2.0 * (3.0 * 1.5**2 + 1.5) / 2.5)
        expected = math.log(lead * (1.0 + (2.0 / math.e) ** 2) / 0.5)
        assert waiting_time_T0(1.5, params) == pytest.approx(expected, rel=1e-12)

    def test_T0_monotone_decreasing_in_p(self):
        params = HyperParams(mu=1.0, n=1, c=2.0, c2=1.5)
        ps = np.linspace(1.05, 1.95, 19)
        vals = [waiting_time_T0(p, params) for p in ps]
        assert all(a > b for a, b in zip(vals, vals[1:]))

    def test_t0_general_exponent(self):
        # with the mass exponent capped, t0 matches the closed-form bound
        t0 = waiting_time_t0(2.0, 0.5, self.PARAMS_SIMPLE)
        assert t0 == pytest.approx(waiting_time_t0bar(2.0, self.PARAMS_SIMPLE), rel=1e-12)

    def test_alpha_validation(self):
        with pytest.raises(DomainError):
            HyperParams(mu=1.0, n=0, alpha=1.5)

    def test_constants_floored_at_one(self):
        p = HyperParams(mu=1.0, n=0, c=0.2, c2=0.5)
        assert p.c == 1.0 and p.c2 == 1.0


class TestRhsFormulas:
    def test_hyper_rhs_pinned_value(self):
        assert hyper_rhs(2.0, 1, 0.25, 1.0) == pytest.approx(
            4.0 * math.sqrt(2.0) / 3.0, abs=1e-12
        )

    def test_hyper_rhs_mass_scaling(self):
        base = hyper_rhs(2.0, 1, 0.25, 1.0)
        assert hyper_rhs(2.0, 1, 0.25, 3.0) == pytest.approx(9.0 * base, rel=1e-12)

    def test_hyper_rhs_dimension_exponent(self):
        q, eps = 1.7, 0.1
        one = hyper_rhs(q, 1, eps, 1.0)
        two = hyper_rhs(q, 2, eps, 1.0)
        assert two == pytest.approx(one**2, rel=1e-12)

    def test_hyper_rhs_infinite_mass_rejected(self):
        with pytest.raises(DomainError):
            hyper_rhs(2.0, 1, 0.25, math.inf)

    def test_entropic_rhs_degenerate_consistency(self):
        assert entropic_hyper_rhs(1.5, 0, 0.0) == pytest.approx(0.0, abs=1e-15)

    def test_entropic_rhs_prefactor_limit_at_two(self):
        # 8 sqrt(2) / (3 * 2^(1/p)) tends to 8/3 as p -> 2
        p = 2.0 - 1e-12
        d = 3
        val = entropic_hyper_rhs(p, d, 0.0)
        assert val == pytest.approx(0.5 * ((8.0 / 3.0) ** d - 1.0), rel=1e-9)

    def test_entropic_rhs_increasing_in_entropy(self):
        vals = [entropic_hyper_rhs(1.5, 2, e) for e in (0.0, 0.5, 2.0, 10.0)]
        assert all(a < b for a, b in zip(vals, vals[1:]))


class TestVerify:
    def test_equilibrium_trivially_passes(self, kinetic):
        report = verify_hypercontractivity(
            kinetic, equilibrium_mixture(2), 1.5, np.linspace(0.0, 12.0, 61)
        )
        assert report.passed
        assert report.ep0 == pytest.approx(0.0, abs=1e-12)
        assert report.first_finite_time == 0.0

    def test_scalar_wide_gaussian(self, scalar_sys):
        mix = single_gaussian([0.0], [[2.5]])
        ts = np.linspace(0.0, 10.0, 101)
        report = verify_hypercontractivity(
            scalar_sys, mix, 1.5, ts, QuadratureSpec(order=200)
        )
        assert report.passed
        # initially outside the weighted L2 space
        assert math.isinf(report.e2_series[0])
        assert math.isinf(e2_mixture(scalar_sys, mix))
        # the covariance crosses the integrability threshold at
        # log(1.5) / 2 ~ 0.2027, so finiteness starts at the next grid point
        crossing = 0.5 * math.log(1.5)
        assert report.first_finite_time == pytest.approx(0.3)
        assert report.first_finite_time - 0.1 < crossing <= report.first_finite_time
        # finiteness is absorbing and the series decreases once finite
        finite = np.isfinite(report.e2_series)
        first = int(np.argmax(finite))
        assert finite[first:].all()
        assert np.all(np.diff(report.e2_series[first:]) <= 1e-10)

    def test_kinetic_wide_gaussian(self, kinetic):
        mix = single_gaussian([0.0, 0.0], np.diag([2.5, 1.0]))
        ts = np.linspace(0.0, 14.0, 141)
        report = verify_hypercontractivity(kinetic, mix, 1.5, ts)
        assert report.passed
        assert math.isinf(report.e2_series[0])
        assert report.n_checked > 0

    def test_infinite_p_entropy_rejected(self, scalar_sys):
        # variance beyond p / (p - 1) = 3 breaks the mass condition
        mix = single_gaussian([0.0], [[4.0]])
        with pytest.raises(DomainError):
            verify_hypercontractivity(
                scalar_sys, mix, 1.5, np.linspace(0.0, 5.0, 11)
            )

    def test_fitted_params_flooring(self, scalar_sys):
        params = fitted_params(scalar_sys)
        assert params.c == pytest.approx(1.0, abs=1e-12)
        assert params.c2 == pytest.approx(1.0, abs=1e-12)
        assert params.n == 0

    def test_t1_controls_inverse_covariance(self, kinetic):
        from fpdecay import gram_w

        params = fitted_params(kinetic)
        t1 = waiting_time_t1(0.1, params)
        W = gram_w(kinetic, t1)
        dev = np.linalg.norm(np.linalg.inv(W) - np.eye(2), 2)
        assert dev <= 0.1

    def test_rotating_wide_gaussian(self, rotating):
        mix = single_gaussian([0.0, 0.0], np.diag([2.5, 1.0]))
        report = verify_hypercontractivity(
            rotating, mix, 1.5, np.linspace(0.0, 12.0, 121)
        )
        assert report.passed
        assert math.isinf(report.e2_series[0])

    def test_custom_generator_routes_through_same_bound(self, scalar_sys):
        from fpdecay import EntropyGenerator, power_generator

        p = 1.5
        base = power_generator(p)
        # psi = 2 psi_p dominates psi_p with constant 1/2; the rescaled
        # entropy must reproduce the default bound exactly
        doubled = EntropyGenerator(
            psi=lambda y: 2.0 * base.psi(y),
            d1=lambda y: 2.0 * base.d1(y),
            d2=lambda y: 2.0 * base.d2(y),
            d3=lambda y: 2.0 * base.d3(y),
            d4=lambda y: 2.0 * base.d4(y),
        )
        mix = single_gaussian([0.0], [[2.5]])
        ts = np.linspace(0.0, 8.0, 41)
        quad = QuadratureSpec(order=200)
        direct = verify_hypercontractivity(scalar_sys, mix, p, ts, quad)
        routed = verify_hypercontractivity(
            scalar_sys, mix, p, ts, quad, gen=doubled, c_psi=0.5
        )
        assert routed.bound == pytest.approx(direct.bound, rel=1e-12)
        assert routed.ep0 == pytest.approx(2.0 * direct.ep0, rel=1e-12)
        assert routed.passed
