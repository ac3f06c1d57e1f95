import math

import numpy as np
import pytest

from perpetualput.errors import InvalidParams, NotSIndependent
from perpetualput.merton import (
    MertonSolution,
    bounds_interval,
    gamma_minus,
    gamma_plus,
    merton_delta,
    merton_gamma,
    merton_price,
)
from perpetualput.volatility import VolatilityModel

R, E, SIGMA0 = 0.1, 100.0, 0.3
GAMMA = 2.0 * R / SIGMA0**2  # 2.2222...

# Bisection oracle roots of g * 0.09 * (1 + lam (1+g)^(1/3)) = 0.2,
# computed independently before the build.
GAMMA_PLUS_LAM1 = 0.984720169695
GAMMA_PLUS_LAM2 = 0.659804084724


def closed_form():
    return MertonSolution.from_gamma(GAMMA, E)


class TestMertonGamma:
    def test_benchmark_params(self):
        assert merton_gamma(R, SIGMA0) == pytest.approx(2.22222222222, abs=1e-9)

    def test_unit_gamma(self):
        assert merton_gamma(0.045, 0.3) == pytest.approx(1.0, rel=1e-14)

    def test_boundary_from_gamma(self):
        g = merton_gamma(R, SIGMA0)
        assert E * g / (1.0 + g) == pytest.approx(68.9655, abs=1e-3)

    def test_invalid(self):
        with pytest.raises(InvalidParams):
            merton_gamma(0.0, 0.3)
        with pytest.raises(InvalidParams):
            merton_gamma(0.1, -0.3)


class TestMertonSolution:
    def test_boundary_invariant_enforced(self):
        with pytest.raises(InvalidParams):
            MertonSolution(gamma=2.0, strike=100.0, boundary=50.0)

    def test_from_gamma(self):
        sol = closed_form()
        assert 0.0 < sol.boundary < sol.strike
        assert sol.boundary == pytest.approx(68.96551724, abs=1e-6)


class TestMertonPrice:
    def test_intrinsic_at_zero(self):
        assert merton_price(closed_form(), 0.0) == E

    def test_at_strike(self):
        v = merton_price(closed_form(), 100.0)
        assert v == pytest.approx(13.5909, abs=1e-3)
        assert v == pytest.approx(13.5909229704, abs=1e-8)

    def test_vanishes_at_infinity(self):
        assert merton_price(closed_form(), 1e8) < 1e-10

    def test_negative_asset_rejected(self):
        with pytest.raises(InvalidParams):
            merton_price(closed_form(), -1.0)

    def test_smooth_pasting_one_sided_fd(self):
        sol = closed_form()
        rho = sol.boundary
        assert merton_price(sol, rho) == pytest.approx(E - rho, rel=1e-13)
        h = 1e-6
        fd_up = (merton_price(sol, rho + h) - merton_price(sol, rho)) / h
        fd_down = (merton_price(sol, rho) - merton_price(sol, rho - h)) / h
        assert fd_up == pytest.approx(-1.0, abs=1e-6)
        assert fd_down == pytest.approx(-1.0, abs=1e-6)

    def test_delta_matches_fd(self):
        sol = closed_form()
        for S in (75.0, 100.0, 180.0):
            h = 1e-6 * S
            fd = (merton_price(sol, S + h) - merton_price(sol, S - h)) / (2 * h)
            assert merton_delta(sol, S) == pytest.approx(fd, rel=1e-8)
        assert merton_delta(sol, 100.0) == pytest.approx(-0.302020510453, abs=1e-10)

    def test_stationary_equation_residual(self):
        # second derivative from the closed form: g(g+1) E/(1+g) rho^g S^(-g-2)
        sol = closed_form()
        g = sol.gamma
        for S in np.linspace(sol.boundary * 1.01, 8 * E, 50):
            v = merton_price(sol, S)
            dv = merton_delta(sol, S)
            d2v = g * (g + 1.0) * E / (1.0 + g) * sol.boundary**g * S ** (-g - 2.0)
            res = 0.5 * SIGMA0**2 * S**2 * d2v + R * S * dv - R * v
            assert abs(res) < 1e-8 * R * E

    def test_second_derivative_fd_cross_check(self):
        sol = closed_form()
        g = sol.gamma
        S = 1.3 * sol.boundary
        h = 1e-4 * S
        fd = (merton_price(sol, S + h) - 2 * merton_price(sol, S) + merton_price(sol, S - h)) / h**2
        analytic = g * (g + 1.0) * E / (1.0 + g) * sol.boundary**g * S ** (-g - 2.0)
        assert analytic == pytest.approx(fd, rel=1e-5)

    def test_scaled_gamma_at_boundary_is_one_plus_gamma(self):
        # identity g E / rho = 1 + g; finite differences confirm the scaled
        # gamma approaches it from the continuation side
        sol = closed_form()
        g = sol.gamma
        assert g * E / sol.boundary == pytest.approx(1.0 + g, rel=1e-12)
        S = sol.boundary * 1.001
        h = 1e-5 * S
        fd_h = S * (
            merton_price(sol, S + h) - 2 * merton_price(sol, S) + merton_price(sol, S - h)
        ) / h**2
        analytic = g * E * sol.boundary**g * S ** (-g - 1.0)
        assert fd_h == pytest.approx(analytic, rel=1e-3)
        assert analytic == pytest.approx((1.0 + g) * (S / sol.boundary) ** (-g - 1.0), rel=1e-12)


class TestGammaBounds:
    def test_gamma_minus_is_floor_exponent(self):
        for model in (
            VolatilityModel.constant(SIGMA0),
            VolatilityModel.rapm(SIGMA0, 2.0),
            VolatilityModel.barles_soner(SIGMA0, 0.1),
        ):
            assert gamma_minus(model, R) == pytest.approx(GAMMA, rel=1e-14)

    def test_gamma_minus_boundary_value(self):
        g = gamma_minus(VolatilityModel.rapm(SIGMA0, 1.0), R)
        assert E * g / (1 + g) == pytest.approx(68.9655, abs=1e-3)

    def test_gamma_plus_constant_degenerates(self):
        m = VolatilityModel.constant(SIGMA0)
        assert gamma_plus(m, R) == gamma_minus(m, R)

    def test_gamma_plus_rapm_lambda_zero_degenerates(self):
        m = VolatilityModel.rapm(SIGMA0, 0.0)
        assert gamma_plus(m, R) == pytest.approx(gamma_minus(m, R), rel=1e-12)

    def test_gamma_plus_frozen_oracles(self):
        assert gamma_plus(VolatilityModel.rapm(SIGMA0, 1.0), R) == pytest.approx(
            GAMMA_PLUS_LAM1, abs=1e-9
        )
        assert gamma_plus(VolatilityModel.rapm(SIGMA0, 2.0), R) == pytest.approx(
            GAMMA_PLUS_LAM2, abs=1e-9
        )

    def test_gamma_plus_decreases_with_lambda(self):
        g1 = gamma_plus(VolatilityModel.rapm(SIGMA0, 1.0), R)
        g2 = gamma_plus(VolatilityModel.rapm(SIGMA0, 2.0), R)
        assert g2 < g1 < GAMMA

    def test_gamma_plus_solves_its_equation(self):
        m = VolatilityModel.rapm(SIGMA0, 1.3)
        g = gamma_plus(m, R)
        assert g * m.variance_sq(1.0, 1.0 + g) == pytest.approx(2 * R, rel=1e-10)

    def test_gamma_plus_rejects_price_dependent(self):
        with pytest.raises(NotSIndependent):
            gamma_plus(VolatilityModel.barles_soner(SIGMA0, 0.1), R)

    @pytest.mark.parametrize("lam", [0.0, 0.4, 1.0, 2.0])
    def test_ordering(self, lam):
        m = VolatilityModel.rapm(SIGMA0, lam)
        assert gamma_plus(m, R) <= gamma_minus(m, R) + 1e-14


class TestBoundsInterval:
    def test_constant_degenerate(self):
        lo, hi = bounds_interval(VolatilityModel.constant(SIGMA0), R, E)
        assert lo == pytest.approx(68.9655, abs=1e-3)
        assert lo == hi

    def test_contains_published_values(self):
        lo, hi = bounds_interval(VolatilityModel.rapm(SIGMA0, 1.2), R, E)
        assert lo < 51.1474 < hi
        lo, hi = bounds_interval(VolatilityModel.rapm(SIGMA0, 2.0), R, E)
        assert lo < 44.5433 < hi

    def test_ordered(self):
        for lam in (0.2, 0.9, 1.7):
            lo, hi = bounds_interval(VolatilityModel.rapm(SIGMA0, lam), R, E)
            assert lo <= hi

    def test_invalid_strike(self):
        with pytest.raises(InvalidParams):
            bounds_interval(VolatilityModel.constant(SIGMA0), R, 0.0)
