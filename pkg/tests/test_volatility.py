import math

import numpy as np
import pytest

from perpetualput.errors import (
    InvalidParams,
    NegativeArgument,
    NonPositiveAsset,
    NonPositiveGamma,
)
from perpetualput.volatility import (
    PSI_SMALL_X_COEFF,
    ModelKind,
    VolatilityModel,
    build_psi_table,
    default_psi_table,
    psi,
)

S2 = 0.09  # sigma0 = 0.3

# Bisection oracle value for the power-model inversion at w = 0.1
# (0.045 * (1 + H^(1/3)) * H = 0.1), computed independently.
BETA_RAPM_W01 = 1.094406419229

# High-accuracy integration of the preference ODE (independent solver).
PSI_AT_ONE = 2.75780858


def bisect_oracle(f, lo, hi, n=200):
    flo = f(lo)
    for _ in range(n):
        mid = 0.5 * (lo + hi)
        if f(mid) * flo <= 0:
            hi = mid
        else:
            lo, flo = mid, f(mid)
    return 0.5 * (lo + hi)


class TestModelConstruction:
    def test_validation(self):
        with pytest.raises(InvalidParams):
            VolatilityModel.constant(0.0)
        with pytest.raises(InvalidParams):
            VolatilityModel.rapm(0.3, -0.1)
        with pytest.raises(InvalidParams):
            VolatilityModel.barles_soner(0.3, -1.0)

    def test_dict_round_trip(self):
        m = VolatilityModel.rapm(0.25, 1.5)
        again = VolatilityModel.from_dict(m.to_dict())
        assert again == m

    def test_from_dict_rejects_unknown_variant(self):
        with pytest.raises(InvalidParams):
            VolatilityModel.from_dict({"variant": "jumpy", "sigma0": 0.3})

    def test_s_independent_flags(self):
        assert VolatilityModel.constant(0.3).s_independent()
        assert VolatilityModel.rapm(0.3, 1.0).s_independent()
        assert not VolatilityModel.barles_soner(0.3, 0.1).s_independent()


class TestVarianceSq:
    def test_constant(self):
        m = VolatilityModel.constant(0.3)
        assert m.variance_sq(50.0, 3.0) == pytest.approx(S2)
        assert m.variance_sq(1e-3, -5.0) == pytest.approx(S2)

    def test_rapm_unit_gamma(self):
        m = VolatilityModel.rapm(0.3, 1.0)
        assert m.variance_sq(10.0, 1.0) == pytest.approx(0.18)

    def test_barles_soner_at_zero_gamma(self):
        m = VolatilityModel.barles_soner(0.3, 0.2)
        assert m.variance_sq(80.0, 0.0) == pytest.approx(S2)

    def test_negative_gamma_clamped(self):
        for m in (VolatilityModel.rapm(0.3, 2.0), VolatilityModel.barles_soner(0.3, 0.1)):
            assert m.variance_sq(5.0, -1.0) == m.variance_sq(5.0, 0.0) == pytest.approx(S2)

    def test_non_positive_asset(self):
        with pytest.raises(NonPositiveAsset):
            VolatilityModel.rapm(0.3, 1.0).variance_sq(0.0, 1.0)

    def test_nondecreasing_in_gamma(self):
        models = [
            VolatilityModel.constant(0.3),
            VolatilityModel.rapm(0.3, 1.0),
            VolatilityModel.barles_soner(0.3, 0.05),
        ]
        hs = np.logspace(-6, 3, 40)
        for m in models:
            vals = [m.variance_sq(25.0, h) for h in hs]
            assert all(b >= a - 1e-15 for a, b in zip(vals, vals[1:]))
            assert all(v >= S2 for v in vals)


class TestHalfSigmaSqH:
    def test_examples(self):
        assert VolatilityModel.constant(0.3).half_sigma_sq_H(1.0, 2.0) == pytest.approx(0.09)
        assert VolatilityModel.rapm(0.3, 1.0).half_sigma_sq_H(1.0, 1.0) == pytest.approx(0.09)
        assert VolatilityModel.barles_soner(0.3, 0.1).half_sigma_sq_H(1.0, 0.0) == 0.0

    def test_strictly_increasing(self):
        m = VolatilityModel.rapm(0.3, 1.0)
        hs = np.linspace(-2.0, 5.0, 60)
        vals = [m.half_sigma_sq_H(1.0, h) for h in hs]
        assert all(b > a for a, b in zip(vals, vals[1:]))


class TestDVarianceH:
    def test_constant(self):
        m = VolatilityModel.constant(0.3)
        for h in (0.1, 1.0, 40.0):
            assert m.d_variance_H(1.0, h) == pytest.approx(S2)

    def test_rapm_hand_value_and_fd(self):
        m = VolatilityModel.rapm(0.3, 1.0)
        assert m.d_variance_H(1.0, 1.0) == pytest.approx(0.21, abs=1e-12)
        # finite-difference cross-check of the analytic derivative
        h, step = 1.0, 1e-6
        fd = (
            m.variance_sq(1.0, h + step) * (h + step)
            - m.variance_sq(1.0, h - step) * (h - step)
        ) / (2 * step)
        assert m.d_variance_H(1.0, h) == pytest.approx(fd, rel=1e-8)

    def test_rapm_zero_lambda_reduces_to_constant(self):
        m = VolatilityModel.rapm(0.3, 0.0)
        for h in (0.01, 1.0, 7.0):
            assert m.d_variance_H(1.0, h) == S2

    def test_rejects_non_positive_gamma(self):
        with pytest.raises(NonPositiveGamma):
            VolatilityModel.rapm(0.3, 1.0).d_variance_H(1.0, 0.0)

    def test_barles_soner_fd_consistency(self):
        m = VolatilityModel.barles_soner(0.3, 0.1)
        h, step = 0.5, 1e-4
        fd = (
            m.variance_sq(2.0, h + step) * (h + step)
            - m.variance_sq(2.0, h - step) * (h - step)
        ) / (2 * step)
        assert m.d_variance_H(2.0, h) == pytest.approx(fd, rel=1e-5)


class TestBeta:
    def test_constant_linear(self):
        m = VolatilityModel.constant(0.3)
        assert m.beta(0.0, 0.1) == pytest.approx(0.2 / 0.09, rel=1e-12)

    def test_zero(self):
        for m in (VolatilityModel.constant(0.3), VolatilityModel.rapm(0.3, 1.0)):
            assert m.beta(1.7, 0.0) == 0.0

    def test_negative_branch_linear(self):
        m = VolatilityModel.rapm(0.3, 1.5)
        assert m.beta(0.0, -0.05) == pytest.approx(-0.1 / 0.09, rel=1e-12)

    def test_rapm_frozen_oracle(self):
        m = VolatilityModel.rapm(0.3, 1.0)
        assert m.beta(0.0, 0.1) == pytest.approx(BETA_RAPM_W01, abs=1e-10)

    def test_rapm_live_bisection_oracle(self):
        m = VolatilityModel.rapm(0.3, 0.7)
        w = 0.23
        ref = bisect_oracle(lambda H: 0.045 * (1 + 0.7 * H ** (1 / 3)) * H - w, 0.0, 2 * w / S2)
        assert m.beta(0.0, w) == pytest.approx(ref, rel=1e-10)

    def test_upper_bound_from_floor_volatility(self):
        m = VolatilityModel.rapm(0.3, 1.0)
        for w in np.logspace(-6, 3, 30):
            assert 0.0 <= m.beta(0.0, w) <= 2 * w / S2 * (1 + 1e-12)


MODELS_FOR_INVARIANTS = [
    VolatilityModel.constant(0.3),
    VolatilityModel.rapm(0.3, 1.0),
    VolatilityModel.barles_soner(0.3, 0.05),
]


@pytest.mark.parametrize("model", MODELS_FOR_INVARIANTS, ids=lambda m: m.kind.value)
class TestInverseInvariants:
    """Ratio/slope bounds and the round trip on an (x, w) log grid."""

    xs = np.linspace(-5.0, 10.0, 7)
    ws = np.logspace(-6, 3, 9)

    def test_ratio_bound_and_monotone(self, model):
        for x in self.xs:
            vals = [model.beta(x, w) for w in self.ws]
            for w, b in zip(self.ws, vals):
                assert b / w <= 2.0 / S2 * (1 + 1e-12)
            assert all(b2 >= b1 for b1, b2 in zip(vals, vals[1:]))

    def test_round_trip(self, model):
        for x in self.xs:
            for w in self.ws:
                back = model.half_sigma_sq_H(math.exp(x), model.beta(x, w))
                assert back == pytest.approx(w, rel=1e-9)

    def test_numerical_slope_bound(self, model):
        for x in self.xs[::3]:
            for w in self.ws[::2]:
                dw = 1e-6 * w
                slope = (model.beta(x, w + dw) - model.beta(x, w - dw)) / (2 * dw)
                assert slope <= 2.0 / S2 + 1e-6


class TestModelReductions:
    def test_rapm_lambda_zero_equals_constant(self):
        m0 = VolatilityModel.rapm(0.3, 0.0)
        mc = VolatilityModel.constant(0.3)
        for x in (-2.0, 0.0, 3.0):
            for w in (1e-4, 0.1, 10.0):
                assert m0.beta(x, w) == mc.beta(x, w)
                S = math.exp(x)
                assert m0.variance_sq(S, w) == mc.variance_sq(S, w)
        assert m0.d_variance_H(1.0, 0.5) == mc.d_variance_H(1.0, 0.5)

    def test_barles_soner_a_zero_equals_constant(self):
        m0 = VolatilityModel.barles_soner(0.3, 0.0)
        mc = VolatilityModel.constant(0.3)
        for h in (0.0, 0.5, 4.0):
            assert m0.variance_sq(30.0, h) == pytest.approx(mc.variance_sq(30.0, h), rel=1e-14)
        assert m0.beta(0.0, 0.2) == pytest.approx(mc.beta(0.0, 0.2), rel=1e-10)


class TestPsi:
    def test_zero(self):
        assert psi(default_psi_table(), 0.0) == 0.0

    def test_negative_rejected(self):
        with pytest.raises(NegativeArgument):
            psi(default_psi_table(), -1e-9)

    def test_small_x_series_constant(self):
        table = default_psi_table()
        # below the table the two-term series applies; the ratio tends to
        # the matched coefficient from above
        for xv in (1e-12, 1e-10):
            ratio = psi(table, xv) / xv ** (1 / 3)
            assert ratio == pytest.approx(PSI_SMALL_X_COEFF, abs=2e-3)
            assert ratio > PSI_SMALL_X_COEFF

    def test_series_table_continuity(self):
        table = default_psi_table()
        below = psi(table, table.x_min * (1 - 1e-12))
        at = psi(table, table.x_min)
        assert below == pytest.approx(at, rel=1e-8)

    def test_value_at_one_vs_independent_solver(self):
        assert psi(default_psi_table(), 1.0) == pytest.approx(PSI_AT_ONE, rel=1e-6)

    def test_monotone_doubling(self):
        table = default_psi_table()
        for xv in np.logspace(-7, 5, 25):
            assert psi(table, 2 * xv) > psi(table, xv)

    def test_linear_tail(self):
        table = default_psi_table()
        big = psi(table, 5e6)
        assert big == pytest.approx(5e6, rel=1e-2)  # grows like x at infinity

    def test_custom_table_matches_default(self):
        coarse = build_psi_table(x_min=1e-8, x_max=1e4, n=900)
        table = default_psi_table()
        for xv in (1e-3, 1.0, 1e3):
            assert psi(coarse, xv) == pytest.approx(psi(table, xv), rel=1e-8)
