import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import D_1_1_0, D_2_05_13, W_1_1_0, W_1_10_0, W_4_05_1
from rpq.exceptions import DomainError
from rpq.kernels import (
    KernelValue,
    ModelParams,
    d_lambda_fourier_1d,
    d_lambda_position_1d,
    dlambda_multiplier,
    equilibrium_cov_1d,
    heat_kernel_1d,
    w_kernel,
    w_kernel_closed,
)
from rpq.numerics import GaussianDecayHint, integrate_halfline, integrate_line

P11 = ModelParams(1.0, 1.0)


class TestModelParams:
    @pytest.mark.parametrize("lam,m,d", [(0, 1, 1), (1, -1, 1), (math.inf, 1, 1), (1, 1, 0), (1, 1, 1.5)])
    def test_invalid(self, lam, m, d):
        with pytest.raises(DomainError):
            ModelParams(lam, m, d)

    def test_unit_mass(self):
        p = ModelParams(4.0, 0.5, 2)
        assert p.lambda_eff == 1.0
        assert p.unit_mass() == ModelParams(1.0, 1.0, 2)

    def test_kernel_value_error_nonnegative(self):
        with pytest.raises(DomainError):
            KernelValue(1.0, -1.0)


class TestHeatKernel:
    def test_origin(self):
        assert heat_kernel_1d(1.0, 0.0) == pytest.approx((4 * math.pi) ** -0.5, rel=1e-15)

    def test_x2(self):
        assert heat_kernel_1d(1.0, 2.0) == pytest.approx(math.exp(-1) / math.sqrt(4 * math.pi), rel=1e-15)

    def test_x2_fourier_oracle(self):
        # (1/2pi) int cos(2p) exp(-p^2) dp
        r = integrate_line(lambda p: np.cos(2 * p) * np.exp(-p * p) / (2 * np.pi), GaussianDecayHint(0, 1))
        assert heat_kernel_1d(1.0, 2.0) == pytest.approx(r.value, rel=1e-12)

    @pytest.mark.parametrize("tau", [0.01, 1.0, 7.5])
    def test_normalized(self, tau):
        r = integrate_line(lambda x: heat_kernel_1d(tau, x), GaussianDecayHint(0, 2 * math.sqrt(tau)))
        assert r.value == pytest.approx(1.0, abs=1e-12)

    def test_domain(self):
        with pytest.raises(DomainError):
            heat_kernel_1d(0.0, 1.0)


class TestEquilibrium:
    def test_values(self):
        assert equilibrium_cov_1d(1.0, 0.0) == 0.5
        assert equilibrium_cov_1d(1.0, -3.0) == equilibrium_cov_1d(1.0, 3.0)
        assert equilibrium_cov_1d(2.0, 1.0) == pytest.approx(math.exp(-2) / 4, rel=1e-15)

    def test_heat_kernel_oracle(self):
        # C = int_0^inf exp(-s m^2) exp(s d^2/dt^2) ds, evaluated at m = 2, t = 1
        r = integrate_halfline(lambda s: np.exp(-4 * s - 1 / (4 * s + 1e-300)) / np.sqrt(4 * np.pi * s + 1e-300), 4.0)
        assert equilibrium_cov_1d(2.0, 1.0) == pytest.approx(r.value, rel=1e-10)

    def test_domain(self):
        with pytest.raises(DomainError):
            equilibrium_cov_1d(0.0, 1.0)


class TestMultiplier:
    def test_value(self):
        assert dlambda_multiplier(P11, 1.0) == pytest.approx(1 - math.exp(-1), rel=1e-15)

    def test_alpha_integral_oracle(self):
        r = integrate_halfline(lambda a: np.where(a <= 1, np.exp(-(1 - a) * 3.0), 0.0), 1.0)
        direct = integrate_line(lambda a: np.exp(-(1 - a) * 3.0) * ((a >= 0) & (a <= 1)),
                                GaussianDecayHint(0.5, 0.5), breakpoints=(0.0, 1.0))
        assert dlambda_multiplier(P11, 3.0) == pytest.approx(direct.value, rel=1e-12)
        assert r.value == pytest.approx(direct.value, rel=1e-10)

    def test_limits(self):
        assert dlambda_multiplier(ModelParams(1e-12, 1.0), 1.0) == pytest.approx(1e-12, rel=1e-9)
        assert dlambda_multiplier(ModelParams(1e6, 1.0), 1.0) == pytest.approx(1.0, abs=1e-12)

    def test_domain(self):
        with pytest.raises(DomainError):
            dlambda_multiplier(P11, 0.0)

    @settings(max_examples=50, deadline=None)
    @given(omega=st.floats(1e-3, 1e3), l1=st.floats(1e-3, 10), l2=st.floats(1e-3, 10))
    def test_monotone_and_bounded(self, omega, l1, l2):
        lo, hi = sorted((l1, l2))
        a = dlambda_multiplier(ModelParams(lo, 1.0), omega)
        b = dlambda_multiplier(ModelParams(hi, 1.0), omega)
        assert a <= b <= 1 / omega
        if hi > lo * (1 + 1e-9) and hi * omega < 30:
            assert a < b


class TestW:
    def test_origin_oracle(self):
        assert w_kernel(P11, 0.0).value == pytest.approx(W_1_1_0, rel=1e-13)
        assert w_kernel_closed(P11, 0.0) == pytest.approx(W_1_1_0, rel=1e-14)

    def test_even(self):
        assert w_kernel(P11, 2.0).value == w_kernel(P11, -2.0).value
        assert w_kernel_closed(P11, 2.0) == w_kernel_closed(P11, -2.0)

    def test_scaling_example(self):
        v = w_kernel(ModelParams(4.0, 0.5), 1.0)
        s = w_kernel(P11, 0.5)
        assert v.value == pytest.approx(W_4_05_1, rel=1e-13)
        assert abs(v.value - s.value / 0.5) <= v.error_estimate + s.error_estimate / 0.5 + 1e-14

    def test_heavy_mass(self):
        assert w_kernel_closed(ModelParams(1.0, 10.0), 0.0) == pytest.approx(W_1_10_0, rel=1e-13)
        assert w_kernel_closed(ModelParams(1.0, 10.0), 0.0) == pytest.approx(0.2, rel=0.01)

    def test_closed_no_overflow(self):
        # exp(lam m^2) alone would overflow here
        v = w_kernel_closed(ModelParams(1.0, 40.0), np.array([0.0, 5.0, 15.0]))
        assert np.all(np.isfinite(v)) and np.all(v > 0)
        q = [w_kernel(ModelParams(1.0, 40.0), t).value for t in (0.0, 5.0)]
        assert v[:2] == pytest.approx(q, rel=1e-10)

    def test_closed_vectorized(self):
        t = np.array([0.0, 0.5, 3.0])
        assert w_kernel_closed(P11, t) == pytest.approx([w_kernel_closed(P11, x) for x in t], rel=0, abs=0)

    @settings(max_examples=40, deadline=None)
    @given(lam=st.floats(0.05, 20), m=st.floats(0.05, 10), t=st.floats(-10, 10))
    def test_closed_matches_quadrature(self, lam, m, t):
        p = ModelParams(lam, m)
        q = w_kernel(p, t)
        assert q.value > 0
        assert w_kernel_closed(p, t) == pytest.approx(q.value, rel=1e-10)

    @settings(max_examples=40, deadline=None)
    @given(lam=st.floats(0.05, 10), m=st.floats(0.1, 5), t=st.floats(0, 5))
    def test_scaling_law(self, lam, m, t):
        a = w_kernel(ModelParams(lam, m), t)
        b = w_kernel(ModelParams(lam * m * m, 1.0), m * t)
        assert abs(a.value - b.value / m) <= a.error_estimate + b.error_estimate / m + 4e-16 * a.value


class TestDLambda:
    def test_origin_oracle(self):
        d = d_lambda_position_1d(P11, 0.0)
        assert d.value == pytest.approx(D_1_1_0, rel=1e-12)
        assert 0 <= d.value <= 0.5

    def test_second_oracle(self):
        p = ModelParams(2.0, 0.5)
        for method in ("quadrature", "closed"):
            assert d_lambda_position_1d(p, 1.3, method=method).value == pytest.approx(D_2_05_13, rel=1e-12)
        assert d_lambda_fourier_1d(p, 1.3).value == pytest.approx(D_2_05_13, rel=1e-12)

    def test_large_lambda(self):
        p = ModelParams(30.0, 1.0)
        for t in (0.0, 0.7, 2.0):
            assert abs(d_lambda_position_1d(p, t).value - equilibrium_cov_1d(1.0, t)) <= math.exp(-30)

    def test_small_lambda(self):
        # D_lambda(0) ~ sqrt(lambda / pi) -> 0 as lambda -> 0
        for lam in (1e-4, 1e-8):
            d = d_lambda_position_1d(ModelParams(lam, 1.0), 0.0, method="closed").value
            assert d == pytest.approx(math.sqrt(lam / math.pi), rel=1e-3)

    def test_requires_dim1(self):
        with pytest.raises(DomainError):
            d_lambda_position_1d(ModelParams(1, 1, 2), 0.0)

    def test_unknown_method(self):
        with pytest.raises(DomainError):
            d_lambda_position_1d(P11, 0.0, method="series")

    @pytest.mark.parametrize("lam", [0.2, 1.0, 5.0])
    @pytest.mark.parametrize("m", [0.3, 1.0, 3.0])
    @pytest.mark.parametrize("t", [0.0, 0.4, 2.5])
    def test_fourier_consistency(self, lam, m, t):
        p = ModelParams(lam, m)
        assert abs(d_lambda_position_1d(p, t).value - d_lambda_fourier_1d(p, t).value) <= 1e-8
