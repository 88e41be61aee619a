import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate, special

from fracbubble import (
    DomainError,
    BubbleSpec,
    KernelIndex,
    NumericError,
    ParameterError,
    SpectralParams,
    bubble_nonlinear_image,
    bubble_value,
    extension_gradient_bound_check,
    extension_trace_derivative,
    extension_value,
    kernel_value,
    linearized_image,
)
from fracbubble._common import sphere_area
from fracbubble.bubble import ZeroField, extension_kernel, hemisphere_samples, richardson_limit

coords = st.floats(-6, 6, allow_nan=False)


def point(N):
    return st.lists(coords, min_size=N, max_size=N).map(np.array)


class TestSpectralParams:
    @pytest.mark.parametrize("N,s", [(3, 0.5), (3, 0.7), (2, 0.3), (4, 0.0), (4, 1.0), (3.5, 0.2)])
    def test_rejects_out_of_range(self, N, s):
        with pytest.raises(ParameterError):
            SpectralParams(N, s)

    @given(st.integers(3, 9), st.floats(0.01, 0.99))
    def test_exponent_identity(self, N, s):
        if N == 3 and s >= 0.5:
            s = s / 2
        p = SpectralParams(N, s)
        assert p.p_crit > 2
        assert (p.p_crit - 2) * (N - 2 * s) / 2 == pytest.approx(2 * s, rel=1e-13)

    def test_gamma_is_gamma_function_ratio(self, p4):
        assert p4.gamma == pytest.approx(special.gamma(2.5) / special.gamma(1.5), rel=1e-14)

    def test_extension_kernel_has_unit_mass(self, params):
        N = params.N

        def radial(rho):
            return extension_kernel(params, rho, 1.0) * sphere_area(N) * rho ** (N - 1)

        mass, _ = integrate.quad(radial, 0, np.inf, epsabs=0, epsrel=1e-12, limit=200)
        assert mass == pytest.approx(1.0, rel=1e-9)


class TestBubbleValue:
    def test_peak_value_n4(self, p4):
        # the normalization that makes U^(p-1) the fractional Laplacian of U
        assert bubble_value(p4, BubbleSpec(), np.zeros(4)) == pytest.approx(3 ** 1.5, rel=1e-14)

    def test_quarter_power_normalization_breaks_the_equation(self, p4):
        # the peak 3^(3/4) would need a different power in U^(p-1) = (-Delta)^s U
        y = np.zeros(4)
        u = bubble_value(p4, BubbleSpec(), y)
        lap = extension_trace_derivative(p4, BubbleSpec(), y)
        scaled = 3 ** 0.75 / u
        assert lap == pytest.approx(u ** (p4.p_crit - 1), rel=1e-3)
        assert abs(scaled * lap - (scaled * u) ** (p4.p_crit - 1)) > 0.1 * scaled * lap

    def test_nonlinear_image_peak(self, p4):
        assert bubble_nonlinear_image(p4, BubbleSpec(), np.zeros(4)) == pytest.approx(3 ** 2.5, rel=1e-13)

    @given(point(4))
    def test_radial_symmetry(self, y):
        p = SpectralParams(4, 0.5)
        assert bubble_value(p, BubbleSpec(), y) == bubble_value(p, BubbleSpec(), -y)

    @given(point(4), st.floats(0.1, 10), point(4))
    def test_scaling_covariance(self, y, lam, x):
        p = SpectralParams(4, 0.5)
        lhs = bubble_value(p, BubbleSpec(tuple(x), lam), y)
        rhs = lam ** (p.tau / 2) * bubble_value(p, BubbleSpec(), lam * (y - x))
        assert lhs == pytest.approx(rhs, rel=1e-12)

    @given(point(3))
    def test_positive_and_radially_decreasing(self, y):
        p = SpectralParams(3, 0.3)
        v = bubble_value(p, BubbleSpec(), y)
        assert v > 0
        assert bubble_value(p, BubbleSpec(), 1.5 * y) <= v

    def test_far_field_decay_rate(self, params):
        e = np.zeros(params.N)
        e[0] = 1.0
        rs = np.array([1e3, 1e4, 1e5])
        vals = [bubble_nonlinear_image(params, BubbleSpec(), r * e) for r in rs]
        slope = np.polyfit(np.log(rs), np.log(vals), 1)[0]
        assert slope == pytest.approx(-(params.N + 2 * params.s), abs=1e-4)

    def test_rejects_bad_scale_and_dimension(self, p3):
        with pytest.raises(ParameterError):
            BubbleSpec(lam=0.0)
        with pytest.raises(ParameterError):
            bubble_value(p3, BubbleSpec(), np.zeros(4))


class TestKernels:
    def test_translation_kernels_vanish_at_centre(self, params):
        for i in range(1, params.N + 1):
            assert kernel_value(params, KernelIndex(i), np.zeros(params.N)) == 0.0

    def test_scale_kernel_at_centre(self, p4):
        assert kernel_value(p4, KernelIndex(0), np.zeros(4)) == pytest.approx(1.5 * 3 ** 1.5, rel=1e-13)

    def test_scale_kernel_matches_lambda_derivative(self, p3):
        y = np.array([0.7, -0.2, 1.1])
        eps = 1e-6
        fd = (bubble_value(p3, BubbleSpec(lam=1 + eps), y) - bubble_value(p3, BubbleSpec(lam=1 - eps), y)) / (2 * eps)
        assert kernel_value(p3, KernelIndex(0), y) == pytest.approx(fd, rel=1e-8)

    @given(point(3), st.integers(1, 3))
    def test_parity(self, y, i):
        p = SpectralParams(3, 0.3)
        z = kernel_value(p, KernelIndex(i), y)
        assert kernel_value(p, KernelIndex(i), -y) == pytest.approx(-z, abs=1e-15)
        flipped = y.copy()
        j = i % 3
        flipped[j] = -flipped[j]
        assert kernel_value(p, KernelIndex(i), flipped) == pytest.approx(z, abs=1e-15)
        assert kernel_value(p, KernelIndex(0), y) == pytest.approx(kernel_value(p, KernelIndex(0), y[::-1]), rel=1e-13)

    def test_index_out_of_range(self, p3):
        with pytest.raises(DomainError):
            kernel_value(p3, KernelIndex(4), np.zeros(3))


class TestExtension:
    def test_matches_radial_quadrature(self, p3):
        N, s, t = 3, 0.3, 1.0

        def integrand(rho):
            u = p3.c_norm * (1 + rho * rho) ** (-p3.tau / 2)
            return extension_kernel(p3, rho, t) * u * sphere_area(N) * rho ** (N - 1)

        ref, _ = integrate.quad(integrand, 0, np.inf, epsabs=0, epsrel=1e-12, limit=400)
        assert extension_value(p3, BubbleSpec(), np.zeros(3), t) == pytest.approx(ref, rel=1e-8)

    def test_small_t_recovers_the_trace(self, params):
        y = np.full(params.N, 0.3)
        exact = bubble_value(params, BubbleSpec(), y)
        ts = np.array([1e-2, 1e-3, 1e-4, 1e-5])
        errs = [abs(extension_value(params, BubbleSpec(), y, t) - exact) for t in ts]
        assert all(b < a for a, b in zip(errs, errs[1:]))
        # the approach is governed by the t^(2s) term of the expansion
        assert np.polyfit(np.log(ts), np.log(errs), 1)[0] == pytest.approx(2 * params.s, abs=0.05)

    def test_trace_derivative_of_bubble(self, p3):
        y = np.zeros(3)
        assert extension_trace_derivative(p3, BubbleSpec(), y) == pytest.approx(
            bubble_nonlinear_image(p3, BubbleSpec(), y), rel=1e-3)

    @pytest.mark.parametrize("i", [0, 1])
    def test_trace_derivative_of_kernels(self, params, i):
        y = np.linspace(0.4, 1.2, params.N)
        assert extension_trace_derivative(params, KernelIndex(i), y) == pytest.approx(
            linearized_image(params, KernelIndex(i), y), rel=1e-3)

    def test_zero_input(self, p3):
        assert extension_trace_derivative(p3, ZeroField(p3), np.zeros(3)) == 0.0

    def test_richardson_exact_on_model_expansion(self):
        s = 0.3
        ts = 0.5 * 2.0 ** -np.arange(7)
        g = 2.0 + 0.7 * ts ** (2 - 2 * s) - 0.2 * ts ** 2 + 0.05 * ts ** (4 - 2 * s)
        limit, err = richardson_limit(g, s)
        assert limit == pytest.approx(2.0, abs=1e-12)
        assert err < 1e-10

    def test_divergent_ladder_raises(self, p3, monkeypatch):
        from fracbubble import bubble

        monkeypatch.setattr(bubble.RadialField, "weighted_dt_ladder",
                            lambda self, y, quad: np.array([1.0, -3.0, 9.0, -27.0, 81.0, -243.0, 729.0]))
        with pytest.raises(NumericError):
            extension_trace_derivative(p3, BubbleSpec(), np.zeros(3))


class TestGradientBound:
    def test_bounded_across_radii(self, p3):
        ratios = []
        for d in (1.0, 2.0, 4.0, 8.0):
            rep = extension_gradient_bound_check(p3, BubbleSpec(), hemisphere_samples(p3, np.zeros(3), d, 16))
            assert math.isfinite(rep.lhs) and rep.lhs > 0
            ratios.append(rep.lhs)
        assert ratios[-1] / ratios[0] < 2.0

    def test_zero_field_ratio(self, p3):
        rep = extension_gradient_bound_check(p3, ZeroField(p3), hemisphere_samples(p3, np.zeros(3), 1.0, 4))
        assert rep.lhs == 0.0

    def test_rejects_points_off_the_sphere(self, p3):
        samples = hemisphere_samples(p3, np.zeros(3), 1.0, 4) + [(np.zeros(3), 2.0)]
        with pytest.raises(ValueError):
            extension_gradient_bound_check(p3, BubbleSpec(), samples)
