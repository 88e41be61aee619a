import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate, special

from conftest import constants_for
from fracbubble import (
    DomainError,
    NormSpec,
    ParameterError,
    PotentialModel,
    SampledField,
    SpectralParams,
    build_cylinder_config,
    convolution_estimate_check,
    dstar_norm,
    pair_product_bound_check,
    star_norm,
)
from fracbubble._common import sphere_area
from fracbubble.energy import reference_point
from fracbubble.norms import (
    configuration_field,
    default_pair_samples,
    error_terms,
    pair_product_implied_constants,
    riesz_convolution,
    sample_design,
    tau_interval,
)

P3 = SpectralParams(3, 0.3)
K = 16


def reference_config(params, k=K):
    C = constants_for(params, k)
    ref = reference_point(params, C, k)
    return build_cylinder_config(params, k, ref.r, ref.h, ref.lam, m=C.m)


CFG3 = reference_config(P3)
SPEC3 = NormSpec(P3, CFG3)
PTS3 = sample_design(CFG3, 1)

# the sample design has thousands of points, so draw a seed and a scale
# rather than every value
values = st.builds(
    lambda seed, scale, sparse: np.random.default_rng(seed).standard_normal(len(PTS3)) * scale
    * (np.random.default_rng(seed + 1).random(len(PTS3)) < sparse),
    st.integers(0, 2 ** 32 - 1), st.floats(1e-3, 1e3), st.sampled_from([0.01, 0.5, 1.0]),
)


class TestNormBasics:
    def test_default_tau_is_interval_midpoint(self, params):
        spec = NormSpec(params, reference_config(params))
        lo, hi = tau_interval(params, spec.m)
        assert spec.tau == pytest.approx(0.5 * (lo + hi))

    def test_tau_validation(self):
        lo, hi = tau_interval(P3, SPEC3.m)
        for bad in (lo, hi, lo - 0.1, hi + 0.1):
            with pytest.raises(ParameterError):
                NormSpec(P3, CFG3, tau=bad)

    def test_field_validation(self):
        with pytest.raises(ParameterError):
            SampledField(np.zeros((3, 3)), np.zeros(2))

    def test_zero_field(self):
        f = SampledField(PTS3, np.zeros(len(PTS3)))
        assert star_norm(f, SPEC3) == 0.0 and dstar_norm(f, SPEC3) == 0.0

    def test_weight_itself_has_unit_norm(self):
        for dual, norm in ((False, star_norm), (True, dstar_norm)):
            f = SampledField.from_function(lambda y: SPEC3.weight(y, dual=dual), PTS3)
            assert norm(f, SPEC3) == pytest.approx(1.0, rel=1e-14)

    @given(values, st.floats(-50, 50, allow_nan=False))
    @settings(max_examples=25, deadline=None)
    def test_absolute_homogeneity(self, v, c):
        for norm in (star_norm, dstar_norm):
            a = norm(SampledField(PTS3, c * v), SPEC3)
            assert a == pytest.approx(abs(c) * norm(SampledField(PTS3, v), SPEC3), rel=1e-12, abs=1e-300)

    @given(values, values)
    @settings(max_examples=25, deadline=None)
    def test_subadditivity(self, u, v):
        for norm in (star_norm, dstar_norm):
            lhs = norm(SampledField(PTS3, u + v), SPEC3)
            assert lhs <= norm(SampledField(PTS3, u), SPEC3) + norm(SampledField(PTS3, v), SPEC3) * (1 + 1e-12)


class TestSampleDesign:
    def test_contains_points_and_far_shell(self):
        pts = PTS3
        for x in CFG3.points:
            assert np.min(np.linalg.norm(pts - x, axis=1)) == 0.0
        assert np.max(np.linalg.norm(pts, axis=1)) > 50 * CFG3.r * math.sqrt(1 - CFG3.h ** 2) / CFG3.k

    def test_designs_are_nested(self):
        fine = sample_design(CFG3, 2)
        assert all(np.min(np.linalg.norm(fine - p, axis=1)) == 0.0 for p in PTS3[::97])
        assert len(fine) > len(PTS3)

    def test_norms_monotone_under_refinement(self, params):
        cfg = reference_config(params)
        spec = NormSpec(params, cfg)
        prev = 0.0
        for density in (1, 2):
            pts = sample_design(cfg, density)
            val = star_norm(SampledField(pts, configuration_field(params, cfg, pts)), spec)
            assert val >= prev
            prev = val

    def test_W_star_norm_stable_under_refinement(self, params):
        cfg = reference_config(params)
        spec = NormSpec(params, cfg)
        vals = []
        for density in (1, 2):
            pts = sample_design(cfg, density)
            vals.append(star_norm(SampledField(pts, configuration_field(params, cfg, pts)), spec))
        assert math.isfinite(vals[0]) and vals[1] == pytest.approx(vals[0], rel=0.05)

    def test_nonlinear_power_dstar_norm_stable(self, params):
        cfg = reference_config(params)
        spec = NormSpec(params, cfg)
        vals = []
        for density in (1, 2):
            pts = sample_design(cfg, density)
            vals.append(dstar_norm(SampledField(pts, configuration_field(params, cfg, pts, params.p_crit - 1)), spec))
        assert vals[1] == pytest.approx(vals[0], rel=0.05)


class TestErrorTerms:
    def test_signs_and_support(self, params):
        cfg = reference_config(params)
        pts = sample_design(cfg, 1)
        J1, J2 = error_terms(params, cfg, PotentialModel.default(params), pts)
        assert np.all(J1 >= -1e-12 * np.abs(J1).max())
        assert np.all(J2 <= 0)
        far = np.abs(np.linalg.norm(pts, axis=1) / cfg.mu - 1.0) >= 0.5
        assert np.all(J2[far] == 0.0)


class TestConvolution:
    def test_origin_closed_form(self, params):
        sigma = params.tau / 2
        assert riesz_convolution(params, sigma, 0.0) == pytest.approx(
            sphere_area(params.N) * special.beta(2 * params.s, sigma), rel=1e-12)

    @pytest.mark.parametrize("a", [0.5, 1.0, 4.0, 30.0])
    def test_matches_shell_average_oracle(self, a):
        # in three dimensions the spherical mean of |y - z|^-tau is explicit
        tau, sigma = P3.tau, 1.1
        e = 2 * P3.s + sigma

        def f(rho):
            mean = (abs(a + rho) ** (2 - tau) - abs(a - rho) ** (2 - tau)) / (a * rho * (2 - tau) * 2)
            return 4 * math.pi * rho ** 2 * mean * (1 + rho) ** -e

        ref = sum(integrate.quad(f, lo, hi, epsabs=0, epsrel=1e-11, limit=400, points=None)[0]
                  for lo, hi in ((0, a), (a, 2 * a), (2 * a, np.inf)))
        assert riesz_convolution(P3, sigma, a) == pytest.approx(ref, rel=1e-7)

    def test_continuous_at_origin(self, params):
        sigma = 0.7
        assert riesz_convolution(params, sigma, 1e-7) == pytest.approx(riesz_convolution(params, sigma, 0.0), rel=1e-4)

    def test_estimate_holds(self, params):
        rep = convolution_estimate_check(params, params.tau / 2)
        assert rep.passed
        assert all(v > 0 for v in rep.terms.values())
        assert rep.rhs <= 1.5

    def test_sigma_range(self, params):
        with pytest.raises(ParameterError):
            convolution_estimate_check(params, params.tau)
        with pytest.raises(ParameterError):
            convolution_estimate_check(params, 0.0)

    def test_needs_two_radii(self):
        with pytest.raises(DomainError):
            convolution_estimate_check(P3, 1.0, sample_ys=(1.0,))


class TestPairProduct:
    xi = np.array([0.0, 0.0, 0.0])
    xj = np.array([10.0, 0.0, 0.0])

    def test_finite_at_a_centre(self):
        c = pair_product_implied_constants(self.xi, self.xj, 2.0, 3.0, 1.5, [self.xi])[0]
        d = 10.0
        expected = (1 + d) ** -3.0 / (d ** -1.5 * (1 + (1 + d) ** -3.5))
        assert c == pytest.approx(expected, rel=1e-13)

    def test_scale_robust(self):
        reps = [pair_product_bound_check(P3, self.xi, s * self.xj, 2.0, 2.0, 1.0) for s in (1, 2, 4, 8)]
        consts = [r.lhs for r in reps]
        assert all(r.passed for r in reps)
        assert max(consts) / min(consts) < 2.0

    def test_symmetric_at_midpoint(self):
        mid = 0.5 * (self.xi + self.xj)
        di = np.linalg.norm(mid - self.xi)
        dj = np.linalg.norm(mid - self.xj)
        assert di == dj
        c = pair_product_implied_constants(self.xi, self.xj, 2.5, 2.5, 2.0, [mid])[0]
        assert c == pytest.approx((1 + di) ** -5 / (10 ** -2 * 2 * (1 + di) ** -3), rel=1e-13)

    def test_default_samples_cover_both_lines(self):
        pts = default_pair_samples(self.xi, self.xj, n=7)
        assert len(pts) == 14
        np.testing.assert_allclose(pts[2], self.xi)
        np.testing.assert_allclose(pts[4], self.xj)
        np.testing.assert_allclose(pts[10], 0.5 * (self.xi + self.xj))

    def test_exponent_validation(self):
        with pytest.raises(ParameterError):
            pair_product_bound_check(P3, self.xi, self.xj, 0.5, 2.0, 0.4)
        with pytest.raises(ParameterError):
            pair_product_bound_check(P3, self.xi, self.xj, 2.0, 2.0, 2.5)
        with pytest.raises(DomainError):
            pair_product_bound_check(P3, self.xi, self.xi, 2.0, 2.0, 1.0)

    def test_explicit_bound(self):
        rep = pair_product_bound_check(P3, self.xi, self.xj, 2.0, 2.0, 1.0, bound=1e-6)
        assert not rep.passed
