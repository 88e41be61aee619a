import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import special

from fracbubble import (
    BubbleSpec,
    DomainError,
    FieldPair,
    HalfBallDomain,
    KernelIndex,
    ParameterError,
    PotentialModel,
    QuadratureSpec,
    SpectralParams,
    dilation_identity_residual,
    translation_identity_residual,
    weighted_hemisphere_integral,
)
from fracbubble._common import sphere_area
from fracbubble.pohozaev import LINEARIZED, SAME, large_domain_trend, weighted_hemisphere_area

P3 = SpectralParams(3, 0.3)


def ball(params, radius, center=None):
    return HalfBallDomain(np.zeros(params.N) if center is None else center, radius)


class TestHemisphereQuadrature:
    @pytest.mark.parametrize("delta", [0.5, 3.0, 10.0])
    def test_weighted_area(self, params, delta):
        val = weighted_hemisphere_integral(lambda Y, T: np.ones(len(T)), ball(params, delta), params=params)
        assert val == pytest.approx(weighted_hemisphere_area(params, delta), rel=2e-5)

    def test_weighted_area_converges_under_refinement(self, params):
        exact = weighted_hemisphere_area(params, 1.0)
        q = QuadratureSpec()
        coarse = abs(weighted_hemisphere_integral(lambda Y, T: np.ones(len(T)), ball(params, 1.0), q, params) / exact - 1)
        fine = abs(weighted_hemisphere_integral(lambda Y, T: np.ones(len(T)), ball(params, 1.0), q.refined(), params) / exact - 1)
        assert fine < coarse / 4

    def test_unweighted_area(self, params):
        delta = 2.0
        val = weighted_hemisphere_integral(lambda Y, T: T ** (2 * params.s - 1), ball(params, delta), params=params)
        exact = delta ** params.N * sphere_area(params.N) * 0.5 * special.beta(params.N / 2, 0.5)
        assert exact == pytest.approx(0.5 * sphere_area(params.N + 1) * delta ** params.N, rel=1e-12)
        assert val == pytest.approx(exact, rel=1e-5)

    @given(st.floats(0.1, 5.0), st.integers(1, 3))
    @settings(max_examples=20, deadline=None)
    def test_odd_integrand_vanishes(self, delta, power):
        val = weighted_hemisphere_integral(lambda Y, T: Y[:, 0] ** (2 * power - 1) * (1 + T), ball(P3, delta), params=P3)
        assert abs(val) <= 1e-12 * delta ** (2 * power + 2)

    def test_s_only_form(self):
        a = weighted_hemisphere_integral(lambda Y, T: np.ones(len(T)), ball(P3, 1.0), s=0.3)
        b = weighted_hemisphere_integral(lambda Y, T: np.ones(len(T)), ball(P3, 1.0), params=P3)
        assert a == b
        with pytest.raises(ParameterError):
            weighted_hemisphere_integral(lambda Y, T: T, ball(P3, 1.0))

    def test_several_integrands_at_once(self):
        out = weighted_hemisphere_integral(lambda Y, T: np.stack([np.ones(len(T)), 2 * np.ones(len(T))], 1),
                                           ball(P3, 1.0), params=P3)
        assert out[1] == pytest.approx(2 * out[0], rel=1e-15)


class TestTranslationIdentity:
    def test_bubble_and_kernel(self, params):
        rep = translation_identity_residual(FieldPair.bubble_and_kernel(params, 1), ball(params, 3.0))
        assert rep.passed and rep.rel_residual <= 1e-3
        assert rep.terms["flat_volume"] == 0.0

    def test_refinement_reduces_residual(self, p3):
        pair = FieldPair.bubble_and_kernel(p3, 1)
        coarse = translation_identity_residual(pair, ball(p3, 3.0))
        fine = translation_identity_residual(pair, ball(p3, 3.0), quad=QuadratureSpec().refined())
        assert fine.rel_residual * 4 <= coarse.rel_residual

    @pytest.mark.parametrize("i", [1, 2, 3])
    def test_every_direction_off_centre(self, p3, i):
        center = np.array([0.4, -0.3, 0.2])
        rep = translation_identity_residual(FieldPair.bubble_and_kernel(p3, i), ball(p3, 2.5, center), i=i)
        assert rep.rel_residual <= 1e-3

    def test_zero_test_field(self, params):
        rep = translation_identity_residual(FieldPair(params, BubbleSpec(), None), ball(params, 3.0))
        assert rep.lhs == 0.0 and rep.rhs == 0.0
        assert all(v == 0.0 for v in rep.terms.values())

    def test_volume_term_vanishes_for_even_fields(self, p3):
        # Z_0 and U are even in y_1 while the radial K has an odd y_1-derivative
        pot = PotentialModel.default(p3)
        even = translation_identity_residual(FieldPair(p3, BubbleSpec(), KernelIndex(0)), ball(p3, 3.0), pot, i=1)
        odd = translation_identity_residual(FieldPair.bubble_and_kernel(p3, 1), ball(p3, 3.0), pot, i=1)
        assert abs(odd.terms["flat_volume"]) > 1e-2
        assert abs(even.terms["flat_volume"]) <= 1e-10 * abs(odd.terms["flat_volume"])

    def test_large_domain_decay(self, params):
        trend = large_domain_trend(params)
        for side in (1, 2):
            vals = [row[side] for row in trend]
            assert all(b < a for a, b in zip(vals, vals[1:]))

    def test_dimension_mismatch(self, p3):
        with pytest.raises(DomainError):
            translation_identity_residual(FieldPair.bubble_and_kernel(p3, 1), HalfBallDomain(np.zeros(4), 1.0))

    def test_direction_range(self, p3):
        with pytest.raises((DomainError, ParameterError)):
            translation_identity_residual(FieldPair.bubble_and_kernel(p3, 1), ball(p3, 1.0), i=4)


class TestDilationIdentity:
    @pytest.mark.parametrize("delta", [3.0, 6.0])
    def test_bubble_with_itself(self, params, delta):
        rep = dilation_identity_residual(FieldPair.bubble_with_itself(params), ball(params, delta))
        assert rep.lhs == 0.0
        assert rep.rel_residual <= 1e-3

    def test_unit_flat_factor_does_not_balance(self, params):
        # with xi = u the flat terms enter with 2/p, not 1
        rep = dilation_identity_residual(FieldPair.bubble_with_itself(params), ball(params, 3.0))
        assert rep.details["flat_factor"] == pytest.approx(2 / params.p_crit)
        assert rep.details["unit_factor_residual"] > 1e-2

    def test_linearized_pair(self, p3):
        pair = FieldPair.bubble_and_kernel(p3, 0)
        rep = dilation_identity_residual(pair, ball(p3, 3.0))
        assert pair.flat_factor == 1.0
        assert rep.rel_residual <= 1e-3
        assert rep.details["unit_factor_residual"] == pytest.approx(rep.rel_residual, rel=1e-9, abs=1e-15)

    def test_off_centre_base_point(self, p3):
        rep = dilation_identity_residual(FieldPair.bubble_with_itself(p3), ball(p3, 3.0), x0=np.array([0.5, 0.0, -0.5]))
        assert rep.rel_residual <= 1e-3

    def test_zero_test_field(self, p3):
        rep = dilation_identity_residual(FieldPair(p3, BubbleSpec(), None), ball(p3, 3.0))
        assert all(v == 0.0 for v in rep.terms.values())

    def test_pair_validation(self, p3):
        with pytest.raises(ParameterError):
            FieldPair(p3, BubbleSpec(), BubbleSpec(), xi_equation="other")
        assert FieldPair(p3, xi=BubbleSpec(), xi_equation=SAME).flat_factor == pytest.approx(2 / p3.p_crit)
        assert FieldPair(p3, xi=KernelIndex(1), xi_equation=LINEARIZED).flat_factor == 1.0
