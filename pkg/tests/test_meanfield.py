"""Fixed points, stability, and the critical line, checked against
closed forms and independent scipy.integrate/optimize oracles."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import dblquad, quad
from scipy.optimize import brentq

import edgeofchaos as eoc
from edgeofchaos import HyperParams


def gauss_pdf(z):
    return math.exp(-0.5 * z * z) / math.sqrt(2.0 * math.pi)


def q_map_quad(q, sw, sb):
    """Length map via adaptive quadrature — independent of the package."""
    val, err = quad(
        lambda z: math.tanh(math.sqrt(q) * z) ** 2 * gauss_pdf(z),
        -15, 15, epsabs=1e-13, epsrel=1e-13, limit=400,
    )
    assert err < 1e-11
    return sw * sw * val + sb * sb


def q_star_quad(sw, sb):
    return brentq(lambda q: q_map_quad(q, sw, sb) - q, 1e-12, 50.0, xtol=1e-13)


def chi1_quad(sw, sb):
    qs = q_star_quad(sw, sb)
    val, _ = quad(
        lambda z: (1 - math.tanh(math.sqrt(qs) * z) ** 2) ** 2 * gauss_pdf(z),
        -15, 15, epsabs=1e-13, epsrel=1e-13, limit=400,
    )
    return sw * sw * val


class TestActivations:
    def test_registry(self):
        assert eoc.get_activation("tanh").name == "tanh"
        assert eoc.get_activation("linear").name == "linear"
        with pytest.raises(ValueError):
            eoc.get_activation("relu6")

    @pytest.mark.parametrize("x", [-3.0, -0.7, 0.0, 0.4, 2.5])
    def test_tanh_derivatives_consistent(self, tanh_act, x):
        h = 1e-6
        d_num = (tanh_act.phi(x + h) - tanh_act.phi(x - h)) / (2 * h)
        d2_num = (tanh_act.dphi(x + h) - tanh_act.dphi(x - h)) / (2 * h)
        assert abs(tanh_act.dphi(x) - d_num) < 5e-11
        assert abs(tanh_act.d2phi(x) - d2_num) < 5e-10

    def test_tanh_derivative_no_overflow(self, tanh_act):
        # cosh-based forms would overflow here
        big = np.array([-400.0, 400.0])
        assert np.all(np.isfinite(tanh_act.dphi(big)))
        assert np.all(np.isfinite(tanh_act.d2phi(big)))


class TestHyperParams:
    def test_validation(self):
        with pytest.raises(ValueError):
            HyperParams(sigma_w=0.0, sigma_b=0.3)
        with pytest.raises(ValueError):
            HyperParams(sigma_w=-1.0, sigma_b=0.3)
        with pytest.raises(ValueError):
            HyperParams(sigma_w=1.0, sigma_b=-0.1)

    def test_frozen(self):
        hp = HyperParams(1.0, 0.3)
        with pytest.raises(AttributeError):
            hp.sigma_w = 2.0


class TestQFixedPoint:
    def test_linear_closed_form(self):
        lin = eoc.linear_activation()
        for sw in (0.2, 0.5, 0.8, 0.95):
            for sb in (0.1, 0.4):
                res = eoc.q_fixed_point(HyperParams(sw, sb), lin)
                want = sb**2 / (1 - sw**2)
                assert res.converged and res.stable
                assert abs(res.value - want) < 1e-10

    @pytest.mark.parametrize("sw,sb", [(1.6, 0.4), (1.39, 0.3), (0.8, 0.1)])
    def test_tanh_vs_quad_oracle(self, tanh_act, sw, sb):
        res = eoc.q_fixed_point(HyperParams(sw, sb), tanh_act)
        want = q_star_quad(sw, sb)
        assert res.converged
        assert abs(res.value - want) < 1e-8

    def test_zero_bias_subcritical_collapses(self, tanh_act):
        res = eoc.q_fixed_point(HyperParams(0.5, 0.0), tanh_act)
        assert res.value < 1e-9
        assert res.stable

    def test_zero_bias_supercritical_nonzero(self, tanh_act):
        res = eoc.q_fixed_point(HyperParams(1.5, 0.0), tanh_act)
        assert res.value > 0.1
        assert res.converged

    def test_residual_reported(self, tanh_act):
        res = eoc.q_fixed_point(HyperParams(1.2, 0.2), tanh_act)
        step = eoc.q_map_step(res.value, HyperParams(1.2, 0.2), tanh_act)
        assert abs(step - res.value) == pytest.approx(res.residual, abs=1e-15)

    def test_bad_arguments(self, tanh_act):
        with pytest.raises(ValueError):
            eoc.q_fixed_point(HyperParams(1.0, 0.3), tanh_act, tol=0.0)
        with pytest.raises(ValueError):
            eoc.q_fixed_point(HyperParams(1.0, 0.3), tanh_act, max_iter=0)

    @given(
        sw=st.floats(min_value=0.3, max_value=3.0),
        sb=st.floats(min_value=0.05, max_value=2.0),
    )
    @settings(max_examples=40, deadline=None)
    def test_fixed_point_property(self, tanh_act, sw, sb):
        """q* converges, is at least σ_b², and satisfies its own map."""
        hp = HyperParams(sw, sb)
        res = eoc.q_fixed_point(hp, tanh_act)
        assert res.converged
        assert res.value >= sb**2 - 1e-12
        assert res.residual < 1e-9


class TestQMapStep:
    def test_vs_quad_oracle(self, tanh_act):
        got = eoc.q_map_step(1.2, HyperParams(1.6, 0.4), tanh_act)
        assert abs(got - q_map_quad(1.2, 1.6, 0.4)) < 1e-10

    def test_lower_bound_is_bias_variance(self, tanh_act):
        assert eoc.q_map_step(0.0, HyperParams(2.0, 0.7), tanh_act) == pytest.approx(0.49)

    def test_negative_q_rejected(self, tanh_act):
        with pytest.raises(ValueError):
            eoc.q_map_step(-0.5, HyperParams(1.0, 0.3), tanh_act)


class TestCMapStep:
    def test_c_equal_one_is_fixed(self, tanh_act):
        hp = HyperParams(1.7, 0.5)
        q_star = eoc.q_fixed_point(hp, tanh_act).value
        assert abs(eoc.c_map_step(1.0, q_star, hp, tanh_act) - 1.0) < 1e-12

    def test_c_zero_reduces_to_bias_term(self, tanh_act):
        # tanh is odd, so the two-point expectation factorizes to zero
        hp = HyperParams(1.7, 0.5)
        q_star = eoc.q_fixed_point(hp, tanh_act).value
        got = eoc.c_map_step(0.0, q_star, hp, tanh_act)
        assert abs(got - hp.sigma_b**2 / q_star) < 1e-13

    def test_vs_dblquad_oracle(self, tanh_act):
        sw, sb, c = 1.6, 0.4, 0.6
        hp = HyperParams(sw, sb)
        q_star = eoc.q_fixed_point(hp, tanh_act).value
        sq, root = math.sqrt(q_star), math.sqrt(1 - c * c)
        cov, err = dblquad(
            lambda zb, za: math.tanh(sq * za)
            * math.tanh(sq * (c * za + root * zb))
            * gauss_pdf(za) * gauss_pdf(zb),
            -10, 10, -10, 10, epsabs=1e-12,
        )
        assert err < 1e-9
        want = (sw**2 * cov + sb**2) / q_star
        got = eoc.c_map_step(c, q_star, hp, tanh_act)
        assert abs(got - want) < 1e-8

    def test_monotone_in_c(self, tanh_act):
        hp = HyperParams(1.39, 0.3)
        q_star = eoc.q_fixed_point(hp, tanh_act).value
        cs = np.linspace(-1, 1, 21)
        vals = [eoc.c_map_step(float(c), q_star, hp, tanh_act) for c in cs]
        assert np.all(np.diff(vals) > 0)

    def test_domain_checks(self, tanh_act):
        hp = HyperParams(1.0, 0.3)
        with pytest.raises(ValueError):
            eoc.c_map_step(1.5, 1.0, hp, tanh_act)
        with pytest.raises(ValueError):
            eoc.c_map_step(0.5, 0.0, hp, tanh_act)


class TestChi1AndCriticalLine:
    def test_chi1_vs_quad_oracle(self, tanh_act):
        got = eoc.chi1(HyperParams(1.2, 0.3), tanh_act)
        assert abs(got - chi1_quad(1.2, 0.3)) < 1e-8

    def test_chi1_orders_the_phases(self, tanh_act):
        assert eoc.chi1(HyperParams(1.0, 0.3), tanh_act) < 1
        assert eoc.chi1(HyperParams(2.5, 0.3), tanh_act) > 1

    def test_critical_point_at_reference_bias(self, tanh_act):
        swc = eoc.critical_sigma_w(0.3, tanh_act)
        want = brentq(lambda sw: chi1_quad(sw, 0.3) - 1.0, 1.0, 2.0, xtol=1e-10)
        assert abs(swc - want) < 2e-6
        assert abs(eoc.chi1(HyperParams(swc, 0.3), tanh_act) - 1) < 1e-7

    def test_zero_bias_closed_form(self, tanh_act):
        assert eoc.critical_sigma_w(0.0, tanh_act) == 1.0
        assert eoc.critical_sigma_w(0.0, eoc.linear_activation()) == 1.0

    def test_bad_bracket_reported(self, tanh_act):
        with pytest.raises(ValueError, match="sign change"):
            eoc.critical_sigma_w(0.3, tanh_act, bracket=(2.0, 3.0))

    def test_critical_line_monotone(self, tanh_act):
        line = eoc.critical_line([0.1, 0.5, 1.0, 2.0], tanh_act)
        assert line.non_decreasing
        sws = [sw for _, sw in line.points]
        assert sws[0] > 1.0 and sws[-1] < 3.0

    def test_critical_line_empty_input(self, tanh_act):
        with pytest.raises(ValueError):
            eoc.critical_line([], tanh_act)


class TestCFixedPoints:
    def test_ordered_phase_single_stable_point(self, tanh_act):
        results = eoc.c_fixed_points(HyperParams(1.0, 0.3), tanh_act)
        stable = [r for r in results if r.stable and not r.degenerate]
        assert len(stable) == 1
        assert stable[0].value == pytest.approx(1.0, abs=1e-9)

    def test_chaotic_phase_splits_off_stable_point(self, tanh_act):
        """Deep in the chaotic phase c = 1 is unstable and a stable
        decorrelated point appears below it; its location is checked
        against an adaptive-quadrature bisection oracle."""
        hp = HyperParams(4.0, 0.3)
        results = eoc.c_fixed_points(hp, tanh_act)
        stable = [r for r in results if r.stable]
        unstable_one = [
            r for r in results if not r.stable and abs(r.value - 1.0) < 1e-9
        ]
        assert len(stable) == 1 and len(unstable_one) == 1
        c_star = stable[0].value
        assert 0.0 < c_star < 0.2

        q_star = q_star_quad(4.0, 0.3)
        sq = math.sqrt(q_star)

        def c_map_oracle(c):
            root = math.sqrt(1 - c * c)
            cov, _ = dblquad(
                lambda zb, za: math.tanh(sq * za)
                * math.tanh(sq * (c * za + root * zb))
                * gauss_pdf(za) * gauss_pdf(zb),
                -9, 9, -9, 9, epsabs=1e-11,
            )
            return (16.0 * cov + 0.09) / q_star

        want = brentq(lambda c: c_map_oracle(c) - c, 1e-4, 0.5, xtol=1e-9)
        assert abs(c_star - want) < 1e-6

    @pytest.mark.parametrize("sw,expect_one", [(0.6, True), (1.0, True), (2.5, False), (4.0, False)])
    def test_order_parameter_dichotomy(self, tanh_act, sw, expect_one):
        # the stable correlation is 1 in the ordered phase, < 1 in the chaotic
        results = eoc.c_fixed_points(HyperParams(sw, 0.3), tanh_act)
        stable = [r for r in results if r.stable and not r.degenerate]
        assert len(stable) == 1
        if expect_one:
            assert stable[0].value == pytest.approx(1.0, abs=1e-9)
        else:
            assert stable[0].value < 1.0 - 1e-3


class TestDepthScales:
    def test_identity_with_chi1_in_ordered_phase(self, tanh_act):
        for sw, sb in ((0.7, 0.2), (1.1, 0.3), (1.15, 0.5)):
            scales = eoc.depth_scales(HyperParams(sw, sb), tanh_act)
            assert scales.chi1 < 1
            assert abs(scales.zeta_c * math.log(scales.chi1) + 1) < 1e-12

    def test_zeta_q_vs_finite_difference(self, tanh_act):
        hp = HyperParams(1.2, 0.3)
        scales = eoc.depth_scales(hp, tanh_act)
        q_star = eoc.q_fixed_point(hp, tanh_act).value
        h = 1e-6
        rate = (
            eoc.q_map_step(q_star + h, hp, tanh_act)
            - eoc.q_map_step(q_star - h, hp, tanh_act)
        ) / (2 * h)
        assert abs(scales.zeta_q - (-1.0 / math.log(rate))) < 1e-6

    def test_infinite_correlation_depth_at_criticality(self, tanh_act):
        swc = eoc.critical_sigma_w(0.3, tanh_act, tol=1e-12)
        scales = eoc.depth_scales(HyperParams(swc, 0.3), tanh_act)
        assert math.isinf(scales.zeta_c)
        assert math.isfinite(scales.zeta_q)

    def test_chaotic_phase_finite_scales(self, tanh_act):
        scales = eoc.depth_scales(HyperParams(2.5, 0.3), tanh_act)
        assert math.isfinite(scales.zeta_c) and scales.zeta_c > 0
        assert math.isfinite(scales.zeta_q) and scales.zeta_q > 0
