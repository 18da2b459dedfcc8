"""Exact integration, the truncated singular operator, commutators and the
fractional integral."""

import math
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

import oracles
from padic_harmonics.core import Ball, Context, Point, Sphere, p_power
from padic_harmonics.functions import (
    CommutatorSymbols,
    CorpusProfile,
    HomogeneousKernel,
    StepFunction,
    random_kernel,
    random_point,
    random_step,
)
from padic_harmonics.operators import (
    Annulus,
    StabilizationError,
    annulus_kernel_integral,
    apply_T,
    apply_T_commutator,
    apply_Tk,
    apply_Tk_as_step,
    apply_commutator,
    apply_commutator_as_step,
    integrate,
    integrate_region,
    kernel_integral_of_step,
    local_constancy_scale,
    riesz,
    riesz_as_grid,
    riesz_normalizer,
)

CTX2 = Context(2, 1)
F = Fraction


def chi(ctx, gamma, *center):
    return StepFunction.indicator(Ball(ctx, gamma, tuple(F(c) for c in center)))


def omega2():
    return HomogeneousKernel.from_values(CTX2, -2, {(F(1),): F(1), (F(3),): F(-1)})


SMALL = CorpusProfile(gamma_min=-3, gamma_max=0, bound_exponent=1, cells=4)


class TestIntegrate:
    def test_unit_ball(self):
        assert integrate(chi(CTX2, 0, 0)) == 1

    def test_value_times_measure(self):
        assert integrate(chi(CTX2, -1, 0).scaled(3)) == F(3, 2)

    def test_zero(self):
        assert integrate(StepFunction.zero(CTX2)) == 0

    @given(seed=st.integers(0, 300))
    @settings(max_examples=40, deadline=None)
    def test_matches_fine_enumeration(self, seed):
        f = random_step(CTX2, seed, SMALL)
        assert integrate(f) == oracles.brute_integral(f)


class TestIntegrateRegion:
    def test_sphere(self):
        f = chi(CTX2, 0, 0)
        assert integrate_region(f, Sphere(CTX2, 0, (F(0),))) == F(1, 2)

    def test_annulus(self):
        f = chi(CTX2, 1, 0)
        region = Annulus(CTX2, (F(0),), 0, 1)
        assert integrate_region(f, region) == 1  # the measure of S_1(0)

    def test_disjoint_region(self):
        f = chi(CTX2, -2, 1)
        assert integrate_region(f, Ball(CTX2, -2, (F(3),))) == 0

    def test_annulus_needs_lo_below_hi(self):
        with pytest.raises(ValueError):
            Annulus(CTX2, (F(0),), 2, 2)


class TestAnnulusCancellation:
    def test_two_cell_kernel(self):
        assert annulus_kernel_integral(omega2(), -3, 0) == 0

    def test_single_sphere(self):
        assert annulus_kernel_integral(omega2(), -1, 0) == 0

    def test_zero_kernel(self):
        assert annulus_kernel_integral(HomogeneousKernel.zero(CTX2, -2), -2, 2) == 0

    @given(seed=st.integers(0, 100), a=st.integers(-5, 3), width=st.integers(1, 4))
    @settings(max_examples=60, deadline=None)
    def test_random_kernels(self, seed, a, width):
        k = random_kernel(Context(3, 1), seed, level=-2)
        assert annulus_kernel_integral(k, a, a + width) == 0


class TestApplyTk:
    def test_disjoint_truncation(self):
        # support needs |y| <= 1 but the domain needs |y| > 1
        assert apply_Tk(omega2(), 0, chi(CTX2, 0, 0), CTX2.zero()) == 0

    def test_shell_cancellation(self):
        assert apply_Tk(omega2(), -2, chi(CTX2, 0, 0), CTX2.zero()) == 0

    def test_worked_value(self):
        assert apply_Tk(omega2(), -3, chi(CTX2, -2, 1), CTX2.zero()) == F(-1, 4)

    @given(seed=st.integers(0, 200), k=st.integers(-4, 2),
           x=st.fractions(min_value=-4, max_value=4, max_denominator=8))
    @settings(max_examples=40, deadline=None)
    def test_matches_fine_enumeration(self, seed, k, x):
        f = random_step(CTX2, seed, SMALL)
        kern = random_kernel(CTX2, seed + 1000, level=-2)
        pt = CTX2.point([x])
        assert apply_Tk(kern, k, f, pt) == oracles.brute_tk(kern, k, f, pt)

    @given(seed=st.integers(0, 200), a=st.integers(-5, 5), b=st.integers(-5, 5))
    @settings(max_examples=30, deadline=None)
    def test_linearity(self, seed, a, b):
        f = random_step(CTX2, seed, SMALL)
        g = random_step(CTX2, seed + 51, SMALL)
        kern = random_kernel(CTX2, seed + 7, level=-2)
        x = random_point(CTX2, seed + 3)
        combo = f.scaled(a) + g.scaled(b)
        assert apply_Tk(kern, -2, combo, x) == a * apply_Tk(
            kern, -2, f, x
        ) + b * apply_Tk(kern, -2, g, x)

    @given(seed=st.integers(0, 200), k=st.integers(-3, 2), drop=st.integers(1, 3))
    @settings(max_examples=30, deadline=None)
    def test_truncation_consistency(self, seed, k, drop):
        """Lowering the truncation adds exactly the annulus contribution."""
        f = random_step(CTX2, seed, SMALL)
        kern = random_kernel(CTX2, seed + 9, level=-2)
        x = random_point(CTX2, seed + 4)
        k_low = k - drop
        h = f.reflect().translate(x)
        mid = h.restrict(Ball(CTX2, k, (F(0),))).restrict_outside(
            Ball(CTX2, k_low, (F(0),))
        )
        annulus_part = kernel_integral_of_step(mid, kern, None)
        assert apply_Tk(kern, k_low, f, x) == apply_Tk(kern, k, f, x) + annulus_part


class TestStabilization:
    def test_unit_indicator_stable_from_minus_one(self):
        f = chi(CTX2, 0, 0)
        kern = omega2()
        values = {apply_Tk(kern, k, f, CTX2.zero()) for k in (-1, -2, -3)}
        assert values == {F(0)}

    def test_worked_value_stabilized(self):
        assert apply_T(omega2(), chi(CTX2, -2, 1), CTX2.zero()) == F(-1, 4)

    def test_zero_function(self):
        assert apply_T(omega2(), StepFunction.zero(CTX2), CTX2.zero()) == 0

    @given(seed=st.integers(0, 300))
    @settings(max_examples=50, deadline=None)
    def test_three_consecutive_truncations_agree(self, seed):
        f = random_step(CTX2, seed, SMALL)
        kern = random_kernel(CTX2, seed + 13, level=-2)
        x = random_point(CTX2, seed + 5)
        ks = local_constancy_scale(f, x)
        values = {apply_Tk(kern, k, f, x) for k in (ks, ks - 1, ks - 2)}
        assert len(values) == 1
        assert apply_T(kern, f, x) == values.pop()


class TestCommutator:
    def test_constant_symbol_annihilates(self):
        # a symbol constant on a ball far larger than every shell in play
        f = chi(CTX2, -2, 1)
        big = chi(CTX2, 6, 0).scaled(F(5, 3))
        symbols = CommutatorSymbols((big,))
        assert apply_commutator(omega2(), -3, symbols, f, CTX2.zero()) == 0

    def test_worked_value(self):
        f = chi(CTX2, -2, 1)
        symbols = CommutatorSymbols((f,))
        assert apply_commutator(omega2(), -3, symbols, f, CTX2.zero()) == F(1, 4)

    def test_zero_function(self):
        symbols = CommutatorSymbols((chi(CTX2, 0, 0),))
        assert apply_commutator(
            omega2(), -3, symbols, StepFunction.zero(CTX2), CTX2.zero()
        ) == 0

    @given(seed=st.integers(0, 150), k=st.integers(-3, 1))
    @settings(max_examples=25, deadline=None)
    def test_matches_fine_enumeration(self, seed, k):
        f = random_step(CTX2, seed, SMALL)
        b1 = random_step(CTX2, seed + 31, SMALL)
        b2 = random_step(CTX2, seed + 37, SMALL)
        kern = random_kernel(CTX2, seed + 3, level=-2)
        x = random_point(CTX2, seed + 17)
        symbols = CommutatorSymbols((b1, b2))
        assert apply_commutator(kern, k, symbols, f, x) == oracles.brute_commutator(
            kern, k, symbols, f, x
        )

    def test_stabilized_variant(self):
        f = chi(CTX2, -2, 1)
        symbols = CommutatorSymbols((f,))
        assert apply_T_commutator(omega2(), symbols, f, CTX2.zero()) == F(1, 4)


class TestRiesz:
    def test_normalizer_symmetric_point(self):
        assert riesz_normalizer(CTX2, F(1, 2)) == pytest.approx(1.0)

    @pytest.mark.parametrize("p", [2, 3, 5])
    def test_unit_indicator_closed_form(self, p):
        ctx = Context(p, 1)
        alpha = F(1, 3)
        f = StepFunction.indicator(Ball(ctx, 0, (F(0),)))
        expected = ((1 - 1 / p) / (1 - float(p) ** (-float(alpha)))) / riesz_normalizer(
            ctx, alpha
        )
        assert riesz(alpha, f, ctx.zero()) == pytest.approx(expected, rel=1e-13)

    def test_zero_function(self):
        assert riesz(F(1, 2), StepFunction.zero(CTX2), CTX2.zero()) == 0.0

    def test_order_validated(self):
        with pytest.raises(ValueError):
            riesz(F(3, 2), chi(CTX2, 0, 0), CTX2.zero())
        with pytest.raises(ValueError):
            riesz(0, chi(CTX2, 0, 0), CTX2.zero())

    @given(seed=st.integers(0, 150),
           x=st.fractions(min_value=-4, max_value=4, max_denominator=8))
    @settings(max_examples=30, deadline=None)
    def test_matches_fine_enumeration(self, seed, x):
        f = random_step(CTX2, seed, SMALL)
        pt = CTX2.point([x])
        alpha = F(2, 5)
        mine = riesz(alpha, f, pt)
        brute = oracles.brute_riesz(alpha, f, pt)
        assert mine == pytest.approx(brute, rel=1e-10, abs=1e-12)


class TestWindowed:
    def test_agreement_on_random_points(self):
        f = random_step(CTX2, 99, SMALL)
        kern = random_kernel(CTX2, 5, level=-2)
        window = Ball(CTX2, 3, (F(0),))
        ws = apply_Tk_as_step(kern, -3, f, window)
        assert ws.level == f.finest_level()
        for seed in range(100):
            x = random_point(CTX2, seed, bound_exponent=3, depth=7)
            if not window.contains_point(x):
                continue
            assert ws.function(x) == apply_Tk(kern, -3, f, x)

    def test_zero_input(self):
        ws = apply_Tk_as_step(
            omega2(), -2, StepFunction.zero(CTX2), Ball(CTX2, 2, (F(0),))
        )
        assert ws.function.is_zero()

    def test_windowed_mass_matches_per_cell_values(self):
        f = random_step(CTX2, 123, SMALL)
        kern = random_kernel(CTX2, 11, level=-2)
        window = Ball(CTX2, 2, (F(0),))
        ws = apply_Tk_as_step(kern, -2, f, window)
        level = ws.level
        expected = sum(
            (apply_Tk(kern, -2, f, pt) * p_power(2, level)
             for pt in oracles.fine_centers(window, level)),
            F(0),
        )
        assert integrate(ws.function) == expected

    def test_stabilized_window(self):
        f = chi(CTX2, -2, 1)
        ws = apply_Tk_as_step(omega2(), None, f, Ball(CTX2, 1, (F(0),)))
        assert ws.function(CTX2.zero()) == F(-1, 4)

    def test_commutator_window_agreement(self):
        f = random_step(CTX2, 55, SMALL)
        b1 = random_step(CTX2, 56, SMALL)
        b2 = random_step(CTX2, 57, SMALL)
        symbols = CommutatorSymbols((b1, b2))
        kern = random_kernel(CTX2, 58, level=-2)
        window = Ball(CTX2, 2, (F(0),))
        ws = apply_commutator_as_step(kern, -2, symbols, f, window)
        for seed in range(40):
            x = random_point(CTX2, seed, bound_exponent=2, depth=7)
            if not window.contains_point(x):
                continue
            assert ws.function(x) == apply_commutator(kern, -2, symbols, f, x)

    def test_riesz_grid_agreement(self):
        f = random_step(CTX2, 31, SMALL)
        window = Ball(CTX2, 1, (F(0),))
        grid = riesz_as_grid(F(1, 2), f, window)
        for seed in range(20):
            x = random_point(CTX2, seed, bound_exponent=1, depth=6)
            if not window.contains_point(x):
                continue
            assert grid(x) == pytest.approx(riesz(F(1, 2), f, x), rel=1e-12, abs=1e-15)
