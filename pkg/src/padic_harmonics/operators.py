"""Exact Haar integration and the singular integral machinery.

The truncated operator acts on a step function through a finite exact sum:
every cell of the (shifted, reflected) argument either contains the origin,
in which case its whole contribution cancels sphere by sphere because the
kernel has zero mean, or sits inside a single sphere, where the kernel
integral over the cell is a finite rational coset sum.  This is what makes
the k -> -infinity limit attainable at a finite truncation index.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Optional, Union

import mpmath

from .core import (
    Ball,
    Context,
    ContextMismatch,
    GAMMA_LIMIT,
    Point,
    Rational,
    Relation,
    Sphere,
    compare,
    join,
    p_power,
)
from .functions import CommutatorSymbols, HomogeneousKernel, StepFunction
from .precision import as_float, p_power_real, real_of, working_precision


class StabilizationError(RuntimeError):
    """The stabilized limit check failed; indicates a broken kernel
    invariant rather than a user error."""


@dataclass(frozen=True)
class Annulus:
    """{y : p**lo < |y - center| <= p**hi}."""

    context: Context
    center: tuple[Fraction, ...]
    lo: int
    hi: int

    def __post_init__(self) -> None:
        if self.lo >= self.hi:
            raise ValueError(f"annulus needs lo < hi, got [{self.lo}, {self.hi}]")
        self.context.check_gamma(self.lo)
        self.context.check_gamma(self.hi)

    def outer_ball(self) -> Ball:
        return Ball(self.context, self.hi, self.center)

    def inner_ball(self) -> Ball:
        return Ball(self.context, self.lo, self.center)


Region = Union[Ball, Sphere, Annulus]


def integrate(f: StepFunction) -> Fraction:
    """Exact Haar integral: sum of value * measure over cells."""
    return f.mass()


def integrate_region(f: StepFunction, region: Region) -> Fraction:
    """Exact integral of f over a ball, sphere or annulus."""
    if region.context != f.context:
        raise ContextMismatch("region context differs from function context")
    if isinstance(region, Ball):
        return f.integral_over(region)
    if isinstance(region, Sphere):
        return f.integral_over(region.outer_ball()) - f.integral_over(
            region.inner_ball()
        )
    if isinstance(region, Annulus):
        return f.integral_over(region.outer_ball()) - f.integral_over(
            region.inner_ball()
        )
    raise TypeError(f"unsupported region {region!r}")


def check_truncation_index(k: int) -> int:
    if not isinstance(k, int) or abs(k) > GAMMA_LIMIT:
        raise ValueError(f"truncation index out of range [-64, 64]: {k!r}")
    return k


def annulus_kernel_integral(kernel: HomogeneousKernel, a: int, b: int) -> Fraction:
    """Exact integral of value(y) / |y|**n over p**a < |y| <= p**b.

    Computed honestly sphere by sphere; the change of variables u = p**j y
    reduces each sphere to the unit-sphere cell sum, so the result is zero
    for every valid (mean-zero) kernel.
    """
    if a >= b:
        raise ValueError(f"annulus needs a < b, got [{a}, {b}]")
    ctx = kernel.context
    total = Fraction(0)
    shell_values = sum((v for _, v in kernel.cells), Fraction(0))
    cell_measure = p_power(ctx.p, ctx.n * kernel.level)
    for _j in range(a + 1, b + 1):
        # p**(-jn) * p**(jn) * sum(value * cell measure) per sphere
        total += shell_values * cell_measure
    return total


# --------------------------------------------------------------------------
# the truncated singular operator


def _cell_kernel_term(
    kernel: HomogeneousKernel,
    k: Optional[int],
    ball: Ball,
    value: Fraction,
) -> Fraction:
    """Contribution of one integrand cell to int_{|y|>p**k} h(y) value(y)/|y|**n dy.

    A cell containing the origin contributes zero (sphere-by-sphere kernel
    cancellation); otherwise the cell sits in a single sphere |y| = p**j and
    the weighted kernel integral collapses to an exact unit-sphere coset sum:
    p**(-jn) * int_cell = int over the scaled cell on the unit sphere.
    """
    ctx = kernel.context
    center = ball.center_point()
    v = center.valuation()
    if v == math.inf or -v <= ball.gamma:
        # |center| <= p**gamma: the cell contains 0
        return Fraction(0)
    j = -int(v)
    if k is not None and j < k + 1:
        return Fraction(0)
    scaled = center.scaled(p_power(ctx.p, j))
    unit_ball = Ball(ctx, ball.gamma - j, scaled.coords)
    return value * kernel.unit_ball_integral(unit_ball)


def kernel_integral_of_step(
    h: StepFunction, kernel: HomogeneousKernel, k: Optional[int]
) -> Fraction:
    """Exact int_{|y|>p**k} h(y) value(y)/|y|**n dy; k None drops the
    truncation (the stabilized limit)."""
    if h.context != kernel.context:
        raise ContextMismatch("function and kernel contexts differ")
    total = Fraction(0)
    for ball, value in h.cells:
        total += _cell_kernel_term(kernel, k, ball, value)
    return total


def apply_Tk(
    kernel: HomogeneousKernel, k: int, f: StepFunction, x: Point
) -> Fraction:
    """Exact truncated singular integral at a point."""
    check_truncation_index(k)
    h = f.reflect().translate(x)  # y |-> f(x - y)
    return kernel_integral_of_step(h, kernel, k)


def local_constancy_scale(f: StepFunction, x: Point) -> int:
    """Largest exponent e (up to the structure of f) with f constant on
    B_e(x); 0 for the zero function."""
    if f.is_zero():
        return 0
    shells = []
    for ball, _ in f.cells:
        if ball.contains_point(x):
            return ball.gamma
        d = x - ball.center_point()
        shells.append(-int(d.valuation()))
    return min(shells) - 1


def apply_T(kernel: HomogeneousKernel, f: StepFunction, x: Point) -> Fraction:
    """The stabilized limit of the truncated operators.

    On a step function the limit is attained at the local constancy scale
    k* of f at x; the implementation evaluates at k* and k* - 1 and checks
    exact agreement before returning.
    """
    ks = local_constancy_scale(f, x)
    first = apply_Tk(kernel, ks, f, x)
    second = apply_Tk(kernel, ks - 1, f, x)
    if first != second:
        raise StabilizationError(
            f"truncations at {ks} and {ks - 1} disagree: {first} vs {second}"
        )
    return first


def apply_commutator(
    kernel: HomogeneousKernel,
    k: int,
    symbols: CommutatorSymbols,
    f: StepFunction,
    x: Point,
) -> Fraction:
    """Exact multi-symbol commutator at a point: the integrand
    prod_i (b_i(x) - b_i(x-y)) * f(x-y) * value(y)/|y|**n is itself a step
    function of y."""
    check_truncation_index(k)
    if symbols.context != f.context:
        raise ContextMismatch("symbols and function contexts differ")
    h = f.reflect().translate(x)
    for b in symbols.symbols:
        b_at_x = b(x)
        shifted = b.reflect().translate(x)
        h = h.scaled(b_at_x) - (h * shifted)
    return kernel_integral_of_step(h, kernel, k)


def apply_T_commutator(
    kernel: HomogeneousKernel,
    symbols: CommutatorSymbols,
    f: StepFunction,
    x: Point,
) -> Fraction:
    """Stabilized-limit commutator (every factor is locally constant below
    the joint constancy scale, so the tail annuli cancel)."""
    ks = min(
        [local_constancy_scale(f, x)]
        + [local_constancy_scale(b, x) for b in symbols.symbols]
    )
    first = apply_commutator(kernel, ks, symbols, f, x)
    second = apply_commutator(kernel, ks - 1, symbols, f, x)
    if first != second:
        raise StabilizationError(
            f"commutator truncations at {ks} and {ks - 1} disagree"
        )
    return first


# --------------------------------------------------------------------------
# Riesz potential


def riesz_normalizer(context: Context, alpha) -> float:
    """(1 - p**(alpha - n)) / (1 - p**(-alpha))."""
    with working_precision():
        a = real_of(alpha)
        num = 1 - p_power_real(context.p, a - context.n)
        den = 1 - p_power_real(context.p, -a)
        return as_float(num / den)


def _check_riesz_order(context: Context, alpha) -> Fraction | float:
    if not (0 < float(alpha) < context.n):
        raise ValueError(f"fractional order must lie in (0, {context.n}): {alpha}")
    return alpha


def riesz(alpha, f: StepFunction, x: Point) -> float:
    """Fractional integral (1/Gamma) * int f(y) |x-y|**(alpha-n) dy.

    Exact rational sphere integrals around x are combined with real powers
    p**(j*alpha) at working precision, in increasing shell order; the inner
    tail (shells below the local constancy scale) is a closed-form geometric
    series.
    """
    ctx = f.context
    _check_riesz_order(ctx, alpha)
    if f.is_zero():
        return 0.0
    k0 = local_constancy_scale(f, x)
    top = k0
    for ball, _ in f.cells:
        if ball.contains_point(x):
            top = max(top, ball.gamma)
        else:
            d = x - ball.center_point()
            top = max(top, -int(d.valuation()))
    shell_integrals = []
    for j in range(k0 + 1, top + 1):
        shell_integrals.append((j, integrate_region(f, Sphere.around(x, j))))
    fx = f(x)
    with working_precision():
        a = real_of(alpha)
        total = mpmath.mpf(0)
        if fx != 0:
            # sum over shells j <= k0 of f(x) * p**(j(alpha-n)) * |S_j|
            geom = p_power_real(ctx.p, a * k0) / (1 - p_power_real(ctx.p, -a))
            total += real_of(fx) * (1 - p_power(ctx.p, -ctx.n)) * geom
        for j, integral in shell_integrals:
            if integral != 0:
                total += p_power_real(ctx.p, (a - ctx.n) * j) * real_of(integral)
        num = 1 - p_power_real(ctx.p, a - ctx.n)
        den = 1 - p_power_real(ctx.p, -a)
        return as_float(total * den / num)


# --------------------------------------------------------------------------
# windowed evaluation on a grid of cells


@dataclass(frozen=True)
class WindowedStep:
    """A step-function restriction of an operator output to a window ball;
    values outside the window are not claimed."""

    function: StepFunction
    window: Ball
    level: int


@dataclass(frozen=True)
class GridFunction:
    """Real-valued locally constant function sampled on the level cells of
    a window (used for operator outputs that cannot stay rational)."""

    context: Context
    level: int
    window: Ball
    cells: tuple[tuple[Ball, float], ...]

    def __call__(self, x: Point) -> float:
        key = Ball(self.context, self.level, x.coords).center
        for ball, v in self.cells:
            if ball.center == key:
                return v
        return 0.0

    def finest_level(self) -> int:
        return self.level

    @property
    def covering_ball(self) -> Optional[Ball]:
        return self.window

    def support_exponent(self) -> int:
        return self.window.gamma


def _cascade(
    context: Context,
    acc: dict[int, dict[tuple, Fraction]],
    bottom: int,
) -> dict[tuple, Fraction]:
    """Push per-level accumulated values down to the bottom level by adding
    each entry into its p**n children, one level at a time."""
    if not acc:
        return {}
    top = max(acc)
    for gamma in range(top, bottom, -1):
        here = acc.get(gamma)
        if not here:
            continue
        below = acc.setdefault(gamma - 1, {})
        for center, value in here.items():
            for child in Ball(context, gamma, center).children():
                key = child.center
                below[key] = below.get(key, Fraction(0)) + value
    return acc.get(bottom, {})


def _stamp_cell_operator(
    kernel: HomogeneousKernel,
    k: Optional[int],
    cell: Ball,
    value: Fraction,
    window: Ball,
    acc: dict[int, dict[tuple, Fraction]],
) -> None:
    """Add the contribution of one integrand cell to the accumulator as a
    family of constant pieces.

    The contribution at x is value * (kernel integral over the scaled cell
    of f shifted to x); it is constant on any window piece D that is either
    contained in the cell (then it vanishes) or disjoint from it with the
    scaled position resolved, i.e. D no coarser than the cell or the whole
    scaled range inside one kernel coset.
    """
    ctx = kernel.context
    e = cell.gamma

    def visit(node: Ball) -> None:
        rel = compare(node, cell)
        if rel in (Relation.EQUAL, Relation.B_CONTAINS_A):
            return  # x inside the cell: sphere-by-sphere cancellation
        if rel is Relation.A_CONTAINS_B:
            for child in node.children():
                visit(child)
            return
        d = node.center_point() - cell.center_point()
        j = -int(d.valuation())
        if k is not None and j < k + 1:
            return
        if node.gamma <= e or node.gamma - j <= kernel.level:
            scaled = d.scaled(p_power(ctx.p, j))
            unit_ball = Ball(ctx, e - j, scaled.coords)
            term = value * kernel.unit_ball_integral(unit_ball)
            if term != 0:
                level_acc = acc.setdefault(node.gamma, {})
                key = node.center
                level_acc[key] = level_acc.get(key, Fraction(0)) + term
            return
        for child in node.children():
            visit(child)

    visit(window)


def _tk_leaf_values(
    kernel: HomogeneousKernel,
    k: Optional[int],
    f: StepFunction,
    window: Ball,
    level: int,
) -> dict[tuple, Fraction]:
    acc: dict[int, dict[tuple, Fraction]] = {}
    for ball, value in f.cells:
        # integrand cell in y is B_gamma(x - c); stamping tracks x directly,
        # so shift the roles: contribution at x uses d = x - c
        _stamp_cell_operator(kernel, k, ball, value, window, acc)
    return _cascade(f.context, acc, level)


def apply_Tk_as_step(
    kernel: HomogeneousKernel,
    k: Optional[int],
    f: StepFunction,
    window: Ball,
) -> WindowedStep:
    """Exact windowed step-function form of the truncated operator (k an
    integer) or its stabilized limit (k None).

    The output cells sit at the finest cell exponent of f, the scale at
    which the operator output is locally constant.
    """
    if k is not None:
        check_truncation_index(k)
    if window.context != f.context:
        raise ContextMismatch("window context differs from function context")
    level = min(f.finest_level(), window.gamma)
    leaves = _tk_leaf_values(kernel, k, f, window, level)
    cells = tuple(
        (Ball(f.context, level, center), value)
        for center, value in sorted(leaves.items())
        if value != 0
    )
    return WindowedStep(StepFunction(f.context, cells), window, level)


def apply_commutator_as_step(
    kernel: HomogeneousKernel,
    k: Optional[int],
    symbols: CommutatorSymbols,
    f: StepFunction,
    window: Ball,
) -> WindowedStep:
    """Windowed commutator through the inclusion-exclusion expansion
    prod_i (b_i(x) - b_i(x-y)) = sum over subsets S of
    (-1)**|S| * (prod_{i not in S} b_i)(x) * (prod_{i in S} b_i)(x-y),
    each term being a plain truncated-operator application."""
    if k is not None:
        check_truncation_index(k)
    ctx = f.context
    if symbols.context != ctx:
        raise ContextMismatch("symbols context differs from function context")
    level = min(
        [f.finest_level(), window.gamma]
        + [b.finest_level() for b in symbols.symbols]
    )
    m = symbols.m
    total: dict[tuple, Fraction] = {}
    for subset in itertools.product((False, True), repeat=m):
        inner = f
        for flag, b in zip(subset, symbols.symbols):
            if flag:
                inner = inner * b
        sign = -1 if sum(subset) % 2 else 1
        leaves = _tk_leaf_values(kernel, k, inner, window, level)
        outer = [b for flag, b in zip(subset, symbols.symbols) if not flag]
        for center, value in leaves.items():
            if value == 0:
                continue
            factor = Fraction(sign)
            if outer:
                x = Point(ctx, center)
                for b in outer:
                    factor *= b(x)
                    if factor == 0:
                        break
            if factor == 0:
                continue
            total[center] = total.get(center, Fraction(0)) + factor * value
    cells = tuple(
        (Ball(ctx, level, center), value)
        for center, value in sorted(total.items())
        if value != 0
    )
    return WindowedStep(StepFunction(ctx, cells), window, level)


def riesz_as_grid(alpha, f: StepFunction, window: Ball) -> GridFunction:
    """Windowed fractional integral, sampled exactly at the locally constant
    scale of the output (the finest cell exponent of f)."""
    ctx = f.context
    _check_riesz_order(ctx, alpha)
    level = min(f.finest_level(), window.gamma)
    centers = [b.center for b in window.cells(level)]
    with working_precision():
        values = []
        for center in sorted(centers):
            x = Point(ctx, center)
            values.append((Ball(ctx, level, center), riesz(alpha, f, x)))
    cells = tuple((b, v) for b, v in values if v != 0.0)
    return GridFunction(ctx, level, window, cells)
