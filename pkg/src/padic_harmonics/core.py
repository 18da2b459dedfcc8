"""Exact ultrametric geometry of Q_p^n.

Points are tuples of exact rationals (rationals are dense in Q_p and every
operation here depends on finitely many digits, so no precision parameter is
needed).  Balls are stored in a canonical form so that structural equality
coincides with set equality, which makes them usable as dictionary keys
throughout the step-function algebra.

Desk-scale bounds (prime < 2**31, dimension <= 4, |scale exponent| <= 64) are
enforced at construction time; they keep coset enumerations tractable and the
exponent arithmetic overflow-free.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Iterator, Sequence, Union

Rational = Union[int, Fraction]

#: Valuation of zero.  A distinguished non-integer value (never a sentinel
#: integer) so that accidental ordering against real valuations stays sound.
INFINITY = math.inf

PRIME_LIMIT = 2**31
DIM_LIMIT = 4
GAMMA_LIMIT = 64

#: Hard cap on the size of a single coset enumeration (children / sphere
#: cells / refinements).  Exceeding it raises instead of thrashing.
ENUMERATION_LIMIT = 2_000_000


class ContextMismatch(ValueError):
    """Raised when operands live over different primes or dimensions."""


class DeskScaleError(ValueError):
    """Raised when an input violates the desk-scale bounds."""


# --------------------------------------------------------------------------
# primality and valuations


def is_prime(m: int) -> bool:
    """Deterministic Miller-Rabin primality test, valid for m < 3.2e18.

    The witness set {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37} is known to
    be exact far beyond the desk-scale bound 2**31.
    """
    if m < 2:
        return False
    small = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37)
    for q in small:
        if m == q:
            return True
        if m % q == 0:
            return False
    d = m - 1
    r = 0
    while d % 2 == 0:
        d //= 2
        r += 1
    for a in small:
        x = pow(a, d, m)
        if x in (1, m - 1):
            continue
        for _ in range(r - 1):
            x = x * x % m
            if x == m - 1:
                break
        else:
            return False
    return True


def _multiplicity(p: int, m: int) -> int:
    """Exponent of p in the nonzero integer m."""
    m = abs(m)
    v = 0
    while m % p == 0:
        m //= p
        v += 1
    return v


def valuation(x: Rational, p: int) -> Union[int, float]:
    """p-adic valuation of an exact rational; INFINITY iff x == 0.

    With x = p**v * (m/n), p dividing neither m nor n, returns v.
    """
    x = Fraction(x)
    if x == 0:
        return INFINITY
    return _multiplicity(p, x.numerator) - _multiplicity(p, x.denominator)


@lru_cache(maxsize=8192)
def p_power(p: int, e: int) -> Fraction:
    """p**e as an exact rational, for any integer e."""
    if e >= 0:
        return Fraction(p**e)
    return Fraction(1, p**-e)


def scalar_norm(x: Rational, p: int) -> Fraction:
    """|x|_p = p**(-valuation); 0 iff x == 0."""
    v = valuation(x, p)
    if v is INFINITY:
        return Fraction(0)
    return p_power(p, -v)


# --------------------------------------------------------------------------
# context and points


@dataclass(frozen=True)
class Context:
    """A fixed prime p and dimension n shared by one computation."""

    p: int
    n: int

    def __post_init__(self) -> None:
        if not isinstance(self.p, int) or not (2 <= self.p < PRIME_LIMIT):
            raise DeskScaleError(f"prime must be an integer in [2, 2**31): {self.p!r}")
        if not is_prime(self.p):
            raise DeskScaleError(f"{self.p} is not prime")
        if not isinstance(self.n, int) or not (1 <= self.n <= DIM_LIMIT):
            raise DeskScaleError(f"dimension must be in [1, {DIM_LIMIT}]: {self.n!r}")

    def check_gamma(self, gamma: int) -> int:
        if not isinstance(gamma, int) or abs(gamma) > GAMMA_LIMIT:
            raise DeskScaleError(f"scale exponent out of range [-64, 64]: {gamma!r}")
        return gamma

    def point(self, coords: Sequence[Rational]) -> "Point":
        return Point(self, tuple(Fraction(c) for c in coords))

    def zero(self) -> "Point":
        return Point(self, (Fraction(0),) * self.n)


def _same_context(a, b) -> Context:
    if a.context != b.context:
        raise ContextMismatch(f"context mismatch: {a.context} vs {b.context}")
    return a.context


@dataclass(frozen=True)
class Point:
    """Element of Q_p^n with exact rational coordinates."""

    context: Context
    coords: tuple[Fraction, ...]

    def __post_init__(self) -> None:
        if len(self.coords) != self.context.n:
            raise ContextMismatch(
                f"expected {self.context.n} coordinates, got {len(self.coords)}"
            )

    def valuation(self) -> Union[int, float]:
        """min over coordinate valuations; INFINITY iff the point is zero."""
        return min(valuation(c, self.context.p) for c in self.coords)

    def norm(self) -> Fraction:
        """|x|_p = max over coordinate norms (exact rational)."""
        v = self.valuation()
        if v is INFINITY:
            return Fraction(0)
        return p_power(self.context.p, -v)

    def is_zero(self) -> bool:
        return all(c == 0 for c in self.coords)

    def __add__(self, other: "Point") -> "Point":
        ctx = _same_context(self, other)
        return Point(ctx, tuple(a + b for a, b in zip(self.coords, other.coords)))

    def __sub__(self, other: "Point") -> "Point":
        ctx = _same_context(self, other)
        return Point(ctx, tuple(a - b for a, b in zip(self.coords, other.coords)))

    def __neg__(self) -> "Point":
        return Point(self.context, tuple(-c for c in self.coords))

    def scaled(self, factor: Rational) -> "Point":
        f = Fraction(factor)
        return Point(self.context, tuple(f * c for c in self.coords))


# --------------------------------------------------------------------------
# canonical ball representatives


def canonical_coordinate(x: Rational, gamma: int, p: int) -> Fraction:
    """Representative of x modulo p**(-gamma) Z_p.

    The result c satisfies p**gamma * c in [0, 1) with a denominator that is
    a power of p, i.e. c keeps exactly the digits of x below scale
    p**(-gamma) and drops the rest.
    """
    y = Fraction(x) * p_power(p, gamma)
    s = _multiplicity(p, y.denominator)
    if s == 0:
        return Fraction(0)
    ps = p**s
    unit = y.denominator // ps
    t = (y.numerator * pow(unit, -1, ps)) % ps
    return Fraction(t, ps) * p_power(p, -gamma)


class Relation(Enum):
    """Outcome of comparing two balls; ultrametric geometry admits no
    partial overlap."""

    DISJOINT = "disjoint"
    EQUAL = "equal"
    A_CONTAINS_B = "a_contains_b"
    B_CONTAINS_A = "b_contains_a"


@dataclass(frozen=True)
class Ball:
    """The ball of radius p**gamma around a center, in canonical form.

    The constructor replaces the supplied center by the canonical coset
    representative, so two Balls are equal as Python values exactly when
    they are equal as subsets of Q_p^n.
    """

    context: Context
    gamma: int
    center: tuple[Fraction, ...]

    def __post_init__(self) -> None:
        self.context.check_gamma(self.gamma)
        if len(self.center) != self.context.n:
            raise ContextMismatch(
                f"expected {self.context.n} coordinates, got {len(self.center)}"
            )
        p = self.context.p
        canon = tuple(
            canonical_coordinate(c, self.gamma, p) for c in self.center
        )
        object.__setattr__(self, "center", canon)

    @classmethod
    def around(cls, x: Point, gamma: int) -> "Ball":
        return cls(x.context, gamma, x.coords)

    @classmethod
    def unit(cls, context: Context) -> "Ball":
        return cls(context, 0, (Fraction(0),) * context.n)

    def center_point(self) -> Point:
        return Point(self.context, self.center)

    def measure(self) -> Fraction:
        """Haar measure p**(n*gamma)."""
        return p_power(self.context.p, self.context.n * self.gamma)

    def contains_point(self, x: Point) -> bool:
        _same_context(self, x)
        p = self.context.p
        return all(
            valuation(a - b, p) >= -self.gamma
            for a, b in zip(x.coords, self.center)
        )

    def parent(self) -> "Ball":
        return Ball(self.context, self.gamma + 1, self.center)

    def children(self) -> tuple["Ball", ...]:
        """The p**n disjoint sub-balls of exponent gamma-1 partitioning self."""
        ctx = self.context
        ctx.check_gamma(self.gamma - 1)
        step = p_power(ctx.p, -self.gamma)
        out = []
        for digits in itertools.product(range(ctx.p), repeat=ctx.n):
            center = tuple(
                c + d * step for c, d in zip(self.center, digits)
            )
            out.append(Ball(ctx, self.gamma - 1, center))
        return tuple(out)

    def cells(self, level: int) -> list["Ball"]:
        """All sub-balls of exponent ``level`` partitioning self."""
        ctx = self.context
        if level > self.gamma:
            raise ValueError(f"refinement level {level} above ball exponent {self.gamma}")
        ctx.check_gamma(level)
        depth = self.gamma - level
        count = ctx.p ** (ctx.n * depth)
        if count > ENUMERATION_LIMIT:
            raise DeskScaleError(f"cell enumeration of size {count} exceeds cap")
        digit_range = list(range(ctx.p))
        offsets_per_coord = []
        for _ in range(ctx.n):
            offsets = []
            for digits in itertools.product(digit_range, repeat=depth):
                offsets.append(
                    sum(
                        d * p_power(ctx.p, -(self.gamma - t))
                        for t, d in enumerate(digits)
                    )
                )
            offsets_per_coord.append(offsets)
        out = []
        for combo in itertools.product(*offsets_per_coord):
            center = tuple(c + o for c, o in zip(self.center, combo))
            out.append(Ball(ctx, level, center))
        return out

    def key(self) -> tuple:
        return (self.gamma, self.center)


def compare(a: Ball, b: Ball) -> Relation:
    """Classify the pair (a, b); dichotomy rules out partial overlap."""
    _same_context(a, b)
    if a.gamma == b.gamma:
        return Relation.EQUAL if a.center == b.center else Relation.DISJOINT
    if a.gamma > b.gamma:
        inner = Ball(a.context, a.gamma, b.center)
        return Relation.A_CONTAINS_B if inner.center == a.center else Relation.DISJOINT
    inner = Ball(a.context, b.gamma, a.center)
    return Relation.B_CONTAINS_A if inner.center == b.center else Relation.DISJOINT


def join(a: Ball, b: Ball) -> Ball:
    """Smallest ball containing both arguments."""
    _same_context(a, b)
    g = max(a.gamma, b.gamma)
    while True:
        wa = Ball(a.context, g, a.center)
        wb = Ball(a.context, g, b.center)
        if wa == wb:
            return wa
        g += 1


@dataclass(frozen=True)
class Sphere:
    """S_gamma(a) = B_gamma(a) minus B_{gamma-1}(a).

    Distinct centers of the same enclosing ball can carve out different
    spheres, so the canonical representative is taken one level deeper than
    the ball's, at exponent gamma-1.
    """

    context: Context
    gamma: int
    center: tuple[Fraction, ...]

    def __post_init__(self) -> None:
        self.context.check_gamma(self.gamma)
        self.context.check_gamma(self.gamma - 1)
        if len(self.center) != self.context.n:
            raise ContextMismatch(
                f"expected {self.context.n} coordinates, got {len(self.center)}"
            )
        p = self.context.p
        canon = tuple(
            canonical_coordinate(c, self.gamma - 1, p) for c in self.center
        )
        object.__setattr__(self, "center", canon)

    @classmethod
    def around(cls, x: Point, gamma: int) -> "Sphere":
        return cls(x.context, gamma, x.coords)

    def measure(self) -> Fraction:
        """Haar measure p**(n*gamma) * (1 - p**(-n))."""
        ctx = self.context
        return p_power(ctx.p, ctx.n * self.gamma) * (1 - p_power(ctx.p, -ctx.n))

    def outer_ball(self) -> Ball:
        return Ball(self.context, self.gamma, self.center)

    def inner_ball(self) -> Ball:
        return Ball(self.context, self.gamma - 1, self.center)

    def contains_point(self, x: Point) -> bool:
        return (x - Point(self.context, self.center)).norm() == p_power(
            self.context.p, self.gamma
        )

    def cells(self, level: int) -> list[Ball]:
        """Disjoint exponent-``level`` balls partitioning the sphere.

        Exactly (p**n - 1) * p**(n*(gamma-1-level)) cells.
        """
        if level > self.gamma - 1:
            raise ValueError(
                f"sphere cells need level <= gamma-1, got {level} > {self.gamma - 1}"
            )
        inner = self.inner_ball()
        return [c for c in self.outer_ball().cells(level) if compare(c, inner) is Relation.DISJOINT]


def sphere_cells(sphere: Sphere, level: int) -> list[Ball]:
    return sphere.cells(level)
