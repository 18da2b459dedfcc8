"""Locally constant compactly supported functions, homogeneous kernels and
ball weights.

A :class:`StepFunction` is a finite linear combination of ball indicators
with exact rational values; everything downstream (integration, singular
operators, norm searches) reduces to finite exact sums over its cells.

A :class:`HomogeneousKernel` stores its values only on a fixed coset
partition of the unit sphere and is extended everywhere else by the scaling
law value(p**j * x) = value(x); this keeps the mean-zero and regularity
checks finite.
"""

from __future__ import annotations

import itertools
import random
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property, lru_cache
from typing import Callable, Iterable, Mapping, Optional, Sequence, Union

from .core import (
    Ball,
    Context,
    ContextMismatch,
    DeskScaleError,
    ENUMERATION_LIMIT,
    Point,
    Rational,
    Relation,
    Sphere,
    canonical_coordinate,
    compare,
    join,
    p_power,
    valuation,
)


class WeightPositivityError(ValueError):
    """A ball weight evaluated to a non-positive value."""


class WeightDomainError(KeyError):
    """A tabulated weight was queried outside its table."""


Cell = tuple[Ball, Fraction]


def _sorted_cells(cells: Iterable[Cell]) -> tuple[Cell, ...]:
    return tuple(sorted(cells, key=lambda cv: (cv[0].gamma, cv[0].center)))


def _check_disjoint(cells: Sequence[Cell]) -> None:
    """Pairwise disjointness via per-level center sets (two balls overlap iff
    one contains the other's center at its own level)."""
    by_level: dict[int, set] = {}
    for ball, _ in cells:
        by_level.setdefault(ball.gamma, set())
    for ball, _ in cells:
        if ball.center in by_level[ball.gamma]:
            raise ValueError(f"duplicate cell at exponent {ball.gamma}")
        by_level[ball.gamma].add(ball.center)
    levels = sorted(by_level)
    for ball, _ in cells:
        for g in levels:
            if g <= ball.gamma:
                continue
            anc = Ball(ball.context, g, ball.center)
            if anc.center in by_level[g]:
                raise ValueError(
                    f"nested cells: exponent {ball.gamma} inside exponent {g}"
                )


@dataclass(frozen=True, eq=False)
class StepFunction:
    """Finite rational linear combination of disjoint ball indicators."""

    context: Context
    cells: tuple[Cell, ...]

    def __post_init__(self) -> None:
        cleaned = []
        for ball, value in self.cells:
            if ball.context != self.context:
                raise ContextMismatch("cell context differs from function context")
            value = Fraction(value)
            if value == 0:
                continue
            cleaned.append((ball, value))
        cleaned = _sorted_cells(cleaned)
        _check_disjoint(cleaned)
        object.__setattr__(self, "cells", cleaned)

    # -- construction -----------------------------------------------------

    @classmethod
    def zero(cls, context: Context) -> "StepFunction":
        return cls(context, ())

    @classmethod
    def indicator(cls, ball: Ball, value: Rational = 1) -> "StepFunction":
        return cls(ball.context, ((ball, Fraction(value)),))

    @classmethod
    def from_cells(
        cls, context: Context, cells: Iterable[tuple[Ball, Rational]]
    ) -> "StepFunction":
        return cls(context, tuple((b, Fraction(v)) for b, v in cells))

    # -- basic queries ----------------------------------------------------

    def is_zero(self) -> bool:
        return not self.cells

    @cached_property
    def _lookup(self) -> dict[int, dict[tuple, Fraction]]:
        table: dict[int, dict[tuple, Fraction]] = {}
        for ball, value in self.cells:
            table.setdefault(ball.gamma, {})[ball.center] = value
        return table

    def __call__(self, x: Point) -> Fraction:
        """Value of the unique containing cell, else 0."""
        if x.context != self.context:
            raise ContextMismatch("point context differs from function context")
        p = self.context.p
        for g, centers in self._lookup.items():
            key = tuple(canonical_coordinate(c, g, p) for c in x.coords)
            if key in centers:
                return centers[key]
        return Fraction(0)

    def finest_level(self) -> int:
        """Smallest cell exponent (the function is locally constant at this
        scale).  Zero function: 0 by convention."""
        if not self.cells:
            return 0
        return min(b.gamma for b, _ in self.cells)

    @cached_property
    def covering_ball(self) -> Optional[Ball]:
        """Smallest ball containing the support; None for the zero function."""
        if not self.cells:
            return None
        acc = self.cells[0][0]
        for ball, _ in self.cells[1:]:
            acc = join(acc, ball)
        return acc

    def support_exponent(self) -> int:
        """Exponent of the covering ball; 0 for the zero function."""
        cover = self.covering_ball
        return 0 if cover is None else cover.gamma

    def sup_norm(self) -> Fraction:
        return max((abs(v) for _, v in self.cells), default=Fraction(0))

    def mass(self) -> Fraction:
        """Exact Haar integral over Q_p^n."""
        return sum((v * b.measure() for b, v in self.cells), Fraction(0))

    # -- pointwise algebra ------------------------------------------------

    def scaled(self, factor: Rational) -> "StepFunction":
        f = Fraction(factor)
        if f == 0:
            return StepFunction.zero(self.context)
        return StepFunction(self.context, tuple((b, f * v) for b, v in self.cells))

    def __abs__(self) -> "StepFunction":
        return StepFunction(self.context, tuple((b, abs(v)) for b, v in self.cells))

    def map_values(self, fn: Callable[[Fraction], Rational]) -> "StepFunction":
        return StepFunction(
            self.context, tuple((b, Fraction(fn(v))) for b, v in self.cells)
        )

    def __add__(self, other: "StepFunction") -> "StepFunction":
        return combine(self, other, "+")

    def __sub__(self, other: "StepFunction") -> "StepFunction":
        return combine(self, other, "-")

    def __mul__(self, other: "StepFunction") -> "StepFunction":
        return combine(self, other, "*")

    def __neg__(self) -> "StepFunction":
        return self.scaled(-1)

    def plus_constant_on(self, ball: Ball, constant: Rational) -> "StepFunction":
        """self + constant * indicator(ball)."""
        return self + StepFunction.indicator(ball, constant)

    # -- geometry ---------------------------------------------------------

    def translate(self, x0: Point) -> "StepFunction":
        """x |-> self(x - x0)."""
        if x0.context != self.context:
            raise ContextMismatch("translation point context differs")
        out = []
        for ball, v in self.cells:
            center = tuple(c + d for c, d in zip(ball.center, x0.coords))
            out.append((Ball(self.context, ball.gamma, center), v))
        return StepFunction(self.context, tuple(out))

    def reflect(self) -> "StepFunction":
        """x |-> self(-x)."""
        out = []
        for ball, v in self.cells:
            center = tuple(-c for c in ball.center)
            out.append((Ball(self.context, ball.gamma, center), v))
        return StepFunction(self.context, tuple(out))

    def dilate(self, j: int) -> "StepFunction":
        """x |-> self(p**j * x); a cell B_gamma(c) maps to
        B_{gamma+j}(p**-j * c)."""
        p = self.context.p
        out = []
        for ball, v in self.cells:
            center = tuple(c * p_power(p, -j) for c in ball.center)
            out.append((Ball(self.context, ball.gamma + j, center), v))
        return StepFunction(self.context, tuple(out))

    def refine(self, level: int) -> "StepFunction":
        """Equal function with every cell at exponent ``level``."""
        if self.cells and level > self.finest_level():
            raise ValueError(
                f"refinement level {level} above finest cell exponent "
                f"{self.finest_level()}"
            )
        total = sum(
            self.context.p ** (self.context.n * (b.gamma - level))
            for b, _ in self.cells
        )
        if total > ENUMERATION_LIMIT:
            raise DeskScaleError(f"refinement of size {total} exceeds cap")
        out = []
        for ball, v in self.cells:
            for sub in ball.cells(level):
                out.append((sub, v))
        return StepFunction(self.context, tuple(out))

    def restrict(self, ball: Ball) -> "StepFunction":
        """self * indicator(ball)."""
        out = []
        for cell, v in self.cells:
            rel = compare(cell, ball)
            if rel in (Relation.EQUAL, Relation.B_CONTAINS_A):
                # cell inside the ball
                out.append((cell, v))
            elif rel is Relation.A_CONTAINS_B:
                out.append((ball, v))
        return StepFunction(self.context, tuple(out))

    def restrict_outside(self, ball: Ball) -> "StepFunction":
        """self * indicator(complement of ball)."""
        out = []
        for cell, v in self.cells:
            rel = compare(cell, ball)
            if rel is Relation.DISJOINT:
                out.append((cell, v))
            elif rel is Relation.A_CONTAINS_B:
                for frag in _ball_minus(cell, [ball]):
                    out.append((frag, v))
        return StepFunction(self.context, tuple(out))

    # -- integration ------------------------------------------------------

    def integral_over(self, ball: Ball) -> Fraction:
        total = Fraction(0)
        for cell, v in self.cells:
            rel = compare(cell, ball)
            if rel in (Relation.EQUAL, Relation.B_CONTAINS_A):
                total += v * cell.measure()
            elif rel is Relation.A_CONTAINS_B:
                total += v * ball.measure()
        return total

    def covered_measure(self, ball: Ball) -> Fraction:
        """Measure of supp(self) intersected with the ball."""
        total = Fraction(0)
        for cell, v in self.cells:
            rel = compare(cell, ball)
            if rel in (Relation.EQUAL, Relation.B_CONTAINS_A):
                total += cell.measure()
            elif rel is Relation.A_CONTAINS_B:
                total += ball.measure()
        return total

    def ball_mean(self, ball: Ball) -> Fraction:
        """Average over the ball (exact)."""
        return self.integral_over(ball) / ball.measure()

    def range_on_ball(self, ball: Ball) -> tuple[Fraction, Fraction]:
        """(min, max) of the function on the ball, 0 included when the ball
        is not fully covered by cells."""
        values = []
        covered = Fraction(0)
        for cell, v in self.cells:
            rel = compare(cell, ball)
            if rel is Relation.A_CONTAINS_B:
                return (v, v)
            if rel in (Relation.EQUAL, Relation.B_CONTAINS_A):
                values.append(v)
                covered += cell.measure()
        if covered < ball.measure():
            values.append(Fraction(0))
        return (min(values), max(values))

    # -- equality (semantic, via the unique coarsest representation) ------

    @cached_property
    def _canonical_key(self) -> tuple:
        current: dict[tuple, Fraction] = {
            (b.gamma, b.center): v for b, v in self.cells
        }
        pn = self.context.p ** self.context.n
        changed = True
        while changed:
            changed = False
            parents: dict[tuple, list[tuple]] = {}
            for key in current:
                g, center = key
                parent = Ball(self.context, g + 1, center)
                parents.setdefault((parent.gamma, parent.center), []).append(key)
            for pkey, kids in parents.items():
                if len(kids) != pn:
                    continue
                vals = {current[k] for k in kids}
                if len(vals) != 1:
                    continue
                if any(k[0] != pkey[0] - 1 for k in kids):
                    continue
                v = vals.pop()
                for k in kids:
                    del current[k]
                current[pkey] = v
                changed = True
        return tuple(sorted(current.items()))

    def __eq__(self, other) -> bool:
        if not isinstance(other, StepFunction):
            return NotImplemented
        return (
            self.context == other.context
            and self._canonical_key == other._canonical_key
        )

    def __hash__(self) -> int:
        return hash((self.context, self._canonical_key))


def _ball_minus(ball: Ball, holes: Sequence[Ball]) -> list[Ball]:
    """ball minus a disjoint family of strictly smaller sub-balls, returned
    as a disjoint ball family."""
    if not holes:
        return [ball]
    out = []
    for child in ball.children():
        hit = [h for h in holes if compare(child, h) is not Relation.DISJOINT]
        if not hit:
            out.append(child)
            continue
        if any(compare(child, h) is Relation.EQUAL for h in hit):
            continue
        out.extend(_ball_minus(child, hit))
    return out


def combine(f: StepFunction, g: StepFunction, op: str) -> StepFunction:
    """Exact pointwise +, - or * via the common refinement of supports."""
    if f.context != g.context:
        raise ContextMismatch("cannot combine functions over different contexts")
    if op not in ("+", "-", "*"):
        raise ValueError(f"unsupported pointwise operation {op!r}")
    atoms: list[tuple[Ball, Fraction, Fraction]] = []
    zero = Fraction(0)
    for ball, v in f.cells:
        container = None
        inner: list[Cell] = []
        equal: Optional[Cell] = None
        for other, w in g.cells:
            rel = compare(ball, other)
            if rel is Relation.EQUAL:
                equal = (other, w)
                break
            if rel is Relation.B_CONTAINS_A:
                container = (other, w)
                break
            if rel is Relation.A_CONTAINS_B:
                inner.append((other, w))
        if equal is not None:
            atoms.append((ball, v, equal[1]))
        elif container is not None:
            atoms.append((ball, v, container[1]))
        else:
            for other, w in inner:
                atoms.append((other, v, w))
            for frag in _ball_minus(ball, [other for other, _ in inner]):
                atoms.append((frag, v, zero))
    for ball, w in g.cells:
        if any(
            compare(other, ball) in (Relation.EQUAL, Relation.A_CONTAINS_B)
            for other, _ in f.cells
        ):
            continue
        inner_f = [other for other, _ in f.cells if compare(other, ball) is Relation.B_CONTAINS_A]
        for frag in _ball_minus(ball, inner_f):
            atoms.append((frag, zero, w))
    if op == "+":
        cells = [(b, a + c) for b, a, c in atoms]
    elif op == "-":
        cells = [(b, a - c) for b, a, c in atoms]
    else:
        cells = [(b, a * c) for b, a, c in atoms]
    return StepFunction(f.context, tuple(cells))


# --------------------------------------------------------------------------
# homogeneous kernels


@dataclass(frozen=True)
class HomogeneousKernel:
    """Mean-zero function on the unit sphere, locally constant on a coset
    partition at exponent ``level`` and extended by value(p**j x) = value(x).

    ``level`` must be <= -1: a function constant on the whole unit sphere
    has zero mean only if it vanishes, and the zero kernel is representable
    at level -1 with all-zero cell values.
    """

    context: Context
    level: int
    cells: tuple[Cell, ...]

    def __post_init__(self) -> None:
        ctx = self.context
        if self.level > -1:
            raise ValueError("kernel level must be <= -1")
        ctx.check_gamma(self.level)
        unit_sphere = Sphere(ctx, 0, (Fraction(0),) * ctx.n)
        expected = {b.key() for b in unit_sphere.cells(self.level)}
        seen = {}
        for ball, value in self.cells:
            if ball.context != ctx:
                raise ContextMismatch("kernel cell context differs")
            if ball.gamma != self.level:
                raise ValueError(
                    f"kernel cell exponent {ball.gamma} differs from level {self.level}"
                )
            if ball.key() not in expected:
                raise ValueError(f"kernel cell {ball.center} is not on the unit sphere")
            if ball.key() in seen:
                raise ValueError("duplicate kernel cell")
            seen[ball.key()] = Fraction(value)
        if set(seen) != expected:
            raise ValueError(
                f"kernel cells do not partition the unit sphere: "
                f"{len(seen)} of {len(expected)} cells given"
            )
        mean = sum(seen.values(), Fraction(0)) * p_power(ctx.p, ctx.n * self.level)
        if mean != 0:
            raise ValueError(f"mean-zero violated: kernel integrates to {mean}")
        ordered = tuple(
            (Ball(ctx, g, c), seen[(g, c)]) for (g, c) in sorted(seen)
        )
        object.__setattr__(self, "cells", ordered)

    @classmethod
    def from_values(
        cls,
        context: Context,
        level: int,
        values: Mapping[tuple, Rational] | Iterable[tuple[Ball, Rational]],
    ) -> "HomogeneousKernel":
        if isinstance(values, Mapping):
            cells = [
                (Ball(context, level, tuple(Fraction(c) for c in key)), Fraction(v))
                for key, v in values.items()
            ]
        else:
            cells = [(b, Fraction(v)) for b, v in values]
        return cls(context, level, tuple(cells))

    @classmethod
    def zero(cls, context: Context, level: int = -1) -> "HomogeneousKernel":
        sphere = Sphere(context, 0, (Fraction(0),) * context.n)
        return cls(
            context, level, tuple((b, Fraction(0)) for b in sphere.cells(level))
        )

    @cached_property
    def _table(self) -> dict[tuple, Fraction]:
        return {b.center: v for b, v in self.cells}

    def sup_norm(self) -> Fraction:
        return max((abs(v) for _, v in self.cells), default=Fraction(0))

    def is_zero(self) -> bool:
        return all(v == 0 for _, v in self.cells)

    def scaled(self, factor: Rational) -> "HomogeneousKernel":
        f = Fraction(factor)
        return HomogeneousKernel(
            self.context, self.level, tuple((b, f * v) for b, v in self.cells)
        )

    def __call__(self, y: Point) -> Fraction:
        """Value at y != 0, via scaling onto the unit sphere."""
        if y.context != self.context:
            raise ContextMismatch("point context differs from kernel context")
        v = y.valuation()
        if v == float("inf"):
            raise ValueError("kernel is undefined at the origin")
        u = y.scaled(p_power(self.context.p, -int(v)))
        key = Ball(self.context, self.level, u.coords).center
        return self._table[key]

    def unit_ball_integral(self, ball: Ball) -> Fraction:
        """Exact integral over a ball contained in the unit sphere."""
        return _kernel_ball_integral(self, ball.gamma, ball.center)

    def dini_modulus(self) -> Fraction:
        """sup over unit-sphere cosets y of the (finite) sum over shifts
        p**j y, j >= 1, of the exact L1 distance between the kernel and its
        shift on the unit sphere.

        Shifts finer than the cell level leave every cell invariant, so the
        sum truncates at j = -level.
        """
        ctx = self.context
        cell_measure = p_power(ctx.p, ctx.n * self.level)
        best = Fraction(0)
        for rep, _ in self.cells:
            y = rep.center_point()
            total = Fraction(0)
            for j in range(1, -self.level + 1):
                shift = y.scaled(p_power(ctx.p, j))
                acc = Fraction(0)
                for cell, value in self.cells:
                    moved = cell.center_point() + shift
                    acc += abs(self(moved) - value) * cell_measure
                total += acc
            best = max(best, total)
        return best


@lru_cache(maxsize=65536)
def _kernel_ball_integral(
    kernel: HomogeneousKernel, gamma: int, center: tuple
) -> Fraction:
    ctx = kernel.context
    ball = Ball(ctx, gamma, center)
    if gamma <= kernel.level:
        key = Ball(ctx, kernel.level, center).center
        return kernel._table[key] * ball.measure()
    total = Fraction(0)
    for sub in ball.cells(kernel.level):
        total += kernel._table[sub.center]
    return total * p_power(ctx.p, ctx.n * kernel.level)


def kernel_eval(kernel: HomogeneousKernel, y: Point) -> Fraction:
    return kernel(y)


def dini_modulus(kernel: HomogeneousKernel) -> Fraction:
    return kernel.dini_modulus()


# --------------------------------------------------------------------------
# ball weights


class BallWeight(ABC):
    """Positive set function on balls, queried through :meth:`of`."""

    #: True when the value depends on the ball only through its exponent;
    #: norm candidate reductions are exact for such weights.
    scale_invariant: bool = False

    @abstractmethod
    def of(self, ball: Ball) -> Union[Fraction, float]:
        """Weight of the ball; always > 0 or an exception."""


@dataclass(frozen=True)
class PowerWeight(BallWeight):
    """weight(B) = |B|**lam = p**(n * gamma * lam)."""

    lam: Union[Fraction, float]

    scale_invariant = True

    def __post_init__(self) -> None:
        if isinstance(self.lam, int):
            object.__setattr__(self, "lam", Fraction(self.lam))

    def of(self, ball: Ball) -> Union[Fraction, float]:
        ctx = ball.context
        exponent = self.lam * ctx.n * ball.gamma
        if isinstance(exponent, Fraction) and exponent.denominator == 1:
            return p_power(ctx.p, int(exponent))
        return float(ctx.p) ** float(exponent)


@dataclass(frozen=True)
class StepIntegralWeight(BallWeight):
    """weight(B) = integral of a fixed density over B; positivity is
    validated at query time, falling back to ``tail_rule`` (if given) on
    balls where the integral vanishes."""

    density: StepFunction
    tail_rule: Optional[Callable[[Ball], Union[Fraction, float]]] = None

    scale_invariant = False

    def of(self, ball: Ball) -> Union[Fraction, float]:
        value = self.density.integral_over(ball)
        if value > 0:
            return value
        if self.tail_rule is not None:
            fallback = self.tail_rule(ball)
            if fallback > 0:
                return fallback
        raise WeightPositivityError(
            f"step-integral weight is not positive on ball "
            f"(gamma={ball.gamma}, center={ball.center})"
        )


@dataclass(frozen=True)
class TabulatedWeight(BallWeight):
    """Explicit finite table (gamma, canonical center) -> positive value."""

    entries: tuple[tuple[tuple, Union[Fraction, float]], ...]

    scale_invariant = False

    @classmethod
    def from_dict(
        cls, table: Mapping[tuple[int, tuple], Union[Rational, float]]
    ) -> "TabulatedWeight":
        items = tuple(sorted((k, v) for k, v in table.items()))
        return cls(items)

    @cached_property
    def _table(self) -> dict:
        return dict(self.entries)

    def of(self, ball: Ball) -> Union[Fraction, float]:
        key = (ball.gamma, ball.center)
        if key not in self._table:
            raise WeightDomainError(
                f"tabulated weight has no entry for gamma={ball.gamma}, "
                f"center={ball.center}"
            )
        value = self._table[key]
        if value <= 0:
            raise WeightPositivityError(
                f"tabulated weight is not positive on gamma={ball.gamma}"
            )
        return value


def weight_of(weight: BallWeight, ball: Ball) -> Union[Fraction, float]:
    return weight.of(ball)


# --------------------------------------------------------------------------
# commutator symbols


@dataclass(frozen=True)
class CommutatorSymbols:
    """The symbol tuple of a higher commutator, with optional smoothness or
    oscillation metadata attached per symbol."""

    symbols: tuple[StepFunction, ...]
    #: smoothness orders for Lipschitz runs, each in (0, 1), total < n
    betas: Optional[tuple[Fraction, ...]] = None
    #: (exponent q_i, weight nu_i) pairs for mean-oscillation runs
    campanato: Optional[tuple[tuple[Fraction, BallWeight], ...]] = None

    def __post_init__(self) -> None:
        if len(self.symbols) < 1:
            raise ValueError("commutator needs at least one symbol")
        ctx = self.symbols[0].context
        for s in self.symbols[1:]:
            if s.context != ctx:
                raise ContextMismatch("commutator symbols live in different contexts")
        if self.betas is not None:
            betas = tuple(Fraction(b) for b in self.betas)
            if len(betas) != len(self.symbols):
                raise ValueError("one smoothness order per symbol required")
            if any(not (0 < b < 1) for b in betas):
                raise ValueError("smoothness orders must lie in (0, 1)")
            if sum(betas) >= ctx.n:
                raise ValueError("total smoothness order must be < n")
            object.__setattr__(self, "betas", betas)
        if self.campanato is not None:
            if len(self.campanato) != len(self.symbols):
                raise ValueError("one (q, weight) pair per symbol required")

    @property
    def m(self) -> int:
        return len(self.symbols)

    @property
    def context(self) -> Context:
        return self.symbols[0].context

    def total_beta(self) -> Fraction:
        if self.betas is None:
            raise ValueError("no smoothness orders attached")
        return sum(self.betas, Fraction(0))


# --------------------------------------------------------------------------
# seeded corpus generation


@dataclass(frozen=True)
class CorpusProfile:
    """Shape of randomly drawn step functions: cell exponents in
    [gamma_min, gamma_max], centers inside the ball of exponent
    ``bound_exponent`` around 0, at most ``cells`` cells, values
    num/den with |num| <= value_numerator_max, den <= value_denominator_max.
    """

    gamma_min: int = -3
    gamma_max: int = 0
    bound_exponent: int = 1
    cells: int = 6
    value_numerator_max: int = 8
    value_denominator_max: int = 16

    def __post_init__(self) -> None:
        if self.gamma_min > self.gamma_max:
            raise ValueError("gamma_min must be <= gamma_max")
        if self.gamma_max > self.bound_exponent:
            raise ValueError("cells must fit inside the bounding ball")
        if self.cells < 0:
            raise ValueError("cell count must be >= 0")
        if self.value_numerator_max < 1 or self.value_denominator_max < 1:
            raise ValueError("value bounds must be >= 1")


def _random_value(rng: random.Random, profile: CorpusProfile) -> Fraction:
    num = 0
    while num == 0:
        num = rng.randint(-profile.value_numerator_max, profile.value_numerator_max)
    den = rng.randint(1, profile.value_denominator_max)
    return Fraction(num, den)


def _random_ball(rng: random.Random, context: Context, profile: CorpusProfile) -> Ball:
    gamma = rng.randint(profile.gamma_min, profile.gamma_max)
    depth = profile.bound_exponent - gamma
    center = []
    for _ in range(context.n):
        coord = Fraction(0)
        for t in range(depth):
            digit = rng.randint(0, context.p - 1)
            coord += digit * p_power(context.p, -(gamma + t + 1))
        center.append(coord)
    return Ball(context, gamma, tuple(center))


def random_step(
    context: Context, seed: int, profile: CorpusProfile = CorpusProfile()
) -> StepFunction:
    """Deterministic random step function; cells are drawn from the coset
    tree under the bounding ball and nested or equal draws are rejected, so
    the disjointness invariant holds by construction."""
    rng = random.Random(f"step:{context.p}:{context.n}:{seed}")
    accepted: list[Ball] = []
    attempts = 0
    while len(accepted) < profile.cells and attempts < 80 * max(profile.cells, 1):
        attempts += 1
        candidate = _random_ball(rng, context, profile)
        if all(compare(candidate, b) is Relation.DISJOINT for b in accepted):
            accepted.append(candidate)
    cells = tuple((b, _random_value(rng, profile)) for b in accepted)
    return StepFunction(context, cells)


def random_point(
    context: Context,
    seed: int,
    bound_exponent: int = 1,
    depth: int = 5,
) -> Point:
    """Deterministic random point of norm at most p**bound_exponent, with
    digits down to scale p**(bound_exponent - depth + 1)."""
    rng = random.Random(f"point:{context.p}:{context.n}:{seed}")
    coords = []
    for _ in range(context.n):
        coord = Fraction(0)
        for t in range(depth):
            digit = rng.randint(0, context.p - 1)
            coord += digit * p_power(context.p, t - bound_exponent)
        coords.append(coord)
    return Point(context, tuple(coords))


def random_kernel(
    context: Context,
    seed: int,
    level: int = -1,
    value_numerator_max: int = 8,
    value_denominator_max: int = 8,
) -> HomogeneousKernel:
    """Deterministic random mean-zero kernel at the given cell level.

    Raw rational values are recentred by their average, which preserves
    rationality and yields an exactly mean-zero kernel; the all-zero
    degenerate draw is bumped to a two-cell +/- pattern.  The level is
    deepened as needed so the unit-sphere partition has at least two cells
    (over Q_2 the level -1 partition is a single cell, forcing the zero
    kernel there).
    """
    rng = random.Random(f"kernel:{context.p}:{context.n}:{seed}:{level}")
    sphere = Sphere(context, 0, (Fraction(0),) * context.n)
    cells = sphere.cells(level)
    while len(cells) < 2:
        level -= 1
        cells = sphere.cells(level)
    raw = [
        Fraction(
            rng.randint(-value_numerator_max, value_numerator_max),
            rng.randint(1, value_denominator_max),
        )
        for _ in cells
    ]
    mean = sum(raw, Fraction(0)) / len(raw)
    values = [v - mean for v in raw]
    if all(v == 0 for v in values):
        values[0] += 1
        values[1] -= 1
    return HomogeneousKernel(
        context, level, tuple((b, v) for b, v in zip(cells, values))
    )
