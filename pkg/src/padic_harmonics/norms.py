"""Computable function-space norms on step functions.

The defining suprema range over all balls of Q_p^n; for a step function the
search reduces exactly to a finite certified candidate set: any ball either
contains a cell center (then it coincides with a candidate after
canonicalization), lies inside a single cell (where the averaged integrand
is constant across positions for scale-only weights, and vanishes for the
mean-subtracted norms), or misses the support.  Scales outside the explicit
window are handled by a tail certificate whose kind is chosen by the
policy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Optional, Union

import mpmath

from .core import Ball, Context, Point, Rational, Relation, compare, join, p_power
from .functions import BallWeight, PowerWeight, StepFunction
from .precision import as_float, p_power_real, qth_root, real_of, working_precision


class TailMode:
    """Out-of-window stance for norm searches."""

    CLOSED_FORM_POWER = "closed_form_power"
    GEOMETRIC_BOUND = "geometric_bound"
    WINDOW_ONLY = "window_only"

    ALL = (CLOSED_FORM_POWER, GEOMETRIC_BOUND, WINDOW_ONLY)


@dataclass(frozen=True)
class NormPolicy:
    """Scale window and tail stance for a norm search.

    ``gamma_lo``/``gamma_hi`` default to the tightest window admissible for
    the argument function ([finest cell exponent - 1, support exponent + 1]);
    explicit values must cover that range.
    """

    gamma_lo: Optional[int] = None
    gamma_hi: Optional[int] = None
    tail_mode: str = TailMode.CLOSED_FORM_POWER
    float_rel_tol: float = 1e-12
    #: GEOMETRIC_BOUND assertion: weight(B_{gamma+1}) >= growth * weight(B_gamma)
    #: above the window.
    omega_tail_growth: Optional[float] = None
    #: GEOMETRIC_BOUND assertion: weight(B) >= floor on all balls below the
    #: window.
    omega_floor: Optional[float] = None

    def __post_init__(self) -> None:
        if self.tail_mode not in TailMode.ALL:
            raise ValueError(f"unknown tail mode {self.tail_mode!r}")
        if (
            self.gamma_lo is not None
            and self.gamma_hi is not None
            and self.gamma_lo > self.gamma_hi
        ):
            raise ValueError("window lower bound above upper bound")

    def window_for(self, f, centered: bool = False) -> tuple[int, int]:
        base_lo = f.finest_level() - 1
        cover = f.covering_ball
        if cover is None:
            base_hi = base_lo + 1
        elif centered:
            zero = Ball(cover.context, cover.gamma, (Fraction(0),) * cover.context.n)
            base_hi = join(cover, zero).gamma + 1
        else:
            base_hi = cover.gamma + 1
        lo = base_lo if self.gamma_lo is None else self.gamma_lo
        hi = base_hi if self.gamma_hi is None else self.gamma_hi
        if lo > base_lo or hi < base_hi:
            raise ValueError(
                f"window [{lo}, {hi}] does not cover required range "
                f"[{base_lo}, {base_hi}]"
            )
        return (lo, hi)


@dataclass(frozen=True)
class TailCertificate:
    """Why scales outside the window cannot exceed the reported value (or an
    explicit bound / divergence witness when they can)."""

    kind: str
    description: str
    bound: Optional[float] = None
    covered: bool = True


@dataclass(frozen=True)
class NormReport:
    value: float
    attaining_ball: Optional[Ball]
    tail: TailCertificate
    window: tuple[int, int]
    vacuous: bool = False
    #: False when the candidate reduction is only guaranteed for scale-only
    #: weights (position-dependent weights inside cells are not searched).
    candidate_exact: bool = True


def _vacuous_report(window=(0, 0)) -> NormReport:
    return NormReport(
        value=0.0,
        attaining_ball=None,
        tail=TailCertificate("vacuous", "zero function: all norms vanish"),
        window=window,
        vacuous=True,
    )


# --------------------------------------------------------------------------
# plain Lq


def lq_norm(f, q) -> float:
    """(sum |value|**q * measure)**(1/q); exact rationals inside, one real
    root at the end."""
    if float(q) < 1:
        raise ValueError(f"integrability exponent must be >= 1: {q}")
    if not f.cells:
        return 0.0
    with working_precision():
        total = mpmath.mpf(0)
        for ball, v in f.cells:
            total += mpmath.power(abs(real_of(v)), real_of(q)) * real_of(
                ball.measure()
            )
        return as_float(qth_root(total, q))


# --------------------------------------------------------------------------
# candidate machinery


def _power_exponent_sum(lam, q) -> Union[Fraction, float]:
    """lam + 1/q, exact when both are rational."""
    if isinstance(lam, Fraction) and isinstance(q, Fraction):
        return lam + 1 / q
    return float(lam) + 1.0 / float(q)


def _aggregates(f, q, hi: int):
    """Per-level maps center -> (sum |v|**q m, covered measure), folded from
    the cells up to exponent ``hi``.  Entries exist exactly at the ancestors
    of cells, which together with the inside-cell candidates exhausts the
    candidate set."""
    ctx = f.context
    levels: dict[int, dict[tuple, list]] = {}
    if not f.cells:
        return levels
    for ball, v in f.cells:
        entry = levels.setdefault(ball.gamma, {}).setdefault(
            ball.center, [mpmath.mpf(0), Fraction(0)]
        )
        entry[0] += mpmath.power(abs(real_of(v)), real_of(q)) * real_of(
            ball.measure()
        )
        entry[1] += ball.measure()
    lo_level = min(levels)
    for gamma in range(lo_level, hi):
        here = levels.get(gamma)
        if not here:
            continue
        above = levels.setdefault(gamma + 1, {})
        for center, (qs, cov) in here.items():
            parent = Ball(ctx, gamma + 1, center)
            entry = above.setdefault(parent.center, [mpmath.mpf(0), Fraction(0)])
            entry[0] += qs
            entry[1] += cov
    return levels


@dataclass
class _Best:
    value: mpmath.mpf
    ball: Optional[Ball] = None

    def offer(self, value, ball: Ball) -> None:
        if self.ball is None or value > self.value:
            self.value = value
            self.ball = ball


def _weight_real(weight: BallWeight, ball: Ball):
    return real_of(weight.of(ball))


# --------------------------------------------------------------------------
# generalized Morrey


def gm_norm(f, q, weight: BallWeight, policy: NormPolicy = NormPolicy()) -> NormReport:
    """sup over balls of (1/weight(B)) * (avg over B of |f|**q)**(1/q).

    Candidates are the canonical balls at window scales around the cell
    centers plus the inside-cell scales; the reduction is exact for
    scale-only weights.
    """
    if float(q) < 1:
        raise ValueError(f"integrability exponent must be >= 1: {q}")
    if not f.cells:
        return _vacuous_report()
    lo, hi = policy.window_for(f)
    ctx = f.context
    with working_precision():
        levels = _aggregates(f, q, hi)
        best = _Best(mpmath.mpf(0))
        for gamma in range(lo, hi + 1):
            here = levels.get(gamma, {})
            for center in sorted(here):
                qs, _cov = here[center]
                ball = Ball(ctx, gamma, center)
                value = qth_root(qs / real_of(ball.measure()), q) / _weight_real(
                    weight, ball
                )
                best.offer(value, ball)
        # balls strictly inside a cell: the averaged integrand is |v|
        for cell, v in f.cells:
            for gamma in range(lo, min(cell.gamma, hi + 1)):
                ball = Ball(ctx, gamma, cell.center)
                value = abs(real_of(v)) / _weight_real(weight, ball)
                best.offer(value, ball)
        tail = _morrey_tail(f, q, weight, policy, (lo, hi), best)
        if tail.bound is not None and not math.isfinite(tail.bound):
            return NormReport(
                value=math.inf,
                attaining_ball=None,
                tail=tail,
                window=(lo, hi),
                candidate_exact=weight.scale_invariant,
            )
        return NormReport(
            value=as_float(best.value),
            attaining_ball=best.ball,
            tail=tail,
            window=(lo, hi),
            candidate_exact=weight.scale_invariant,
        )


def _total_q_mass(f, q) -> mpmath.mpf:
    total = mpmath.mpf(0)
    for ball, v in f.cells:
        total += mpmath.power(abs(real_of(v)), real_of(q)) * real_of(ball.measure())
    return total


def _morrey_tail(
    f, q, weight: BallWeight, policy: NormPolicy, window, best: _Best
) -> TailCertificate:
    lo, hi = window
    ctx = f.context
    if policy.tail_mode == TailMode.WINDOW_ONLY:
        return TailCertificate(
            TailMode.WINDOW_ONLY,
            "value is window-restricted; no claim on scales outside "
            f"[{lo}, {hi}]",
            covered=False,
        )
    if policy.tail_mode == TailMode.CLOSED_FORM_POWER and isinstance(
        weight, PowerWeight
    ):
        s = _power_exponent_sum(weight.lam, Fraction(q) if isinstance(q, (int, Fraction)) else q)
        lam = weight.lam
        # large scales: value(gamma) = (total |f|^q mass)^{1/q} * p^{-n gamma s}
        if float(s) < 0:
            return TailCertificate(
                TailMode.CLOSED_FORM_POWER,
                "diverges at large scales: averaged integrand grows like "
                f"p**({-ctx.n}*gamma*({lam}+1/q)) with {lam}+1/q < 0",
                bound=math.inf,
                covered=False,
            )
        # small scales: inside-cell values |v| * p^{-n gamma lam}
        if float(lam) > 0:
            return TailCertificate(
                TailMode.CLOSED_FORM_POWER,
                "diverges at small scales: inside-cell quotient grows like "
                f"p**({-ctx.n}*gamma*{lam}) as gamma -> -inf with {lam} > 0",
                bound=math.inf,
                covered=False,
            )
        return TailCertificate(
            TailMode.CLOSED_FORM_POWER,
            "scales above the window decay like p**(-n*gamma*(lam+1/q)) with "
            "lam+1/q >= 0 and are matched at the window top; scales below "
            "stay inside single cells where the quotient is monotone in "
            "gamma for lam <= 0",
        )
    # geometric bound for asserted weights
    notes = []
    covered = True
    bound = mpmath.mpf(0)
    growth = policy.omega_tail_growth
    if growth is not None and f.covering_ball is not None:
        anchor = Ball(ctx, hi, f.covering_ball.center)
        top = (
            qth_root(_total_q_mass(f, q), q)
            * p_power_real(ctx.p, Fraction(-ctx.n * (hi + 1)) / Fraction(q))
            / (_weight_real(weight, anchor) * real_of(growth))
        )
        decreasing = real_of(growth) * p_power_real(ctx.p, Fraction(ctx.n) / Fraction(q)) > 1
        if decreasing:
            bound = max(bound, top)
            notes.append(
                f"large scales bounded by {as_float(top):.6g} under asserted "
                f"weight growth >= {growth}"
            )
        else:
            covered = False
            notes.append("asserted growth too weak to certify large scales")
    else:
        covered = False
        notes.append("no growth assertion: large scales not certified")
    floor = policy.omega_floor
    if floor is not None:
        small = max(abs(real_of(v)) for _, v in f.cells) / real_of(floor)
        bound = max(bound, small)
        notes.append(
            f"small scales bounded by {as_float(small):.6g} under asserted "
            f"weight floor {floor}"
        )
    else:
        covered = False
        notes.append("no floor assertion: small scales not certified")
    covered = covered and bound <= best.value
    return TailCertificate(
        TailMode.GEOMETRIC_BOUND,
        "; ".join(notes),
        bound=as_float(bound),
        covered=covered,
    )


def cm_norm(f, q, lam, policy: NormPolicy = NormPolicy()) -> NormReport:
    """Central Morrey norm: the generalized Morrey search restricted to
    balls centered at the origin, with weight |B|**lam."""
    if float(q) < 1:
        raise ValueError(f"integrability exponent must be >= 1: {q}")
    if not f.cells:
        return _vacuous_report()
    lo, hi = policy.window_for(f, centered=True)
    ctx = f.context
    weight = PowerWeight(lam if isinstance(lam, (Fraction, float)) else Fraction(lam))
    with working_precision():
        best = _Best(mpmath.mpf(0))
        for gamma in range(lo, hi + 1):
            ball = Ball(ctx, gamma, (Fraction(0),) * ctx.n)
            qs = mpmath.mpf(0)
            for cell, v in f.cells:
                rel = compare(cell, ball)
                if rel in (Relation.EQUAL, Relation.B_CONTAINS_A):
                    qs += mpmath.power(abs(real_of(v)), real_of(q)) * real_of(
                        cell.measure()
                    )
                elif rel is Relation.A_CONTAINS_B:
                    qs += mpmath.power(abs(real_of(v)), real_of(q)) * real_of(
                        ball.measure()
                    )
            value = qth_root(qs / real_of(ball.measure()), q) / _weight_real(
                weight, ball
            )
            best.offer(value, ball)
        tail = _central_morrey_tail(f, q, weight, (lo, hi), ctx)
        if tail.bound is not None and not math.isfinite(tail.bound):
            return NormReport(math.inf, None, tail, (lo, hi))
        return NormReport(as_float(best.value), best.ball, tail, (lo, hi))


def _central_morrey_tail(f, q, weight: PowerWeight, window, ctx) -> TailCertificate:
    lo, hi = window
    lam = weight.lam
    s = _power_exponent_sum(lam, Fraction(q) if isinstance(q, (int, Fraction)) else q)
    if float(s) < 0:
        return TailCertificate(
            TailMode.CLOSED_FORM_POWER,
            f"diverges at large scales ({lam}+1/q < 0)",
            bound=math.inf,
            covered=False,
        )
    zero = Point(ctx, (Fraction(0),) * ctx.n)
    at_origin = f(zero)
    if at_origin != 0 and float(lam) > 0:
        return TailCertificate(
            TailMode.CLOSED_FORM_POWER,
            f"diverges at small scales (origin in support, {lam} > 0)",
            bound=math.inf,
            covered=False,
        )
    return TailCertificate(
        TailMode.CLOSED_FORM_POWER,
        "large scales decay (lam+1/q >= 0); small centered balls are inside "
        "one cell or miss the support, where the quotient is monotone",
    )


# --------------------------------------------------------------------------
# generalized Campanato


def _campanato_value(b: StepFunction, ball: Ball, q) -> mpmath.mpf:
    """(avg over ball of |b - mean|**q)**(1/q), exact mean."""
    mean = b.ball_mean(ball)
    covered = Fraction(0)
    qs = mpmath.mpf(0)
    for cell, v in b.cells:
        rel = compare(cell, ball)
        if rel in (Relation.EQUAL, Relation.B_CONTAINS_A):
            qs += mpmath.power(abs(real_of(v - mean)), real_of(q)) * real_of(
                cell.measure()
            )
            covered += cell.measure()
        elif rel is Relation.A_CONTAINS_B:
            # ball inside a cell: b is constant there, the oscillation is 0
            return mpmath.mpf(0)
    rest = ball.measure() - covered
    if rest > 0 and mean != 0:
        qs += mpmath.power(abs(real_of(mean)), real_of(q)) * real_of(rest)
    return qth_root(qs / real_of(ball.measure()), q)


def _campanato_search(
    b: StepFunction,
    q,
    weight: BallWeight,
    window: tuple[int, int],
    centered: bool,
) -> _Best:
    lo, hi = window
    ctx = b.context
    best = _Best(mpmath.mpf(0))
    if centered:
        candidates = [
            Ball(ctx, gamma, (Fraction(0),) * ctx.n) for gamma in range(lo, hi + 1)
        ]
    else:
        seen = set()
        candidates = []
        for gamma in range(lo, hi + 1):
            for cell, _ in b.cells:
                ball = Ball(ctx, gamma, cell.center)
                if ball.key() not in seen:
                    seen.add(ball.key())
                    candidates.append(ball)
        candidates.sort(key=lambda bb: (bb.gamma, bb.center))
    for ball in candidates:
        value = _campanato_value(b, ball, q) / _weight_real(weight, ball)
        best.offer(value, ball)
    return best


def _campanato_tail(
    b: StepFunction, q, weight: BallWeight, policy: NormPolicy, window, best: _Best
) -> TailCertificate:
    lo, hi = window
    ctx = b.context
    small_note = (
        "scales below the window vanish exactly: any such ball lies inside "
        "one cell or misses the support, so the oscillation is 0"
    )
    if policy.tail_mode == TailMode.WINDOW_ONLY:
        return TailCertificate(
            TailMode.WINDOW_ONLY,
            small_note + "; large scales window-restricted",
            covered=False,
        )
    with working_precision():
        qr = real_of(q)
        # triangle bound on large balls B containing the support:
        # (int_B |b - b_B|^q)^{1/q} <= (int |b|^q)^{1/q} + |mean_B| |B|^{1/q}
        # and |mean_B| |B|^{1/q} = |total mass| p**(-n*gamma*(1-1/q))
        aux = qth_root(_total_q_mass(b, q), q) + real_of(
            abs(b.mass())
        ) * p_power_real(ctx.p, -ctx.n * (hi + 1) * (1 - 1 / qr))
        if isinstance(weight, PowerWeight) and policy.tail_mode == TailMode.CLOSED_FORM_POWER:
            lam = weight.lam
            s = _power_exponent_sum(lam, Fraction(q) if isinstance(q, (int, Fraction)) else q)
            if float(s) <= 0 and float(lam) < 0:
                return TailCertificate(
                    TailMode.CLOSED_FORM_POWER,
                    small_note + "; large-scale bound does not decay "
                    f"({lam}+1/q <= 0)",
                    bound=math.inf,
                    covered=False,
                )
            bound = aux * p_power_real(ctx.p, -ctx.n * (hi + 1) * real_of(s))
            return TailCertificate(
                TailMode.CLOSED_FORM_POWER,
                small_note
                + f"; scales above the window bounded by {as_float(bound):.6g} "
                "via the triangle inequality with the full-mass integrals",
                bound=as_float(bound),
                covered=bool(bound <= best.value),
            )
        growth = policy.omega_tail_growth
        if growth is None:
            return TailCertificate(
                TailMode.GEOMETRIC_BOUND,
                small_note + "; no growth assertion: large scales not certified",
                covered=False,
            )
        anchor_center = b.covering_ball.center if b.covering_ball else (Fraction(0),) * ctx.n
        anchor = Ball(ctx, hi, anchor_center)
        bound = (
            aux
            * p_power_real(ctx.p, -ctx.n * (hi + 1) / qr)
            / (_weight_real(weight, anchor) * real_of(growth))
        )
        decreasing = real_of(growth) * p_power_real(ctx.p, ctx.n / qr) > 1
        return TailCertificate(
            TailMode.GEOMETRIC_BOUND,
            small_note
            + f"; large scales bounded by {as_float(bound):.6g} under asserted "
            f"weight growth >= {growth}",
            bound=as_float(bound),
            covered=bool(decreasing and bound <= best.value),
        )


def gc_norm(
    b: StepFunction, q, weight: BallWeight, policy: NormPolicy = NormPolicy()
) -> NormReport:
    """sup over balls of (1/weight(B)) * (avg over B of |b - mean_B(b)|**q)**(1/q)."""
    if float(q) < 1:
        raise ValueError(f"integrability exponent must be >= 1: {q}")
    if not b.cells:
        return _vacuous_report()
    lo, hi = policy.window_for(b)
    with working_precision():
        best = _campanato_search(b, q, weight, (lo, hi), centered=False)
        tail = _campanato_tail(b, q, weight, policy, (lo, hi), best)
        return NormReport(
            as_float(best.value),
            best.ball,
            tail,
            (lo, hi),
            candidate_exact=True,
        )


def cbmo_norm(
    b: StepFunction, q, lam, policy: NormPolicy = NormPolicy()
) -> NormReport:
    """Centered mean-oscillation norm with weight |B|**lam."""
    if float(q) < 1:
        raise ValueError(f"integrability exponent must be >= 1: {q}")
    if not b.cells:
        return _vacuous_report()
    lo, hi = policy.window_for(b, centered=True)
    weight = PowerWeight(lam if isinstance(lam, (Fraction, float)) else Fraction(lam))
    with working_precision():
        best = _campanato_search(b, q, weight, (lo, hi), centered=True)
        tail = _campanato_tail(b, q, weight, policy, (lo, hi), best)
        return NormReport(as_float(best.value), best.ball, tail, (lo, hi))


# --------------------------------------------------------------------------
# Lipschitz


def lipschitz_norm(b: StepFunction, beta) -> float:
    """sup over x and h != 0 of |b(x+h) - b(x)| / |h|**beta.

    Differences vanish for |h| at or below the finest cell scale; per scale
    p**s the sup of |difference| is a max over sibling pairs inside the
    level-s ancestors of cells (empty siblings supply the one-inside/
    one-outside pairs); beyond one scale above the support the numerator is
    constant and the ratio decreases, so the search is finite.
    """
    if not (0 < float(beta) < 1):
        raise ValueError(f"smoothness order must lie in (0, 1): {beta}")
    if not b.cells:
        return 0.0
    ctx = b.context
    finest = b.finest_level()
    top = b.support_exponent() + 1
    with working_precision():
        best = mpmath.mpf(0)
        for s in range(finest + 1, top + 1):
            parents = []
            seen = set()
            for cell, _ in b.cells:
                if cell.gamma > s - 1:
                    continue
                parent = Ball(ctx, s, cell.center)
                if parent.key() not in seen:
                    seen.add(parent.key())
                    parents.append(parent)
            max_delta = Fraction(0)
            for parent in parents:
                ranges = [b.range_on_ball(child) for child in parent.children()]
                delta = Fraction(0)
                for i, (_, hi_i) in enumerate(ranges):
                    for k, (lo_k, _) in enumerate(ranges):
                        if i != k:
                            delta = max(delta, hi_i - lo_k)
                max_delta = max(max_delta, delta)
            if max_delta != 0:
                best = max(
                    best,
                    real_of(max_delta) * p_power_real(ctx.p, -real_of(beta) * s),
                )
        return as_float(best)
