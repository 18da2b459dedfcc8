"""Weight-condition checkers and the empirical boundedness harness.

The boundedness claims assert the existence of a constant; the harness
therefore reports the maximal observed ratio over a seeded corpus (C_emp)
and enforces only that every ratio is finite and that hypothesis-violating
weight configurations are labeled as such (they are still executed, for
contrast).

The proof-step suites check each pointwise inequality with an explicit
constant reconstructed step by step.  The constant-free mean-gap statement
is falsifiable (a single-cell indicator over p = 3 already exceeds it), so
the gap between adjacent-scale ball means necessarily carries the factor
p**(n/q); the suites verify the provable constant-carrying forms and record
the constant-free comparison per row for contrast.
"""

from __future__ import annotations

import hashlib
import math
import itertools
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from time import perf_counter
from typing import Optional, Sequence, Union

import mpmath

from .core import Ball, Context, Point, Relation, Sphere, compare, p_power
from .functions import (
    BallWeight,
    CommutatorSymbols,
    CorpusProfile,
    HomogeneousKernel,
    PowerWeight,
    StepFunction,
    random_kernel,
    random_point,
    random_step,
)
from .norms import NormPolicy, gc_norm, gm_norm, lipschitz_norm
from .operators import (
    WindowedStep,
    apply_Tk,
    apply_Tk_as_step,
    apply_commutator,
    apply_commutator_as_step,
    integrate_region,
    riesz,
    riesz_normalizer,
)
from .precision import as_float, p_power_real, qth_root, real_of, working_precision

RELATIVE_SLACK = 1e-9


# --------------------------------------------------------------------------
# condition checkers


class ConditionKind:
    """Wire identifiers of the four weight conditions."""

    WEIGHT_SUM = "31"  # sum over j >= gamma of nu(B_j)/omega(B_gamma)
    WEIGHT_SUM_GROWTH = "32"  # same with an extra p**(j*beta) factor
    PRODUCT_AT_SCALE = "i"  # prod nu_i(B_gamma) * nu(B_gamma)/omega(B_gamma)
    PRODUCT_TAIL_SUM = "ii"  # tail sum with (j+1-gamma)**m polynomial factor

    ALL = (WEIGHT_SUM, WEIGHT_SUM_GROWTH, PRODUCT_AT_SCALE, PRODUCT_TAIL_SUM)


@dataclass(frozen=True)
class SeriesCondition:
    kind: str
    context: Context
    omega: BallWeight
    nu: BallWeight
    nu_i: tuple[BallWeight, ...] = ()
    beta: Optional[Union[Fraction, float]] = None
    anchor_gamma: int = 0
    anchor_center: tuple[Fraction, ...] = ()

    def __post_init__(self) -> None:
        if self.kind not in ConditionKind.ALL:
            raise ValueError(f"unknown condition kind {self.kind!r}")
        if self.kind == ConditionKind.WEIGHT_SUM_GROWTH:
            if self.beta is None or not (0 < float(self.beta) < self.context.n):
                raise ValueError("growth-weighted sum needs beta in (0, n)")
        if self.kind in (ConditionKind.PRODUCT_AT_SCALE, ConditionKind.PRODUCT_TAIL_SUM):
            if not self.nu_i:
                raise ValueError("product conditions need at least one symbol weight")
        if not self.anchor_center:
            object.__setattr__(
                self, "anchor_center", (Fraction(0),) * self.context.n
            )

    def anchor_ball(self, j: int) -> Ball:
        return Ball(self.context, j, self.anchor_center)


@dataclass(frozen=True)
class CheckPolicy:
    horizon: int = 32
    #: caller-asserted eventual geometric ratio of the terms, for weights
    #: without a closed form
    asserted_tail_ratio: Optional[float] = None


@dataclass(frozen=True)
class ConditionReport:
    status: str  # "converges" | "diverges" | "indeterminate"
    #: sum started at the anchor scale (or the sup value for "i")
    value: Optional[float]
    #: the same sum started one scale higher; the two starting conventions
    #: appear side by side in the sources, so both are reported
    value_from_next: Optional[float]
    #: for power weights: whether the bound is uniform over anchors
    uniform: Optional[bool]
    detail: str
    #: exact value when every exponent is integral
    exact_value: Optional[Fraction] = None

    @property
    def converges(self) -> bool:
        return self.status == "converges"


def _power_lambda(weight: BallWeight) -> Optional[Union[Fraction, float]]:
    return weight.lam if isinstance(weight, PowerWeight) else None


def _poly_geometric_sum(m: int, x: mpmath.mpf) -> mpmath.mpf:
    """sum over i >= 1 of (i+1)**m * x**i for 0 <= x < 1."""
    if m == 0:
        return x / (1 - x)
    if m == 1:
        return x * (2 - x) / (1 - x) ** 2
    if m == 2:
        return x * (1 + x) / (1 - x) ** 3 + 2 * x / (1 - x) ** 2 + x / (1 - x)
    total = mpmath.mpf(0)
    i = 1
    while True:
        term = mpmath.power(i + 1, m) * mpmath.power(x, i)
        total += term
        if term < total * mpmath.mpf("1e-35") and i > m:
            return total
        i += 1


def check_series(
    condition: SeriesCondition, policy: CheckPolicy = CheckPolicy()
) -> ConditionReport:
    """Decide the weight condition at the anchor.

    Power weights admit closed-form geometric decisions with exact values;
    other weights are summed over a finite horizon and certified only
    through the caller-asserted eventual ratio, otherwise the result is
    ``indeterminate`` (never silently convergent).
    """
    lam_nu = _power_lambda(condition.nu)
    lam_om = _power_lambda(condition.omega)
    lams_i = [_power_lambda(w) for w in condition.nu_i]
    all_power = lam_nu is not None and lam_om is not None and all(
        l is not None for l in lams_i
    )
    if all_power:
        return _check_series_power(condition, lam_nu, lam_om, lams_i)
    return _check_series_sampled(condition, policy)


def _sum_exponent(values) -> Union[Fraction, float]:
    if all(isinstance(v, Fraction) for v in values):
        return sum(values, Fraction(0))
    return math.fsum(float(v) for v in values)


def _check_series_power(cond: SeriesCondition, lam_nu, lam_om, lams_i) -> ConditionReport:
    ctx = cond.context
    n, gamma = ctx.n, cond.anchor_gamma
    with working_precision():
        if cond.kind == ConditionKind.WEIGHT_SUM:
            # terms p**(n j lam_nu) / p**(n gamma lam_om), j >= gamma
            decay = _sum_exponent([lam_nu])
            if float(decay) >= 0:
                return ConditionReport(
                    "diverges", None, None, None,
                    f"terms p**(n*j*{lam_nu}) do not decay (lam >= 0)",
                )
            x = p_power_real(ctx.p, n * real_of(lam_nu))
            first = p_power_real(ctx.p, n * gamma * (real_of(lam_nu) - real_of(lam_om)))
            total = first / (1 - x)
            uniform = lam_nu == lam_om
            exact = None
            e_ratio = lam_nu * n
            e_first = (lam_nu - lam_om) * n * gamma
            if (
                isinstance(e_ratio, Fraction)
                and e_ratio.denominator == 1
                and isinstance(e_first, Fraction)
                and e_first.denominator == 1
            ):
                exact = p_power(ctx.p, int(e_first)) / (
                    1 - p_power(ctx.p, int(e_ratio))
                )
            return ConditionReport(
                "converges",
                as_float(total),
                as_float(total - first),
                uniform,
                f"geometric with ratio p**({n}*{lam_nu})",
                exact_value=exact,
            )
        if cond.kind == ConditionKind.WEIGHT_SUM_GROWTH:
            # terms p**(j*(n lam_nu + beta)) / p**(n gamma lam_om)
            e = _sum_exponent([Fraction(n) * lam_nu if isinstance(lam_nu, Fraction) else n * lam_nu, cond.beta])
            if float(e) >= 0:
                return ConditionReport(
                    "diverges", None, None, None,
                    f"terms p**(j*({n}*{lam_nu}+{cond.beta})) do not decay "
                    "(n*lam + beta >= 0)",
                )
            x = p_power_real(ctx.p, real_of(e))
            first = p_power_real(
                ctx.p, gamma * real_of(e) - n * gamma * real_of(lam_om)
            )
            total = first / (1 - x)
            uniform = float(e) == float(n * real_of(lam_om)) - 0.0 if False else None
            # uniform over anchors iff n*lam_nu + beta == n*lam_om
            uniform = math.isclose(
                float(e), n * float(lam_om), rel_tol=0, abs_tol=1e-15
            )
            return ConditionReport(
                "converges",
                as_float(total),
                as_float(total - first),
                uniform,
                f"geometric with ratio p**({n}*{lam_nu}+{cond.beta})",
            )
        lam_sum = _sum_exponent(lams_i + [lam_nu])
        if cond.kind == ConditionKind.PRODUCT_AT_SCALE:
            exponent = _sum_exponent([lam_sum, -lam_om if isinstance(lam_om, Fraction) else -float(lam_om)])
            value = p_power_real(ctx.p, n * gamma * real_of(exponent))
            if float(exponent) == 0:
                return ConditionReport(
                    "converges", as_float(value), None, True,
                    "scale-free product: exponent sum(lam_i)+lam_nu-lam_om = 0",
                )
            side = "-inf" if float(exponent) > 0 else "+inf"
            return ConditionReport(
                "diverges", as_float(value), None, False,
                f"product grows like p**({n}*gamma*{exponent}) as gamma -> {side}",
            )
        # PRODUCT_TAIL_SUM
        m = len(cond.nu_i)
        if float(_sum_exponent([lam_sum])) >= 0:
            return ConditionReport(
                "diverges", None, None, None,
                f"terms grow like (j+1-gamma)**{m} * p**(n*j*{lam_sum}) "
                "(sum(lam_i)+lam_nu >= 0)",
            )
        x = p_power_real(ctx.p, n * real_of(lam_sum))
        scale = p_power_real(
            ctx.p, n * gamma * (real_of(lam_sum) - real_of(lam_om))
        )
        total = scale * _poly_geometric_sum(m, x)
        uniform = math.isclose(
            float(lam_sum), float(lam_om), rel_tol=0, abs_tol=1e-15
        )
        return ConditionReport(
            "converges", as_float(total), None, uniform,
            f"polynomial-geometric with ratio p**({n}*{lam_sum})",
        )


def _series_terms(cond: SeriesCondition, start: int, count: int):
    ctx = cond.context
    n = ctx.n
    gamma = cond.anchor_gamma
    with working_precision():
        omega_val = real_of(cond.omega.of(cond.anchor_ball(gamma)))
        for j in range(start, start + count):
            ball = cond.anchor_ball(j)
            term = real_of(cond.nu.of(ball)) / omega_val
            if cond.kind == ConditionKind.WEIGHT_SUM_GROWTH:
                term *= p_power_real(ctx.p, j * real_of(cond.beta))
            elif cond.kind == ConditionKind.PRODUCT_TAIL_SUM:
                term *= mpmath.power(j + 1 - gamma, len(cond.nu_i))
                for w in cond.nu_i:
                    term *= real_of(w.of(ball))
            yield j, term


def _check_series_sampled(cond: SeriesCondition, policy: CheckPolicy) -> ConditionReport:
    ctx = cond.context
    gamma = cond.anchor_gamma
    if cond.kind == ConditionKind.PRODUCT_AT_SCALE:
        with working_precision():
            ball = cond.anchor_ball(gamma)
            value = real_of(cond.nu.of(ball)) / real_of(cond.omega.of(ball))
            for w in cond.nu_i:
                value *= real_of(w.of(ball))
            return ConditionReport(
                "indeterminate", as_float(value), None, None,
                "finite at the anchor; uniformity over scales is not "
                "decidable for table-backed weights",
            )
    start = gamma if cond.kind in (ConditionKind.WEIGHT_SUM, ConditionKind.WEIGHT_SUM_GROWTH) else gamma + 1
    with working_precision():
        terms = list(_series_terms(cond, start, policy.horizon))
        partial = mpmath.mpf(0)
        for _, t in terms:
            partial += t
        first = terms[0][1]
        partial_next = partial - first if start == gamma else partial
        last = terms[-1][1]
        ratio = policy.asserted_tail_ratio
        if ratio is not None and 0 < ratio < 1:
            tail = last * real_of(ratio) / (1 - real_of(ratio))
            return ConditionReport(
                "converges",
                as_float(partial + tail),
                as_float(partial_next + tail),
                None,
                f"horizon {policy.horizon} partial sum plus geometric tail "
                f"under asserted ratio {ratio}",
            )
        if last > 0 and last >= first * (1 - 1e-12):
            return ConditionReport(
                "diverges", None, None, None,
                f"terms do not decay over the horizon: t[{terms[-1][0]}] = "
                f"{as_float(last):.6g} >= t[{terms[0][0]}] = {as_float(first):.6g}",
            )
        return ConditionReport(
            "indeterminate",
            as_float(partial),
            as_float(partial_next),
            None,
            "no asserted tail ratio: truncated sum only",
        )


# --------------------------------------------------------------------------
# ratio experiments


@dataclass(frozen=True)
class RatioExperiment:
    """A seeded corpus run measuring target-norm / source-norm ratios for
    one operator between two weighted spaces."""

    context: Context
    operator: str  # "Tk" | "T" | "commutator" | "riesz"
    q: Fraction
    r: Fraction
    nu: BallWeight
    omega: BallWeight
    kernel: Optional[HomogeneousKernel] = None
    symbols: Optional[CommutatorSymbols] = None
    alpha: Optional[Fraction] = None
    k_cycle: tuple[int, ...] = (-4, -3, -2, -1, 0, 1, 2, 3, 4)
    include_stabilized: bool = True
    profile: CorpusProfile = CorpusProfile()
    size: int = 50
    seed: int = 0
    window_pad: int = 1
    label: str = ""
    note: str = ""

    def __post_init__(self) -> None:
        if self.operator not in ("Tk", "T", "commutator", "riesz"):
            raise ValueError(f"unknown operator {self.operator!r}")
        if self.operator in ("Tk", "T", "commutator") and self.kernel is None:
            raise ValueError("singular operators need a kernel")
        if self.operator == "commutator" and self.symbols is None:
            raise ValueError("commutator needs symbols")
        if self.operator == "riesz" and self.alpha is None:
            raise ValueError("fractional integral needs an order")
        if float(self.q) <= 1:
            raise ValueError("source exponent must be > 1")
        if float(self.r) < 1:
            raise ValueError("target exponent must be >= 1")


def singular_experiment(
    context: Context,
    q,
    nu: BallWeight,
    omega: BallWeight,
    kernel: HomogeneousKernel,
    **kwargs,
) -> RatioExperiment:
    """Truncated-operator runs between equal-exponent weighted spaces."""
    q = Fraction(q)
    return RatioExperiment(
        context=context, operator="Tk", q=q, r=q, nu=nu, omega=omega,
        kernel=kernel, label="thm31", **kwargs,
    )


def lipschitz_commutator_experiment(
    context: Context,
    q,
    symbols: CommutatorSymbols,
    nu: BallWeight,
    omega: BallWeight,
    kernel: HomogeneousKernel,
    **kwargs,
) -> RatioExperiment:
    """Commutator runs with smooth symbols; the target exponent satisfies
    1/r = 1/q - beta/n."""
    q = Fraction(q)
    beta = symbols.total_beta()
    n = context.n
    if not (1 < q < Fraction(n) / beta):
        raise ValueError(f"need 1 < q < n/beta = {Fraction(n)/beta}, got {q}")
    r = 1 / (1 / q - beta / n)
    note = (
        "limit-operator membership is stated with the source exponent while "
        "boundedness is measured into the r-indexed target; the r-norm is "
        "reported"
    )
    return RatioExperiment(
        context=context, operator="commutator", q=q, r=r, nu=nu, omega=omega,
        kernel=kernel, symbols=symbols, label="thm32", note=note, **kwargs,
    )


def campanato_commutator_experiment(
    context: Context,
    q,
    symbols: CommutatorSymbols,
    nu: BallWeight,
    omega: BallWeight,
    kernel: HomogeneousKernel,
    **kwargs,
) -> RatioExperiment:
    """Commutator runs with mean-oscillation symbols; the target exponent
    satisfies 1/r = 1/q + sum 1/q_i (so r < q)."""
    q = Fraction(q)
    if symbols.campanato is None:
        raise ValueError("symbols need (q_i, weight) metadata")
    inv = 1 / q
    for q_i, _ in symbols.campanato:
        inv += 1 / Fraction(q_i)
    r = 1 / inv
    if not r > 1:
        raise ValueError(f"target exponent 1/(1/q + sum 1/q_i) = {r} must be > 1")
    note = (
        "limit-operator membership is stated with the source exponent while "
        "boundedness is measured into the r-indexed target; the r-norm is "
        "reported"
    )
    if symbols.m != 2:
        note += f"; m = {symbols.m} is experimental (the reduction argument fixes m = 2)"
    return RatioExperiment(
        context=context, operator="commutator", q=q, r=r, nu=nu, omega=omega,
        kernel=kernel, symbols=symbols, label="thm33", note=note, **kwargs,
    )


def riesz_experiment(
    context: Context, q, alpha, nu: BallWeight, omega: BallWeight, **kwargs
) -> RatioExperiment:
    q = Fraction(q)
    alpha = Fraction(alpha)
    n = context.n
    if not (1 < q < Fraction(n) / alpha):
        raise ValueError(f"need 1 < q < n/alpha, got {q}")
    r = 1 / (1 / q - alpha / n)
    return RatioExperiment(
        context=context, operator="riesz", q=q, r=r, nu=nu, omega=omega,
        alpha=alpha, label="riesz", **kwargs,
    )


@dataclass(frozen=True)
class InstanceRow:
    instance: int
    k_label: str
    input_digest: str
    source_norm: float
    target_norm: float
    ratio: Optional[float]
    skipped: bool = False
    note: str = ""


@dataclass(frozen=True)
class ExperimentReport:
    label: str
    operator: str
    q: Fraction
    r: Fraction
    seed: int
    size: int
    conditions: tuple[tuple[str, ConditionReport], ...]
    hypothesis_ok: bool
    hypothesis_note: str
    rows: tuple[InstanceRow, ...]
    c_emp: Optional[float]
    attaining: Optional[tuple[int, str]]
    note: str = ""
    runtime_seconds: float = field(compare=False, default=0.0)

    @property
    def all_ratios_finite(self) -> bool:
        return all(
            row.ratio is not None and math.isfinite(row.ratio)
            for row in self.rows
            if not row.skipped
        )


def function_digest(f: StepFunction) -> str:
    parts = [f"p={f.context.p}", f"n={f.context.n}"]
    for ball, v in f.cells:
        center = ",".join(str(c) for c in ball.center)
        parts.append(f"({ball.gamma};{center};{v})")
    return hashlib.sha256("|".join(parts).encode()).hexdigest()[:16]


def instance_seed(seed: int, index: int) -> int:
    return seed * 100_003 + index


def experiment_window(e: RatioExperiment, f: StepFunction) -> Ball:
    cover = f.covering_ball
    gamma = f.support_exponent() + e.window_pad
    center = cover.center if cover is not None else (Fraction(0),) * e.context.n
    return Ball(e.context, gamma, center)


def _instance_rows(args: tuple[RatioExperiment, int]) -> tuple[InstanceRow, ...]:
    e, index = args
    f = random_step(e.context, instance_seed(e.seed, index), e.profile)
    digest = function_digest(f)
    if f.is_zero():
        return (
            InstanceRow(index, "-", digest, 0.0, 0.0, None, skipped=True,
                        note="zero draw: ratio 0/0 skipped"),
        )
    window = experiment_window(e, f)
    source = gm_norm(f, e.q, e.nu).value
    rows = []
    k_options: list[tuple[str, Optional[int]]] = [
        (f"k={e.k_cycle[index % len(e.k_cycle)]}", e.k_cycle[index % len(e.k_cycle)])
    ]
    if e.include_stabilized:
        k_options.append(("T", None))
    for k_label, k in k_options:
        if e.operator == "riesz":
            from .operators import riesz_as_grid

            out = riesz_as_grid(e.alpha, f, window)
            target_fn = out
            if k_label != "T":
                continue  # fractional integral has no truncation sweep
        elif e.operator == "commutator":
            target_fn = apply_commutator_as_step(
                e.kernel, k, e.symbols, f, window
            ).function
        else:
            target_fn = apply_Tk_as_step(e.kernel, k, f, window).function
        if getattr(target_fn, "cells", ()):
            target = gm_norm(target_fn, e.r, e.omega).value
        else:
            target = 0.0
        if source == 0 or not math.isfinite(source):
            rows.append(
                InstanceRow(index, k_label, digest, source, target, None,
                            skipped=True, note="source norm degenerate")
            )
        else:
            rows.append(
                InstanceRow(index, k_label, digest, source, target, target / source)
            )
    return tuple(rows)


def experiment_conditions(
    e: RatioExperiment,
) -> tuple[tuple[str, ConditionReport], ...]:
    ctx = e.context
    out = []
    if e.label == "thm32":
        cond = SeriesCondition(
            ConditionKind.WEIGHT_SUM_GROWTH, ctx, e.omega, e.nu,
            beta=e.symbols.total_beta(),
        )
        out.append((ConditionKind.WEIGHT_SUM_GROWTH, check_series(cond)))
    elif e.label == "thm33":
        nu_i = tuple(w for _, w in e.symbols.campanato)
        out.append((
            ConditionKind.PRODUCT_AT_SCALE,
            check_series(SeriesCondition(
                ConditionKind.PRODUCT_AT_SCALE, ctx, e.omega, e.nu, nu_i=nu_i
            )),
        ))
        out.append((
            ConditionKind.PRODUCT_TAIL_SUM,
            check_series(SeriesCondition(
                ConditionKind.PRODUCT_TAIL_SUM, ctx, e.omega, e.nu, nu_i=nu_i
            )),
        ))
    elif e.label == "riesz":
        cond = SeriesCondition(
            ConditionKind.WEIGHT_SUM_GROWTH, ctx, e.omega, e.nu, beta=e.alpha
        )
        out.append((ConditionKind.WEIGHT_SUM_GROWTH, check_series(cond)))
    else:
        cond = SeriesCondition(ConditionKind.WEIGHT_SUM, ctx, e.omega, e.nu)
        out.append((ConditionKind.WEIGHT_SUM, check_series(cond)))
    return tuple(out)


def run_ratio_experiment(e: RatioExperiment, jobs: int = 1) -> ExperimentReport:
    """Execute the corpus; deterministic for a fixed seed and configuration
    regardless of the parallelism degree."""
    started = perf_counter()
    conditions = experiment_conditions(e)
    hypothesis_ok = all(
        rep.converges and rep.uniform is not False for _, rep in conditions
    )
    hypothesis_note = (
        "hypotheses satisfied"
        if hypothesis_ok
        else "hypothesis-violated: executed for contrast"
    )
    payloads = [(e, i) for i in range(e.size)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            chunks = list(pool.map(_instance_rows, payloads))
    else:
        chunks = [_instance_rows(p) for p in payloads]
    rows = tuple(row for chunk in chunks for row in chunk)
    c_emp = None
    attaining = None
    for row in rows:
        if row.ratio is not None and (c_emp is None or row.ratio > c_emp):
            c_emp = row.ratio
            attaining = (row.instance, row.k_label)
    return ExperimentReport(
        label=e.label or e.operator,
        operator=e.operator,
        q=e.q,
        r=e.r,
        seed=e.seed,
        size=e.size,
        conditions=conditions,
        hypothesis_ok=hypothesis_ok,
        hypothesis_note=hypothesis_note,
        rows=rows,
        c_emp=c_emp,
        attaining=attaining,
        note=e.note,
        runtime_seconds=perf_counter() - started,
    )


# --------------------------------------------------------------------------
# proof-step suites


@dataclass(frozen=True)
class SuiteRow:
    instance: int
    label: str
    lhs: float
    rhs: float
    passed: bool
    detail: str = ""


@dataclass(frozen=True)
class SuiteReport:
    name: str
    rows: tuple[SuiteRow, ...]
    runtime_seconds: float = field(compare=False, default=0.0)

    @property
    def all_passed(self) -> bool:
        return all(r.passed for r in self.rows)

    def counts(self) -> tuple[int, int]:
        good = sum(1 for r in self.rows if r.passed)
        return good, len(self.rows)


def _slack_ok(lhs: float, rhs: float) -> bool:
    if lhs <= rhs:
        return True
    return lhs <= rhs * (1 + RELATIVE_SLACK) + 1e-300


def _point_in_ball(ball: Ball, seed: int, depth: int = 4) -> Point:
    ctx = ball.context
    offset = random_point(ctx, seed, bound_exponent=ball.gamma, depth=depth)
    return ball.center_point() + offset


def mean_gap_suite(
    context: Context,
    count: int = 100,
    seed: int = 0,
    q=Fraction(2),
    profile: CorpusProfile = CorpusProfile(),
    lam_choices: Sequence = (Fraction(0), Fraction(1, 8), Fraction(-1, 4)),
) -> SuiteReport:
    """Gap between ball means across scales against the mean-oscillation
    norm.

    Verified form: |mean_k - mean_j| <= p**(n/q) * norm * |j-k| *
    max(weight at both scales) for scale-monotone weights; the adjacency
    factor p**(n/q) is necessary (single-cell indicators saturate past the
    constant-free form).  The constant-free comparison is recorded in the
    row detail.
    """
    started = perf_counter()
    ctx = context
    q = Fraction(q)
    rows = []
    import random as _random

    rng = _random.Random(f"mean-gap:{ctx.p}:{ctx.n}:{seed}")
    for i in range(count):
        b = random_step(ctx, instance_seed(seed, i), profile)
        lam = lam_choices[rng.randrange(len(lam_choices))]
        weight = PowerWeight(Fraction(lam))
        a = random_point(ctx, instance_seed(seed, i) + 1, bound_exponent=1, depth=5)
        k = rng.randint(-3, 2)
        j = rng.randint(k, 3)
        ball_k = Ball.around(a, k)
        ball_j = Ball.around(a, j)
        lhs_exact = abs(b.ball_mean(ball_k) - b.ball_mean(ball_j))
        if j == k:
            rows.append(
                SuiteRow(i, "mean-gap", float(lhs_exact), 0.0,
                         passed=(lhs_exact == 0), detail="degenerate j = k")
            )
            continue
        if b.is_zero():
            rows.append(
                SuiteRow(i, "mean-gap", float(lhs_exact), 0.0,
                         passed=(lhs_exact == 0), detail="zero symbol")
            )
            continue
        policy = NormPolicy(
            gamma_lo=min(b.finest_level() - 1, k),
            gamma_hi=max(b.support_exponent() + 1, j),
        )
        norm = gc_norm(b, q, weight, policy).value
        with working_precision():
            wk = real_of(weight.of(ball_k))
            wj = real_of(weight.of(ball_j))
            literal = real_of(norm) * abs(j - k) * max(wk, wj)
            rhs = as_float(p_power_real(ctx.p, Fraction(ctx.n) / q) * literal)
            literal_ok = _slack_ok(float(lhs_exact), as_float(literal))
        passed = _slack_ok(float(lhs_exact), rhs)
        rows.append(
            SuiteRow(
                i, "mean-gap", float(lhs_exact), rhs, passed,
                detail=f"constant-free form {'holds' if literal_ok else 'fails'}",
            )
        )
    return SuiteReport("mean-gap", tuple(rows), perf_counter() - started)


def mean_shift_suite(
    context: Context,
    count: int = 100,
    seed: int = 0,
    q=Fraction(2),
    profile: CorpusProfile = CorpusProfile(),
    lam_choices: Sequence = (Fraction(0), Fraction(1, 8), Fraction(1, 4)),
) -> SuiteReport:
    """Lq distance on a large ball to the mean on a smaller one:
    (int over B_j of |b - mean_k|**q)**(1/q) <= p**(n/q) * (j+1-k) *
    |B_j|**(1/q) * max weight * norm, for j >= k and nondecreasing weights.
    """
    started = perf_counter()
    ctx = context
    q = Fraction(q)
    rows = []
    import random as _random

    rng = _random.Random(f"mean-shift:{ctx.p}:{ctx.n}:{seed}")
    for i in range(count):
        b = random_step(ctx, instance_seed(seed, i), profile)
        lam = lam_choices[rng.randrange(len(lam_choices))]
        weight = PowerWeight(Fraction(lam))
        a = random_point(ctx, instance_seed(seed, i) + 1, bound_exponent=1, depth=5)
        k = rng.randint(-3, 2)
        j = rng.randint(k, 3)
        ball_k = Ball.around(a, k)
        ball_j = Ball.around(a, j)
        if b.is_zero():
            rows.append(SuiteRow(i, "mean-shift", 0.0, 0.0, True, "zero symbol"))
            continue
        mean_k = b.ball_mean(ball_k)
        with working_precision():
            qs = mpmath.mpf(0)
            covered = Fraction(0)
            for cell, v in b.cells:
                rel = compare(cell, ball_j)
                if rel in (Relation.EQUAL, Relation.B_CONTAINS_A):
                    qs += mpmath.power(abs(real_of(v - mean_k)), real_of(q)) * real_of(cell.measure())
                    covered += cell.measure()
                elif rel is Relation.A_CONTAINS_B:
                    qs += mpmath.power(abs(real_of(v - mean_k)), real_of(q)) * real_of(ball_j.measure())
                    covered += ball_j.measure()
            rest = ball_j.measure() - covered
            if rest > 0 and mean_k != 0:
                qs += mpmath.power(abs(real_of(mean_k)), real_of(q)) * real_of(rest)
            lhs = as_float(qth_root(qs, q))
            policy = NormPolicy(
                gamma_lo=min(b.finest_level() - 1, k),
                gamma_hi=max(b.support_exponent() + 1, j),
            )
            norm = gc_norm(b, q, weight, policy).value
            wk = real_of(weight.of(ball_k))
            wj = real_of(weight.of(ball_j))
            rhs = as_float(
                p_power_real(ctx.p, Fraction(ctx.n) / q)
                * (j + 1 - k)
                * qth_root(real_of(ball_j.measure()), q)
                * max(wk, wj)
                * real_of(norm)
            )
        rows.append(SuiteRow(i, "mean-shift", lhs, rhs, _slack_ok(lhs, rhs)))
    return SuiteReport("mean-shift", tuple(rows), perf_counter() - started)


def _tail_sum(f_abs: StepFunction, anchor: Ball, top: int):
    """Exact sum over shells j > anchor.gamma of p**(-jn) * shell integral."""
    ctx = f_abs.context
    total = Fraction(0)
    per_shell = []
    for j in range(anchor.gamma + 1, top + 1):
        sphere = Sphere(ctx, j, anchor.center)
        shell = integrate_region(f_abs, sphere)
        per_shell.append((j, shell))
        total += p_power(ctx.p, -j * ctx.n) * shell
    return total, per_shell


def tail_bound_suite(
    context: Context,
    count: int = 100,
    seed: int = 0,
    profile: CorpusProfile = CorpusProfile(),
    q=Fraction(2),
    q1=Fraction(8),
    q2=Fraction(8),
) -> SuiteReport:
    """Pointwise bounds for the operator applied to the far part of a
    function, from the plain sup-norm estimate through the one- and
    two-symbol weighted tail sums (explicit constants reconstructed from
    the inequality chain)."""
    started = perf_counter()
    ctx = context
    q, q1, q2 = Fraction(q), Fraction(q1), Fraction(q2)
    rows = []
    import random as _random

    rng = _random.Random(f"tails:{ctx.p}:{ctx.n}:{seed}")
    lam_nu = Fraction(-1, 2 * max(1, int(q)))  # inside [-1/q, 0)
    nu = PowerWeight(lam_nu)
    lam_1 = Fraction(1, 8)
    lam_2 = Fraction(1, 8)
    nu1 = PowerWeight(lam_1)
    nu2 = PowerWeight(lam_2)
    for i in range(count):
        base = instance_seed(seed, i)
        f = random_step(ctx, base, profile)
        kernel = random_kernel(ctx, base + 7, level=rng.choice((-1, -2)))
        gamma = rng.randint(-2, 1)
        a = random_point(ctx, base + 3, bound_exponent=1, depth=4)
        anchor = Ball.around(a, gamma)
        x = _point_in_ball(anchor, base + 11)
        k = rng.randint(-4, gamma)
        f_out = f.restrict_outside(anchor)
        sup_kernel = kernel.sup_norm()
        if f_out.is_zero():
            rows.append(SuiteRow(i, "far-part-sup", 0.0, 0.0, True,
                                 "far part vanishes"))
            continue
        top = max(
            -int((cell.center_point() - a).valuation()) for cell, _ in f_out.cells
        )
        tail_exact, _ = _tail_sum(abs(f_out), anchor, top)
        lhs_exact = abs(apply_Tk(kernel, k, f_out, x))
        rhs_exact = sup_kernel * tail_exact
        rows.append(SuiteRow(
            i, "far-part-sup", float(lhs_exact), float(rhs_exact),
            lhs_exact <= rhs_exact, "exact rational comparison",
        ))
        # weighted form: sum of nu over the shells against the source norm
        with working_precision():
            gm_f = gm_norm(f, q, nu).value
            weight_sum = mpmath.mpf(0)
            for j in range(gamma + 1, top + 1):
                weight_sum += real_of(nu.of(Ball(ctx, j, anchor.center)))
            rhs = as_float(real_of(sup_kernel) * real_of(gm_f) * weight_sum)
        rows.append(SuiteRow(
            i, "far-part-weighted", float(lhs_exact), rhs,
            _slack_ok(float(lhs_exact), rhs),
        ))
        # one oscillating symbol
        b2 = random_step(ctx, base + 23, profile)
        if not b2.is_zero():
            m2 = b2.ball_mean(anchor)
            g = (b2 * f_out) - f_out.scaled(m2)
            lhs2 = abs(apply_Tk(kernel, k, g, x))
            policy2 = NormPolicy(
                gamma_lo=min(b2.finest_level() - 1, gamma),
                gamma_hi=max(b2.support_exponent() + 1, top),
            )
            gc2 = gc_norm(b2, q2, nu2, policy2).value
            with working_precision():
                series = mpmath.mpf(0)
                for j in range(gamma + 1, top + 1):
                    ball_j = Ball(ctx, j, anchor.center)
                    series += (
                        (j + 1 - gamma)
                        * real_of(nu.of(ball_j))
                        * real_of(nu2.of(ball_j))
                    )
                rhs2 = as_float(
                    real_of(sup_kernel)
                    * p_power_real(ctx.p, Fraction(ctx.n) / q2)
                    * real_of(gc2)
                    * real_of(gm_f)
                    * series
                )
            rows.append(SuiteRow(
                i, "one-symbol-tail", float(lhs2), rhs2,
                _slack_ok(float(lhs2), rhs2),
            ))
            # two oscillating symbols
            b1 = random_step(ctx, base + 31, profile)
            if not b1.is_zero():
                m1 = b1.ball_mean(anchor)
                g2 = ((b1 * g) - g.scaled(m1))
                lhs3 = abs(apply_Tk(kernel, k, g2, x))
                policy1 = NormPolicy(
                    gamma_lo=min(b1.finest_level() - 1, gamma),
                    gamma_hi=max(b1.support_exponent() + 1, top),
                )
                gc1 = gc_norm(b1, q1, nu1, policy1).value
                with working_precision():
                    series = mpmath.mpf(0)
                    for j in range(gamma + 1, top + 1):
                        ball_j = Ball(ctx, j, anchor.center)
                        series += (
                            mpmath.power(j + 1 - gamma, 2)
                            * real_of(nu.of(ball_j))
                            * real_of(nu1.of(ball_j))
                            * real_of(nu2.of(ball_j))
                        )
                    rhs3 = as_float(
                        real_of(sup_kernel)
                        * p_power_real(ctx.p, Fraction(ctx.n) / q1 + Fraction(ctx.n) / q2)
                        * real_of(gc1)
                        * real_of(gc2)
                        * real_of(gm_f)
                        * series
                    )
                rows.append(SuiteRow(
                    i, "two-symbol-tail", float(lhs3), rhs3,
                    _slack_ok(float(lhs3), rhs3),
                ))
    return SuiteReport("tail-bounds", tuple(rows), perf_counter() - started)


def commutator_domination_suite(
    context: Context,
    count: int = 100,
    seed: int = 0,
    profile: CorpusProfile = CorpusProfile(),
    betas: Sequence = (Fraction(1, 4),),
) -> SuiteReport:
    """|commutator at x| <= sup|kernel| * prod Lipschitz norms * normalizer *
    fractional integral of |f| at x."""
    started = perf_counter()
    ctx = context
    betas = tuple(Fraction(b) for b in betas)
    beta = sum(betas, Fraction(0))
    rows = []
    import random as _random

    rng = _random.Random(f"domination:{ctx.p}:{ctx.n}:{seed}")
    for i in range(count):
        base = instance_seed(seed, i)
        f = random_step(ctx, base, profile)
        kernel = random_kernel(ctx, base + 7, level=rng.choice((-1, -2)))
        symbol_fns = tuple(
            random_step(ctx, base + 13 * (t + 1), profile)
            for t in range(len(betas))
        )
        x = random_point(ctx, base + 5, bound_exponent=1, depth=4)
        k = rng.randint(-4, 2)
        if f.is_zero() or any(b.is_zero() for b in symbol_fns):
            rows.append(SuiteRow(i, "domination", 0.0, 0.0, True, "zero draw"))
            continue
        symbols = CommutatorSymbols(symbol_fns, betas=betas)
        lhs = abs(apply_commutator(kernel, k, symbols, f, x))
        lips = [lipschitz_norm(b, bt) for b, bt in zip(symbol_fns, betas)]
        with working_precision():
            rhs = real_of(kernel.sup_norm())
            for lip in lips:
                rhs *= real_of(lip)
            rhs *= real_of(riesz_normalizer(ctx, beta))
            rhs *= real_of(riesz(beta, abs(f), x))
            rhs = as_float(rhs)
        rows.append(SuiteRow(i, "domination", float(lhs), rhs,
                             _slack_ok(float(lhs), rhs)))
    return SuiteReport("commutator-domination", tuple(rows), perf_counter() - started)
