"""Acceptance criteria, one test per criterion, each printing a PASS/FAIL
line with its runtime.  Run with `pytest tests/test_acceptance.py -v -s`."""

import json
import math
import random
import time
from fractions import Fraction
from pathlib import Path

import pytest

import oracles
from padic_harmonics.core import Ball, Context, Sphere, compare, p_power
from padic_harmonics.functions import (
    CommutatorSymbols,
    CorpusProfile,
    HomogeneousKernel,
    PowerWeight,
    StepFunction,
    random_kernel,
    random_point,
    random_step,
)
from padic_harmonics.norms import gm_norm, lipschitz_norm
from padic_harmonics.operators import (
    annulus_kernel_integral,
    apply_T,
    apply_Tk,
    apply_Tk_as_step,
    apply_commutator,
    apply_commutator_as_step,
    integrate,
    local_constancy_scale,
)
from padic_harmonics.specio import load_spec, run_spec
from padic_harmonics.verify import (
    ConditionKind,
    SeriesCondition,
    campanato_commutator_experiment,
    check_series,
    commutator_domination_suite,
    experiment_window,
    instance_seed,
    lipschitz_commutator_experiment,
    mean_gap_suite,
    mean_shift_suite,
    run_ratio_experiment,
    singular_experiment,
    tail_bound_suite,
)

F = Fraction
DATA = Path(__file__).parent / "data"

CONTEXTS = [Context(2, 1), Context(3, 1), Context(5, 1), Context(2, 2), Context(3, 2)]


def _report(number: int, ok: bool, started: float, detail: str) -> None:
    status = "PASS" if ok else "FAIL"
    print(f"ACCEPTANCE {number:2d} {status} ({time.perf_counter() - started:6.2f}s) {detail}")
    assert ok, f"criterion {number}: {detail}"


def _random_ball(rng: random.Random, ctx: Context) -> Ball:
    gamma = rng.randint(-4, 4)
    coords = tuple(
        F(rng.randint(-40, 40), rng.randint(1, 32)) for _ in range(ctx.n)
    )
    return Ball(ctx, gamma, coords)


def test_criterion_1_exact_measures():
    started = time.perf_counter()
    rng = random.Random("measures")
    ok = True
    for trial in range(200):
        ctx = CONTEXTS[trial % 4]
        ball = _random_ball(rng, ctx)
        kids = ball.children()
        ok = ok and sum((b.measure() for b in kids), F(0)) == ball.measure()
        sphere = Sphere(ctx, ball.gamma, ball.center)
        ok = ok and sphere.measure() == ball.measure() * (1 - p_power(ctx.p, -ctx.n))
        # union over k <= gamma of the spheres exhausts the ball: the
        # closed-form geometric series sum_{k<=g} p^{nk}(1-p^{-n}) = p^{ng}
        total = sum(
            (Sphere(ctx, k, ball.center).measure()
             for k in range(ball.gamma - 5, ball.gamma + 1)),
            F(0),
        ) + Ball(ctx, ball.gamma - 6, ball.center).measure()
        ok = ok and total == ball.measure()
        if not ok:
            break
    _report(1, ok, started, "children/sphere/partition measures exact on 200 random balls")


def test_criterion_2_integration_oracle():
    started = time.perf_counter()
    profiles = {
        (2, 1): CorpusProfile(gamma_min=-3, gamma_max=0, bound_exponent=1, cells=6),
        (3, 1): CorpusProfile(gamma_min=-3, gamma_max=0, bound_exponent=1, cells=6),
        (5, 1): CorpusProfile(gamma_min=-2, gamma_max=0, bound_exponent=0, cells=5),
        (2, 2): CorpusProfile(gamma_min=-2, gamma_max=0, bound_exponent=1, cells=5),
    }
    ok = True
    for trial in range(100):
        ctx = CONTEXTS[trial % 4]
        f = random_step(ctx, 9000 + trial, profiles[(ctx.p, ctx.n)])
        ok = ok and integrate(f) == oracles.brute_integral(f)
        if not ok:
            break
    _report(2, ok, started, "integrate equals fine-level enumeration on 100 functions")


def test_criterion_3_kernel_cancellation():
    started = time.perf_counter()
    ok = True
    for trial in range(50):
        ctx = CONTEXTS[trial % 4]
        kernel = random_kernel(ctx, 300 + trial, level=-1 if trial % 2 else -2)
        for a in range(-5, 5):
            for b in range(a + 1, 6):
                ok = ok and annulus_kernel_integral(kernel, a, b) == 0
        if not ok:
            break
    _report(3, ok, started, "annulus kernel integral vanishes for 50 kernels, all -5 <= a < b <= 5")


def test_criterion_4_stabilization():
    started = time.perf_counter()
    profile = CorpusProfile(gamma_min=-3, gamma_max=0, bound_exponent=1, cells=5)
    ok = True
    for trial in range(100):
        ctx = CONTEXTS[trial % 2]  # p = 2, 3
        f = random_step(ctx, 5000 + trial, profile)
        kernel = random_kernel(ctx, 6000 + trial, level=-2)
        x = random_point(ctx, 7000 + trial, bound_exponent=1, depth=6)
        ks = local_constancy_scale(f, x)
        values = {apply_Tk(kernel, k, f, x) for k in (ks, ks - 1, ks - 2)}
        ok = ok and len(values) == 1 and apply_T(kernel, f, x) == values.pop()
        if not ok:
            break
    _report(4, ok, started, "three truncations below the constancy scale agree on 100 draws")


def test_criterion_5_worked_values():
    started = time.perf_counter()
    ctx = Context(2, 1)
    kernel = HomogeneousKernel.from_values(
        ctx, -2, {(F(1),): F(1), (F(3),): F(-1)}
    )
    f = StepFunction.indicator(Ball(ctx, -2, (F(1),)))
    ok = apply_Tk(kernel, -3, f, ctx.zero()) == F(-1, 4)
    symbols = CommutatorSymbols((f,))
    ok = ok and apply_commutator(kernel, -3, symbols, f, ctx.zero()) == F(1, 4)
    unit = StepFunction.indicator(Ball(ctx, 0, (F(0),)))
    for beta in (F(1, 4), F(1, 2), F(3, 4)):
        expected = 2.0 ** (-float(beta))
        got = lipschitz_norm(unit, beta)
        ok = ok and abs(got - expected) <= 1e-12 * expected
    _report(5, ok, started, "anchor values -1/4, +1/4 and 2**(-beta) reproduced")


def test_criterion_6_mean_gap_suites():
    started = time.perf_counter()
    profile = CorpusProfile(gamma_min=-3, gamma_max=0, bound_exponent=1, cells=4)
    gap = mean_gap_suite(Context(2, 1), count=100, seed=60, profile=profile)
    shift = mean_shift_suite(Context(2, 1), count=100, seed=61, profile=profile)
    degenerate = [r for r in gap.rows if "degenerate" in r.detail]
    ok = (
        gap.all_passed
        and shift.all_passed
        and degenerate
        and all(r.lhs == 0.0 for r in degenerate)
    )
    _report(6, ok, started,
            f"mean-gap/mean-shift suites pass 100+100 rows "
            f"({len(degenerate)} degenerate rows exactly 0 <= 0)")


def test_criterion_7_condition_checkers():
    started = time.perf_counter()
    ok = True
    for p in (2, 3, 5):
        for n in (1, 2):
            ctx = Context(p, n)
            for lam in (F(-2), F(-1), F(-1, 2), F(-1, 4)):
                report = check_series(SeriesCondition(
                    ConditionKind.WEIGHT_SUM, ctx, PowerWeight(lam), PowerWeight(lam)
                ))
                closed = 1 / (1 - float(p) ** (n * float(lam)))
                ok = ok and report.converges
                ok = ok and abs(report.value - closed) <= 1e-12 * closed
                if (lam * n).denominator == 1:
                    ok = ok and report.exact_value == 1 / (1 - p_power(p, int(lam * n)))
            for lam in (F(0), F(1, 4), F(1)):
                report = check_series(SeriesCondition(
                    ConditionKind.WEIGHT_SUM, ctx, PowerWeight(lam), PowerWeight(lam)
                ))
                ok = ok and report.status == "diverges"
    ctx = Context(2, 1)
    for lam in (F(-1), F(-1, 2), F(-1, 4), F(-1, 8), F(0)):
        for beta in (F(1, 8), F(1, 4), F(1, 2), F(3, 4), F(7, 8)):
            report = check_series(SeriesCondition(
                ConditionKind.WEIGHT_SUM_GROWTH, ctx,
                PowerWeight(lam), PowerWeight(lam), beta=beta,
            ))
            expected = "converges" if ctx.n * lam + beta < 0 else "diverges"
            ok = ok and report.status == expected
    _report(7, ok, started, "geometric decisions and exact sums across the parameter grids")


def _oracle_check_rows(experiment, report, rel=1e-9) -> bool:
    """Recompute both norms of the max-ratio row of every instance by
    exhaustive fine-level enumeration."""
    by_instance = {}
    for row in report.rows:
        if row.skipped or row.ratio is None:
            continue
        cur = by_instance.get(row.instance)
        if cur is None or row.ratio > cur.ratio:
            by_instance[row.instance] = row
    for index, row in sorted(by_instance.items()):
        f = random_step(experiment.context, instance_seed(experiment.seed, index),
                        experiment.profile)
        src_report = gm_norm(f, experiment.q, experiment.nu)
        lo, hi = src_report.window
        brute_src = oracles.brute_gm_norm(f, experiment.q, experiment.nu, lo, hi)
        if not math.isclose(row.source_norm, brute_src, rel_tol=rel):
            return False
        window = experiment_window(experiment, f)
        k = None if row.k_label == "T" else int(row.k_label.split("=")[1])
        if experiment.operator == "commutator":
            out = apply_commutator_as_step(
                experiment.kernel, k, experiment.symbols, f, window
            ).function
        else:
            out = apply_Tk_as_step(experiment.kernel, k, f, window).function
        if out.is_zero():
            if row.target_norm != 0.0:
                return False
            continue
        tgt_report = gm_norm(out, experiment.r, experiment.omega)
        lo, hi = tgt_report.window
        brute_tgt = oracles.brute_gm_norm(out, experiment.r, experiment.omega, lo, hi)
        if not math.isclose(row.target_norm, brute_tgt, rel_tol=rel, abs_tol=1e-30):
            return False
    return True


def test_criterion_8_theorem_ratio_suites():
    started = time.perf_counter()
    ctx2 = Context(2, 1)
    profile2 = CorpusProfile(gamma_min=-3, gamma_max=0, bound_exponent=1, cells=6)
    kernel2 = random_kernel(ctx2, 1234, level=-2)

    singular = singular_experiment(
        ctx2, F(2), PowerWeight(F(-1, 2)), PowerWeight(F(-1, 2)), kernel2,
        profile=profile2, size=50, seed=81,
    )
    ctx3 = Context(3, 1)
    profile3 = CorpusProfile(gamma_min=-2, gamma_max=0, bound_exponent=1, cells=5)
    kernel3 = random_kernel(ctx3, 1235, level=-1)
    lip_symbols = CommutatorSymbols(
        (random_step(ctx3, 501, profile3), random_step(ctx3, 502, profile3)),
        betas=(F(1, 8), F(1, 8)),
    )
    lipschitz = lipschitz_commutator_experiment(
        ctx3, F(2), lip_symbols, PowerWeight(F(-3, 8)), PowerWeight(F(-1, 8)),
        kernel3, profile=profile3, size=50, seed=82,
    )
    camp_symbols = CommutatorSymbols(
        (random_step(ctx2, 503, profile2), random_step(ctx2, 504, profile2)),
        campanato=((F(8), PowerWeight(F(1, 8))), (F(8), PowerWeight(F(1, 8)))),
    )
    campanato = campanato_commutator_experiment(
        ctx2, F(2), camp_symbols, PowerWeight(F(-1, 2)), PowerWeight(F(-1, 4)),
        kernel2, profile=profile2, size=50, seed=83,
    )

    ok = True
    details = []
    for experiment in (singular, lipschitz, campanato):
        report = run_ratio_experiment(experiment)
        ok = ok and report.hypothesis_ok and report.all_ratios_finite
        ok = ok and _oracle_check_rows(experiment, report)
        rerun = run_ratio_experiment(experiment)
        parallel = run_ratio_experiment(experiment, jobs=2)
        ok = ok and report == rerun == parallel
        details.append(f"{report.label}: C_emp={report.c_emp:.4g}")
        if not ok:
            break
    _report(8, ok, started, "; ".join(details) +
            " (ratios finite, norms oracle-checked, reports jobs-invariant)")


def test_criterion_9_tail_and_domination_suites():
    started = time.perf_counter()
    profile = CorpusProfile(gamma_min=-3, gamma_max=0, bound_exponent=1, cells=4)
    tails = tail_bound_suite(Context(2, 1), count=100, seed=90, profile=profile)
    domination = commutator_domination_suite(
        Context(2, 1), count=100, seed=91, profile=profile
    )
    good_t, total_t = tails.counts()
    good_d, total_d = domination.counts()
    ok = tails.all_passed and domination.all_passed
    _report(9, ok, started,
            f"tail rows {good_t}/{total_t}, domination rows {good_d}/{total_d} within 1e-9")


def test_criterion_10_cli_contract(tmp_path):
    started = time.perf_counter()
    spec_path = DATA / "golden_spec.json"
    spec = load_spec(spec_path)
    code, failing = run_spec(spec, tmp_path / "a")
    ok = code == 0 and not failing

    def strip(path):
        return [l for l in path.read_text().splitlines() if '"timestamp"' not in l]

    golden = [l for l in (DATA / "golden_report.json").read_text().splitlines()
              if '"timestamp"' not in l]
    ok = ok and strip(tmp_path / "a" / "report.json") == golden
    run_spec(spec, tmp_path / "b", jobs=2)
    ok = ok and strip(tmp_path / "b" / "report.json") == golden
    report = json.loads((tmp_path / "a" / "report.json").read_text())
    by_id = {t["task_id"]: t for t in report["tasks"]}
    ok = ok and by_id["tk-bump"]["result"]["value"] == "-1/4"
    ok = ok and by_id["comm-bump"]["result"]["value"] == "1/4"
    ok = ok and "." not in by_id["int-mixed"]["result"]["value"]
    _report(10, ok, started,
            "golden report reproduced byte-for-byte (mod timestamp), rationals stay rational")
