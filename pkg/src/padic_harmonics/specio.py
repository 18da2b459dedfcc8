"""Experiment description files and deterministic reports.

The on-disk format is strict JSON under the schema id
``padic-harmonics/spec-v1``: function literals are explicit cell lists, all
exact values are written as reduced rational strings ("num/den" or an
integer literal), centers are canonicalized on load, and every module
invariant is validated at load time with field-precise error paths.

Reports never render exact values as floats: rationals stay rational
strings and genuine reals are written with 17 significant digits.  A rerun
with the same spec and seed produces byte-identical report files except for
the single ``timestamp`` field.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
from dataclasses import dataclass, field
from datetime import datetime, timezone
from fractions import Fraction
from pathlib import Path
from time import perf_counter
from typing import Any, Mapping, Optional, Union

from . import __version__
from .core import Ball, Context, Point
from .functions import (
    BallWeight,
    CommutatorSymbols,
    CorpusProfile,
    HomogeneousKernel,
    PowerWeight,
    StepFunction,
    StepIntegralWeight,
    TabulatedWeight,
)
from .norms import (
    NormPolicy,
    NormReport,
    TailMode,
    cbmo_norm,
    cm_norm,
    gc_norm,
    gm_norm,
    lipschitz_norm,
    lq_norm,
)
from .operators import (
    apply_T,
    apply_Tk,
    apply_commutator,
    integrate,
    riesz,
)
from .verify import (
    CheckPolicy,
    ConditionKind,
    ConditionReport,
    ExperimentReport,
    RatioExperiment,
    SeriesCondition,
    SuiteReport,
    campanato_commutator_experiment,
    check_series,
    commutator_domination_suite,
    lipschitz_commutator_experiment,
    mean_gap_suite,
    mean_shift_suite,
    run_ratio_experiment,
    singular_experiment,
    tail_bound_suite,
)

SCHEMA = "padic-harmonics/spec-v1"

TASK_KINDS = ("integrate", "apply", "norm", "check", "verify")
APPLY_OPERATORS = ("Tk", "T", "commutator", "riesz")
NORM_KINDS = ("lq", "gm", "cm", "gc", "cbmo", "lip")
VERIFY_SUITES = ("thm31", "thm32", "thm33", "lemma21", "tails")


class SpecError(ValueError):
    """Load-time failure with the offending field path."""

    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}")


def _require(mapping: Mapping, key: str, path: str):
    if key not in mapping:
        raise SpecError(path, f"missing required field {key!r}")
    return mapping[key]


def _as_int(value, path: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise SpecError(path, f"expected an integer, got {value!r}")
    return value


def parse_rational(value, path: str) -> Fraction:
    """Exact values are written as integer or 'num/den' strings; floats are
    rejected to keep the exact pipeline exact."""
    if isinstance(value, bool):
        raise SpecError(path, "expected a rational, got a boolean")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        raise SpecError(path, "floats are not accepted for exact values; write 'num/den'")
    if isinstance(value, str):
        try:
            return Fraction(value)
        except (ValueError, ZeroDivisionError) as exc:
            raise SpecError(path, f"not a rational literal: {value!r} ({exc})")
    raise SpecError(path, f"expected a rational literal, got {value!r}")


def render_rational(value: Fraction) -> str:
    return str(Fraction(value))


def render_float(value: float) -> str:
    if value != value:
        return "nan"
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    return format(value, ".17g")


def _parse_center(value, context: Context, path: str) -> tuple[Fraction, ...]:
    if not isinstance(value, list) or len(value) != context.n:
        raise SpecError(path, f"expected {context.n} coordinates")
    return tuple(
        parse_rational(c, f"{path}[{i}]") for i, c in enumerate(value)
    )


def _parse_point(value, context: Context, path: str) -> Point:
    return Point(context, _parse_center(value, context, path))


# --------------------------------------------------------------------------
# spec model


@dataclass(frozen=True)
class ExperimentSpec:
    context: Context
    seed: int
    policy: NormPolicy
    window_pad: int
    kernel: Optional[HomogeneousKernel]
    functions: tuple[tuple[str, StepFunction], ...]
    weights: tuple[tuple[str, BallWeight], ...]
    symbols: tuple[tuple[str, CommutatorSymbols], ...]
    tasks: tuple[dict, ...]

    def function(self, name: str, path: str) -> StepFunction:
        for key, f in self.functions:
            if key == name:
                return f
        raise SpecError(path, f"unknown function {name!r}")

    def weight(self, name: str, path: str) -> BallWeight:
        for key, w in self.weights:
            if key == name:
                return w
        raise SpecError(path, f"unknown weight {name!r}")

    def symbol_set(self, name: str, path: str) -> CommutatorSymbols:
        for key, s in self.symbols:
            if key == name:
                return s
        raise SpecError(path, f"unknown symbols {name!r}")


def _parse_cells(raw, context: Context, path: str):
    if not isinstance(raw, list):
        raise SpecError(path, "expected a list of cells")
    cells = []
    for i, cell in enumerate(raw):
        cpath = f"{path}[{i}]"
        if not isinstance(cell, Mapping):
            raise SpecError(cpath, "expected a cell object")
        gamma = _as_int(_require(cell, "gamma", cpath), f"{cpath}.gamma")
        center = _parse_center(_require(cell, "center", cpath), context, f"{cpath}.center")
        value = parse_rational(_require(cell, "value", cpath), f"{cpath}.value")
        try:
            ball = Ball(context, gamma, center)
        except ValueError as exc:
            raise SpecError(cpath, str(exc))
        cells.append((ball, value))
    return tuple(cells)


def _parse_function(raw, context: Context, path: str) -> StepFunction:
    if not isinstance(raw, Mapping):
        raise SpecError(path, "expected a function object with 'cells'")
    cells = _parse_cells(_require(raw, "cells", path), context, f"{path}.cells")
    try:
        return StepFunction(context, cells)
    except ValueError as exc:
        raise SpecError(path, str(exc))


def _parse_kernel(raw, context: Context, path: str) -> HomogeneousKernel:
    if not isinstance(raw, Mapping):
        raise SpecError(path, "expected a kernel object")
    level = _as_int(_require(raw, "level", path), f"{path}.level")
    raw_cells = _require(raw, "cells", path)
    if not isinstance(raw_cells, list):
        raise SpecError(f"{path}.cells", "expected a list of kernel cells")
    cells = []
    for i, cell in enumerate(raw_cells):
        cpath = f"{path}.cells[{i}]"
        center = _parse_center(_require(cell, "center", cpath), context, f"{cpath}.center")
        value = parse_rational(_require(cell, "value", cpath), f"{cpath}.value")
        try:
            cells.append((Ball(context, level, center), value))
        except ValueError as exc:
            raise SpecError(cpath, str(exc))
    try:
        return HomogeneousKernel(context, level, tuple(cells))
    except ValueError as exc:
        raise SpecError(path, str(exc))


def _parse_weight(raw, spec_functions, context: Context, path: str) -> BallWeight:
    if not isinstance(raw, Mapping):
        raise SpecError(path, "expected a weight object")
    kind = _require(raw, "kind", path)
    if kind == "power":
        lam = parse_rational(_require(raw, "lam", path), f"{path}.lam")
        return PowerWeight(lam)
    if kind == "step_integral":
        name = _require(raw, "density", path)
        for key, f in spec_functions:
            if key == name:
                return StepIntegralWeight(f)
        raise SpecError(f"{path}.density", f"unknown function {name!r}")
    if kind == "tabulated":
        entries = _require(raw, "entries", path)
        if not isinstance(entries, list):
            raise SpecError(f"{path}.entries", "expected a list")
        table = {}
        for i, entry in enumerate(entries):
            epath = f"{path}.entries[{i}]"
            gamma = _as_int(_require(entry, "gamma", epath), f"{epath}.gamma")
            center = _parse_center(_require(entry, "center", epath), context, f"{epath}.center")
            value = parse_rational(_require(entry, "value", epath), f"{epath}.value")
            if value <= 0:
                raise SpecError(f"{epath}.value", "weight values must be positive")
            ball = Ball(context, gamma, center)
            table[(ball.gamma, ball.center)] = value
        return TabulatedWeight.from_dict(table)
    raise SpecError(f"{path}.kind", f"unknown weight kind {kind!r}")


def _parse_symbols(raw, spec: "ExperimentSpec", path: str) -> CommutatorSymbols:
    if not isinstance(raw, Mapping):
        raise SpecError(path, "expected a symbols object")
    names = _require(raw, "functions", path)
    if not isinstance(names, list) or not names:
        raise SpecError(f"{path}.functions", "expected a non-empty list of function names")
    fns = tuple(
        spec.function(name, f"{path}.functions[{i}]") for i, name in enumerate(names)
    )
    betas = None
    if "betas" in raw:
        betas = tuple(
            parse_rational(b, f"{path}.betas[{i}]") for i, b in enumerate(raw["betas"])
        )
    campanato = None
    if "campanato" in raw:
        pairs = []
        for i, entry in enumerate(raw["campanato"]):
            epath = f"{path}.campanato[{i}]"
            q_i = parse_rational(_require(entry, "q", epath), f"{epath}.q")
            weight = spec.weight(_require(entry, "weight", epath), f"{epath}.weight")
            pairs.append((q_i, weight))
        campanato = tuple(pairs)
    try:
        return CommutatorSymbols(fns, betas=betas, campanato=campanato)
    except ValueError as exc:
        raise SpecError(path, str(exc))


def _parse_profile(raw, path: str) -> CorpusProfile:
    if raw is None:
        return CorpusProfile()
    if not isinstance(raw, Mapping):
        raise SpecError(path, "expected a corpus profile object")
    kwargs = {}
    for key in (
        "gamma_min", "gamma_max", "bound_exponent", "cells",
        "value_numerator_max", "value_denominator_max",
    ):
        if key in raw:
            kwargs[key] = _as_int(raw[key], f"{path}.{key}")
    unknown = set(raw) - set(kwargs)
    if unknown:
        raise SpecError(path, f"unknown profile fields {sorted(unknown)}")
    try:
        return CorpusProfile(**kwargs)
    except ValueError as exc:
        raise SpecError(path, str(exc))


def _parse_policy(raw, path: str) -> tuple[NormPolicy, int]:
    if raw is None:
        return NormPolicy(), 1
    if not isinstance(raw, Mapping):
        raise SpecError(path, "expected a policy object")
    gamma_lo = gamma_hi = None
    if raw.get("window") is not None:
        window = raw["window"]
        if not isinstance(window, list) or len(window) != 2:
            raise SpecError(f"{path}.window", "expected [lo, hi]")
        gamma_lo = _as_int(window[0], f"{path}.window[0]")
        gamma_hi = _as_int(window[1], f"{path}.window[1]")
    tail_mode = raw.get("tail_mode", TailMode.CLOSED_FORM_POWER)
    if tail_mode not in TailMode.ALL:
        raise SpecError(f"{path}.tail_mode", f"unknown tail mode {tail_mode!r}")
    tol = raw.get("float_rel_tol", 1e-12)
    if not isinstance(tol, (int, float)) or tol <= 0:
        raise SpecError(f"{path}.float_rel_tol", "expected a positive number")
    pad = _as_int(raw.get("window_pad", 1), f"{path}.window_pad")
    try:
        policy = NormPolicy(
            gamma_lo=gamma_lo, gamma_hi=gamma_hi, tail_mode=tail_mode,
            float_rel_tol=float(tol),
        )
    except ValueError as exc:
        raise SpecError(path, str(exc))
    return policy, pad


_TASK_FIELDS = {
    "integrate": {"id", "kind", "function"},
    "apply": {"id", "kind", "operator", "function", "point", "k", "symbols", "alpha"},
    "norm": {"id", "kind", "norm", "function", "q", "weight", "lam", "beta"},
    "check": {"id", "kind", "condition", "nu", "omega", "nu_i", "beta", "anchor",
              "horizon", "asserted_tail_ratio"},
    "verify": {"id", "kind", "suite", "q", "nu", "omega", "symbols", "count",
               "profile", "k_cycle", "window_pad"},
}


def _validate_task(task, spec: ExperimentSpec, path: str) -> dict:
    if not isinstance(task, Mapping):
        raise SpecError(path, "expected a task object")
    kind = _require(task, "kind", path)
    if kind not in TASK_KINDS:
        raise SpecError(f"{path}.kind", f"unknown task kind {kind!r}")
    task_id = _require(task, "id", path)
    if not isinstance(task_id, str) or not task_id:
        raise SpecError(f"{path}.id", "task id must be a non-empty string")
    unknown = set(task) - _TASK_FIELDS[kind]
    if unknown:
        raise SpecError(path, f"unknown fields for {kind!r} task: {sorted(unknown)}")
    ctx = spec.context
    if kind == "integrate":
        spec.function(_require(task, "function", path), f"{path}.function")
    elif kind == "apply":
        op = _require(task, "operator", path)
        if op not in APPLY_OPERATORS:
            raise SpecError(f"{path}.operator", f"unknown operator {op!r}")
        spec.function(_require(task, "function", path), f"{path}.function")
        _parse_point(_require(task, "point", path), ctx, f"{path}.point")
        if op in ("Tk", "T", "commutator") and spec.kernel is None:
            raise SpecError(path, "task needs a kernel but the spec has none")
        if op in ("Tk", "commutator"):
            _as_int(_require(task, "k", path), f"{path}.k")
        if op == "commutator":
            spec.symbol_set(_require(task, "symbols", path), f"{path}.symbols")
        if op == "riesz":
            alpha = parse_rational(_require(task, "alpha", path), f"{path}.alpha")
            if not (0 < alpha < ctx.n):
                raise SpecError(f"{path}.alpha", f"must lie in (0, {ctx.n})")
    elif kind == "norm":
        norm = _require(task, "norm", path)
        if norm not in NORM_KINDS:
            raise SpecError(f"{path}.norm", f"unknown norm {norm!r}")
        spec.function(_require(task, "function", path), f"{path}.function")
        if norm == "lip":
            beta = parse_rational(_require(task, "beta", path), f"{path}.beta")
            if not (0 < beta < 1):
                raise SpecError(f"{path}.beta", "must lie in (0, 1)")
        else:
            q = parse_rational(_require(task, "q", path), f"{path}.q")
            if q < 1:
                raise SpecError(f"{path}.q", "must be >= 1")
        if norm in ("gm", "gc"):
            spec.weight(_require(task, "weight", path), f"{path}.weight")
        if norm in ("cm", "cbmo"):
            parse_rational(_require(task, "lam", path), f"{path}.lam")
    elif kind == "check":
        condition = _require(task, "condition", path)
        if condition not in ConditionKind.ALL:
            raise SpecError(f"{path}.condition", f"unknown condition {condition!r}")
        spec.weight(_require(task, "nu", path), f"{path}.nu")
        spec.weight(_require(task, "omega", path), f"{path}.omega")
        if condition == ConditionKind.WEIGHT_SUM_GROWTH:
            parse_rational(_require(task, "beta", path), f"{path}.beta")
        if condition in (ConditionKind.PRODUCT_AT_SCALE, ConditionKind.PRODUCT_TAIL_SUM):
            names = _require(task, "nu_i", path)
            if not isinstance(names, list) or not names:
                raise SpecError(f"{path}.nu_i", "expected a non-empty list")
            for i, name in enumerate(names):
                spec.weight(name, f"{path}.nu_i[{i}]")
        if "anchor" in task:
            anchor = task["anchor"]
            _as_int(_require(anchor, "gamma", f"{path}.anchor"), f"{path}.anchor.gamma")
            _parse_center(_require(anchor, "center", f"{path}.anchor"), ctx,
                          f"{path}.anchor.center")
    else:  # verify
        suite = _require(task, "suite", path)
        if suite not in VERIFY_SUITES:
            raise SpecError(f"{path}.suite", f"unknown suite {suite!r}")
        if suite in ("thm31", "thm32", "thm33"):
            if spec.kernel is None:
                raise SpecError(path, "ratio suites need a kernel")
            parse_rational(_require(task, "q", path), f"{path}.q")
            spec.weight(_require(task, "nu", path), f"{path}.nu")
            spec.weight(_require(task, "omega", path), f"{path}.omega")
        if suite in ("thm32", "thm33"):
            spec.symbol_set(_require(task, "symbols", path), f"{path}.symbols")
        if "count" in task:
            _as_int(task["count"], f"{path}.count")
        _parse_profile(task.get("profile"), f"{path}.profile")
    return dict(task)


def load_spec_dict(data: Any, path: str = "spec") -> ExperimentSpec:
    if not isinstance(data, Mapping):
        raise SpecError(path, "expected a top-level object")
    schema = _require(data, "schema", path)
    if schema != SCHEMA:
        raise SpecError(f"{path}.schema", f"expected {SCHEMA!r}, got {schema!r}")
    raw_ctx = _require(data, "context", path)
    p = _as_int(_require(raw_ctx, "p", f"{path}.context"), f"{path}.context.p")
    n = _as_int(_require(raw_ctx, "n", f"{path}.context"), f"{path}.context.n")
    try:
        context = Context(p, n)
    except ValueError as exc:
        raise SpecError(f"{path}.context", str(exc))
    seed = _as_int(data.get("seed", 0), f"{path}.seed")
    policy, window_pad = _parse_policy(data.get("policy"), f"{path}.policy")
    functions = []
    raw_functions = data.get("functions", {})
    if not isinstance(raw_functions, Mapping):
        raise SpecError(f"{path}.functions", "expected an object of named functions")
    # named collections are kept name-sorted so that load -> serialize ->
    # load is the identity
    for name in sorted(raw_functions):
        functions.append(
            (name, _parse_function(raw_functions[name], context, f"{path}.functions.{name}"))
        )
    kernel = None
    if data.get("kernel") is not None:
        kernel = _parse_kernel(data["kernel"], context, f"{path}.kernel")
    weights = []
    raw_weights = data.get("weights", {})
    for name in sorted(raw_weights):
        weights.append(
            (name, _parse_weight(raw_weights[name], tuple(functions), context,
                                 f"{path}.weights.{name}"))
        )
    spec = ExperimentSpec(
        context=context, seed=seed, policy=policy, window_pad=window_pad,
        kernel=kernel, functions=tuple(functions), weights=tuple(weights),
        symbols=(), tasks=(),
    )
    symbols = []
    raw_symbols = data.get("symbols", {})
    for name in sorted(raw_symbols):
        symbols.append(
            (name, _parse_symbols(raw_symbols[name], spec, f"{path}.symbols.{name}"))
        )
    spec = ExperimentSpec(
        context=context, seed=seed, policy=policy, window_pad=window_pad,
        kernel=kernel, functions=tuple(functions), weights=tuple(weights),
        symbols=tuple(symbols), tasks=(),
    )
    raw_tasks = _require(data, "tasks", path)
    if not isinstance(raw_tasks, list):
        raise SpecError(f"{path}.tasks", "expected a list")
    tasks = []
    seen_ids = set()
    for i, task in enumerate(raw_tasks):
        checked = _validate_task(task, spec, f"{path}.tasks[{i}]")
        if checked["id"] in seen_ids:
            raise SpecError(f"{path}.tasks[{i}].id", f"duplicate task id {checked['id']!r}")
        seen_ids.add(checked["id"])
        tasks.append(checked)
    return ExperimentSpec(
        context=context, seed=seed, policy=policy, window_pad=window_pad,
        kernel=kernel, functions=tuple(functions), weights=tuple(weights),
        symbols=tuple(symbols), tasks=tuple(tasks),
    )


def load_spec(path: Union[str, Path]) -> ExperimentSpec:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise SpecError(str(path), f"cannot read spec file: {exc}")
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SpecError(
            f"{path}:{exc.lineno}:{exc.colno}", f"parse error: {exc.msg}"
        )
    return load_spec_dict(data)


# --------------------------------------------------------------------------
# serialization back to the file format


def _ball_to_json(ball: Ball) -> dict:
    return {
        "gamma": ball.gamma,
        "center": [render_rational(c) for c in ball.center],
    }


def function_to_json(f: StepFunction) -> dict:
    return {
        "cells": [
            {**_ball_to_json(ball), "value": render_rational(v)}
            for ball, v in f.cells
        ]
    }


def _weight_to_json(w: BallWeight, functions) -> dict:
    if isinstance(w, PowerWeight):
        return {"kind": "power", "lam": render_rational(Fraction(w.lam))}
    if isinstance(w, StepIntegralWeight):
        for name, f in functions:
            if f == w.density:
                return {"kind": "step_integral", "density": name}
        raise ValueError("step-integral density is not a named function")
    if isinstance(w, TabulatedWeight):
        return {
            "kind": "tabulated",
            "entries": [
                {"gamma": key[0],
                 "center": [render_rational(c) for c in key[1]],
                 "value": render_rational(Fraction(value))}
                for key, value in w.entries
            ],
        }
    raise TypeError(f"unsupported weight {w!r}")


def spec_to_dict(spec: ExperimentSpec) -> dict:
    out: dict[str, Any] = {
        "schema": SCHEMA,
        "context": {"p": spec.context.p, "n": spec.context.n},
        "seed": spec.seed,
        "policy": {
            "window": (
                None
                if spec.policy.gamma_lo is None and spec.policy.gamma_hi is None
                else [spec.policy.gamma_lo, spec.policy.gamma_hi]
            ),
            "tail_mode": spec.policy.tail_mode,
            "float_rel_tol": spec.policy.float_rel_tol,
            "window_pad": spec.window_pad,
        },
        "tasks": list(spec.tasks),
    }
    if spec.kernel is not None:
        out["kernel"] = {
            "level": spec.kernel.level,
            "cells": [
                {"center": [render_rational(c) for c in ball.center],
                 "value": render_rational(v)}
                for ball, v in spec.kernel.cells
            ],
        }
    if spec.functions:
        out["functions"] = {
            name: function_to_json(f) for name, f in spec.functions
        }
    if spec.weights:
        out["weights"] = {
            name: _weight_to_json(w, spec.functions) for name, w in spec.weights
        }
    if spec.symbols:
        symbols = {}
        for name, s in spec.symbols:
            entry: dict[str, Any] = {
                "functions": [
                    next(fname for fname, f in spec.functions if f == fn)
                    for fn in s.symbols
                ]
            }
            if s.betas is not None:
                entry["betas"] = [render_rational(b) for b in s.betas]
            if s.campanato is not None:
                entry["campanato"] = [
                    {"q": render_rational(Fraction(q)),
                     "weight": next(wname for wname, w in spec.weights if w == weight)}
                    for q, weight in s.campanato
                ]
            symbols[name] = entry
        out["symbols"] = symbols
    return out


def canonical_dumps(data) -> str:
    return json.dumps(data, sort_keys=True, indent=2) + "\n"


def serialize_spec(spec: ExperimentSpec) -> str:
    return canonical_dumps(spec_to_dict(spec))


def spec_digest(spec: ExperimentSpec) -> str:
    return hashlib.sha256(serialize_spec(spec).encode()).hexdigest()


# --------------------------------------------------------------------------
# task execution


def _norm_report_json(report: NormReport) -> dict:
    return {
        "value": render_float(report.value),
        "attaining_ball": (
            None if report.attaining_ball is None else _ball_to_json(report.attaining_ball)
        ),
        "window": list(report.window),
        "tail": {
            "kind": report.tail.kind,
            "description": report.tail.description,
            "bound": None if report.tail.bound is None else render_float(report.tail.bound),
            "covered": report.tail.covered,
        },
        "vacuous": report.vacuous,
        "candidate_exact": report.candidate_exact,
    }


def _condition_report_json(report: ConditionReport) -> dict:
    return {
        "status": report.status,
        "value": None if report.value is None else render_float(report.value),
        "value_from_next": (
            None if report.value_from_next is None else render_float(report.value_from_next)
        ),
        "uniform": report.uniform,
        "detail": report.detail,
        "exact_value": (
            None if report.exact_value is None else render_rational(report.exact_value)
        ),
    }


def _experiment_report_json(report: ExperimentReport) -> dict:
    return {
        "label": report.label,
        "operator": report.operator,
        "q": render_rational(report.q),
        "r": render_rational(report.r),
        "seed": report.seed,
        "size": report.size,
        "conditions": [
            [name, _condition_report_json(rep)] for name, rep in report.conditions
        ],
        "hypothesis_ok": report.hypothesis_ok,
        "hypothesis_note": report.hypothesis_note,
        "c_emp": None if report.c_emp is None else render_float(report.c_emp),
        "attaining": None if report.attaining is None else list(report.attaining),
        "all_ratios_finite": report.all_ratios_finite,
        "note": report.note,
        "rows": [
            {
                "instance": row.instance,
                "k": row.k_label,
                "input_digest": row.input_digest,
                "source_norm": render_float(row.source_norm),
                "target_norm": render_float(row.target_norm),
                "ratio": None if row.ratio is None else render_float(row.ratio),
                "skipped": row.skipped,
                "note": row.note,
            }
            for row in report.rows
        ],
    }


def _suite_report_json(report: SuiteReport) -> dict:
    good, total = report.counts()
    return {
        "name": report.name,
        "passed": report.all_passed,
        "rows_passed": good,
        "rows_total": total,
        "rows": [
            {
                "instance": row.instance,
                "label": row.label,
                "lhs": render_float(row.lhs),
                "rhs": render_float(row.rhs),
                "passed": row.passed,
                "detail": row.detail,
            }
            for row in report.rows
        ],
    }


CSV_HEADER = "task_id,instance_id,input_digest,value,ratio,passed"


def _csv_escape(text: str) -> str:
    if any(c in text for c in ",\"\n"):
        return '"' + text.replace('"', '""') + '"'
    return text


def _csv_line(*fields) -> str:
    return ",".join(_csv_escape(str(f)) for f in fields)


@dataclass
class TaskOutcome:
    task_id: str
    kind: str
    result: dict
    csv_rows: list[str]
    passed: Optional[bool] = None  # None: not a pass/fail task
    indeterminate: bool = False


def _anchor_from_task(task, context: Context):
    anchor = task.get("anchor")
    if anchor is None:
        return 0, (Fraction(0),) * context.n
    gamma = anchor["gamma"]
    center = tuple(Fraction(c) for c in anchor["center"])
    return gamma, center


def execute_task(spec: ExperimentSpec, task: dict, seed: int, jobs: int) -> TaskOutcome:
    kind = task["kind"]
    task_id = task["id"]
    ctx = spec.context
    path = f"task {task_id!r}"
    if kind == "integrate":
        f = spec.function(task["function"], path)
        value = integrate(f)
        return TaskOutcome(
            task_id, kind,
            {"value": render_rational(value)},
            [_csv_line(task_id, 0, task["function"], render_rational(value), "", "")],
        )
    if kind == "apply":
        f = spec.function(task["function"], path)
        x = Point(ctx, tuple(Fraction(c) for c in task["point"]))
        op = task["operator"]
        if op == "Tk":
            value = apply_Tk(spec.kernel, task["k"], f, x)
            rendered = render_rational(value)
        elif op == "T":
            value = apply_T(spec.kernel, f, x)
            rendered = render_rational(value)
        elif op == "commutator":
            symbols = spec.symbol_set(task["symbols"], path)
            value = apply_commutator(spec.kernel, task["k"], symbols, f, x)
            rendered = render_rational(value)
        else:
            value = riesz(Fraction(task["alpha"]), f, x)
            rendered = render_float(value)
        return TaskOutcome(
            task_id, kind, {"operator": op, "value": rendered},
            [_csv_line(task_id, 0, task["function"], rendered, "", "")],
        )
    if kind == "norm":
        f = spec.function(task["function"], path)
        norm = task["norm"]
        if norm == "lq":
            value = lq_norm(f, Fraction(task["q"]))
            result = {"norm": norm, "value": render_float(value)}
            rendered = render_float(value)
        elif norm == "lip":
            value = lipschitz_norm(f, Fraction(task["beta"]))
            result = {"norm": norm, "value": render_float(value)}
            rendered = render_float(value)
        else:
            if norm == "gm":
                report = gm_norm(f, Fraction(task["q"]),
                                 spec.weight(task["weight"], path), spec.policy)
            elif norm == "gc":
                report = gc_norm(f, Fraction(task["q"]),
                                 spec.weight(task["weight"], path), spec.policy)
            elif norm == "cm":
                report = cm_norm(f, Fraction(task["q"]), Fraction(task["lam"]),
                                 spec.policy)
            else:
                report = cbmo_norm(f, Fraction(task["q"]), Fraction(task["lam"]),
                                   spec.policy)
            result = {"norm": norm, "report": _norm_report_json(report)}
            rendered = render_float(report.value)
        return TaskOutcome(
            task_id, kind, result,
            [_csv_line(task_id, 0, task["function"], rendered, "", "")],
        )
    if kind == "check":
        gamma, center = _anchor_from_task(task, ctx)
        nu_i = tuple(
            spec.weight(name, path) for name in task.get("nu_i", [])
        )
        condition = SeriesCondition(
            task["condition"], ctx,
            spec.weight(task["omega"], path), spec.weight(task["nu"], path),
            nu_i=nu_i,
            beta=(Fraction(task["beta"]) if "beta" in task else None),
            anchor_gamma=gamma, anchor_center=center,
        )
        policy = CheckPolicy(
            horizon=task.get("horizon", 32),
            asserted_tail_ratio=task.get("asserted_tail_ratio"),
        )
        report = check_series(condition, policy)
        rendered = f"{report.status}" + (
            f":{render_float(report.value)}" if report.value is not None else ""
        )
        return TaskOutcome(
            task_id, kind,
            {"condition": task["condition"], "report": _condition_report_json(report)},
            [_csv_line(task_id, 0, "", rendered, "", "")],
            indeterminate=(report.status == "indeterminate"),
        )
    # verify
    return _execute_verify_task(spec, task, seed, jobs)


def _execute_verify_task(spec: ExperimentSpec, task: dict, seed: int, jobs: int) -> TaskOutcome:
    suite = task["suite"]
    task_id = task["id"]
    ctx = spec.context
    count = task.get("count", 50)
    profile = _parse_profile(task.get("profile"), f"task {task_id!r}.profile")
    path = f"task {task_id!r}"
    if suite in ("thm31", "thm32", "thm33"):
        q = Fraction(task["q"])
        nu = spec.weight(task["nu"], path)
        omega = spec.weight(task["omega"], path)
        kwargs = dict(profile=profile, size=count, seed=seed,
                      window_pad=task.get("window_pad", spec.window_pad))
        if "k_cycle" in task:
            kwargs["k_cycle"] = tuple(task["k_cycle"])
        if suite == "thm31":
            experiment = singular_experiment(ctx, q, nu, omega, spec.kernel, **kwargs)
        elif suite == "thm32":
            symbols = spec.symbol_set(task["symbols"], path)
            experiment = lipschitz_commutator_experiment(
                ctx, q, symbols, nu, omega, spec.kernel, **kwargs
            )
        else:
            symbols = spec.symbol_set(task["symbols"], path)
            experiment = campanato_commutator_experiment(
                ctx, q, symbols, nu, omega, spec.kernel, **kwargs
            )
        report = run_ratio_experiment(experiment, jobs=jobs)
        rows = []
        for row in report.rows:
            value = f"source={render_float(row.source_norm)};target={render_float(row.target_norm)}"
            rows.append(_csv_line(
                task_id, f"{row.instance}:{row.k_label}", row.input_digest,
                value, "" if row.ratio is None else render_float(row.ratio),
                "skipped" if row.skipped else str(row.ratio is not None and math.isfinite(row.ratio)).lower(),
            ))
        passed = report.all_ratios_finite
        indeterminate = any(
            rep.status == "indeterminate" for _, rep in report.conditions
        )
        return TaskOutcome(
            task_id, "verify",
            {"suite": suite, "report": _experiment_report_json(report)},
            rows, passed=passed, indeterminate=indeterminate,
        )
    if suite == "lemma21":
        q = Fraction(task.get("q", "2"))
        gap = mean_gap_suite(ctx, count=count, seed=seed, q=q, profile=profile)
        shift = mean_shift_suite(ctx, count=count, seed=seed, q=q, profile=profile)
        reports = [gap, shift]
    else:  # tails
        tails = tail_bound_suite(ctx, count=count, seed=seed, profile=profile)
        domination = commutator_domination_suite(ctx, count=count, seed=seed, profile=profile)
        reports = [tails, domination]
    rows = []
    for rep in reports:
        for row in rep.rows:
            rows.append(_csv_line(
                task_id, f"{rep.name}:{row.instance}:{row.label}", "",
                f"lhs={render_float(row.lhs)};rhs={render_float(row.rhs)}",
                "", str(row.passed).lower(),
            ))
    passed = all(rep.all_passed for rep in reports)
    return TaskOutcome(
        task_id, "verify",
        {"suite": suite, "reports": [_suite_report_json(rep) for rep in reports]},
        rows, passed=passed,
    )


# --------------------------------------------------------------------------
# run driver


def run_spec(
    spec: ExperimentSpec,
    out_dir: Union[str, Path],
    seed: Optional[int] = None,
    jobs: int = 1,
    strict: bool = False,
) -> tuple[int, list[str]]:
    """Execute every task, write report.json and tables/*.csv, and return
    (exit code, failing task ids)."""
    started = perf_counter()
    effective_seed = spec.seed if seed is None else seed
    out_path = Path(out_dir)
    tables = out_path / "tables"
    tables.mkdir(parents=True, exist_ok=True)
    outcomes = [
        execute_task(spec, task, effective_seed, jobs) for task in spec.tasks
    ]
    failing = []
    for outcome in outcomes:
        if outcome.passed is False:
            failing.append(outcome.task_id)
        elif strict and outcome.indeterminate:
            failing.append(outcome.task_id)
    elapsed = perf_counter() - started
    report = {
        "schema": SCHEMA,
        "provenance": {
            "seed": effective_seed,
            "config_sha256": spec_digest(spec),
            "package_version": __version__,
        },
        "timestamp": (
            datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")
            + f" elapsed={elapsed:.3f}s"
        ),
        "strict": strict,
        "tasks": [
            {
                "task_id": outcome.task_id,
                "kind": outcome.kind,
                "passed": outcome.passed,
                "indeterminate": outcome.indeterminate,
                "result": outcome.result,
            }
            for outcome in outcomes
        ],
        "failing_tasks": failing,
    }
    (out_path / "report.json").write_text(canonical_dumps(report))
    for outcome in outcomes:
        lines = [CSV_HEADER] + outcome.csv_rows
        (tables / f"{outcome.task_id}.csv").write_text("\n".join(lines) + "\n")
    return (1 if failing else 0), failing
