"""Extended-precision real arithmetic for the few places exactness is
impossible (q-th roots, p**x with irrational x).

All real-valued pipelines run under a fixed 40-digit working precision
(about 133 bits) and round to a Python float only at API boundaries, so the
1e-12 relative targets are met with a wide margin and results are
deterministic for a fixed summation order.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Union

import mpmath

WORKING_DPS = 40


def working_precision():
    """Context manager installing the working precision."""
    return mpmath.workdps(WORKING_DPS)


def real_of(x: Union[int, float, Fraction, mpmath.mpf]) -> mpmath.mpf:
    """Lossless-as-possible conversion to mpf at the current precision."""
    if isinstance(x, Fraction):
        return mpmath.mpf(x.numerator) / x.denominator
    return mpmath.mpf(x)


def p_power_real(p: int, exponent) -> mpmath.mpf:
    return mpmath.power(p, real_of(exponent))


def qth_root(x, q) -> mpmath.mpf:
    return mpmath.power(real_of(x), 1 / real_of(q))


def as_float(x) -> float:
    return float(x)
