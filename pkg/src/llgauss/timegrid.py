"""Exact time lattices.

Sample times, lags and volatility breakpoints in this package are usually
constructed (``i * h``, ``k * 1e-3``), so they are commensurate even though
their float representations are not. Mapping them onto a common integer
lattice lets overlap tests and grid alignment be decided exactly instead of
with a floating-point epsilon.
"""

from __future__ import annotations

from fractions import Fraction
from math import gcd
from typing import Iterable

import numpy as np

MAX_DENOMINATOR = 10**9
REL_TOL = 1e-9
# ticks must stay exactly representable as float64
MAX_TICKS = 2**52


def rational(x: float, max_den: int = MAX_DENOMINATOR) -> Fraction | None:
    """Closest fraction with bounded denominator, or None if ``x`` is not one."""
    if not np.isfinite(x):
        return None
    f = Fraction(float(x)).limit_denominator(max_den)
    if abs(float(f) - x) > REL_TOL * max(1.0, abs(x)):
        return None
    return f


def fraction_gcd(a: Fraction, b: Fraction) -> Fraction:
    if a == 0:
        return abs(b)
    if b == 0:
        return abs(a)
    num = gcd(a.numerator * b.denominator, b.numerator * a.denominator)
    return Fraction(num, a.denominator * b.denominator)


def _fits(values: np.ndarray, step: Fraction) -> bool:
    if values.size == 0:
        return True
    s = float(step)
    k = np.rint(values / s)
    if np.max(np.abs(k)) > MAX_TICKS:
        return False
    err = np.abs(k * s - values)
    return bool(np.all(err <= REL_TOL * np.maximum(1.0, np.abs(values))))


def common_step(arrays: Iterable, hints: Iterable = ()) -> Fraction | None:
    """Largest lattice step of which every value is an integer multiple.

    ``hints`` are known generating steps (sampling step, lag step). When they
    are supplied, the candidate is their rational gcd and only a vectorised
    check runs; otherwise each distinct value is rationalised. Returns None
    when the values are not commensurate at denominators up to 1e9.
    """
    vals = [np.asarray(a, dtype=float).ravel() for a in arrays]
    allv = np.concatenate(vals) if vals else np.empty(0)
    allv = allv[allv != 0.0]
    step = Fraction(0)
    for h in hints:
        if h is None:
            continue
        f = h if isinstance(h, Fraction) else rational(float(h))
        if f is None:
            step = Fraction(0)
            break
        step = fraction_gcd(step, f)
    if step > 0 and _fits(allv, step):
        return step
    step = Fraction(0)
    for x in np.unique(np.abs(allv)):
        f = rational(float(x))
        if f is None:
            return None
        step = fraction_gcd(step, f)
        if step.denominator > MAX_DENOMINATOR:
            return None
    if step == 0:
        return Fraction(1)
    return step if _fits(allv, step) else None


def to_ticks(values, step: Fraction) -> np.ndarray:
    """Integer lattice coordinates of ``values``; caller guarantees alignment."""
    return np.rint(np.asarray(values, dtype=float) / float(step)).astype(np.int64)
