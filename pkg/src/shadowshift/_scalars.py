"""Scalar plumbing shared by every module.

Two arithmetic modes coexist.  When every input is a :class:`~fractions.Fraction`
all products, sums and comparisons stay exact; as soon as a binary float or a
complex number enters, everything is promoted to ``float``/``complex``.
"""

from __future__ import annotations

import math
from fractions import Fraction
from numbers import Number
from typing import Iterable, Union

Scalar = Union[Fraction, float, complex]

DEFAULT_RTOL = 1e-12


class ScalarParseError(ValueError):
    pass


def parse_scalar(raw, exact: bool = False) -> Scalar:
    """Read one JSON scalar: int, float, ``"p/q"`` string, or ``[re, im]`` pair."""
    if isinstance(raw, bool):
        raise ScalarParseError(f"booleans are not scalars: {raw!r}")
    if isinstance(raw, Fraction):
        return raw
    if isinstance(raw, int):
        return Fraction(raw)
    if isinstance(raw, float):
        if not math.isfinite(raw):
            raise ScalarParseError(f"non-finite scalar {raw!r}")
        return Fraction(repr(raw)) if exact else raw
    if isinstance(raw, str):
        try:
            return Fraction(raw.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise ScalarParseError(f"cannot read rational {raw!r}") from exc
    if isinstance(raw, complex):
        return raw
    if isinstance(raw, (list, tuple)) and len(raw) == 2:
        re, im = (parse_scalar(part, exact) for part in raw)
        if isinstance(re, complex) or isinstance(im, complex):
            raise ScalarParseError(f"nested complex pair {raw!r}")
        return complex(float(re), float(im))
    raise ScalarParseError(f"unsupported scalar {raw!r}")


def unify(values: Iterable[Scalar]) -> tuple:
    """Promote a collection to a common type (Fraction < float < complex)."""
    values = tuple(values)
    if any(isinstance(v, complex) for v in values):
        return tuple(complex(v) for v in values)
    if all(isinstance(v, (Fraction, int)) and not isinstance(v, bool) for v in values):
        return tuple(Fraction(v) for v in values)
    return tuple(float(v) for v in values)


def is_exact(x) -> bool:
    return isinstance(x, (Fraction, int)) and not isinstance(x, bool)


def one_like(x: Scalar) -> Scalar:
    if is_exact(x):
        return Fraction(1)
    return complex(1) if isinstance(x, complex) else 1.0


def zero_like(x: Scalar) -> Scalar:
    if is_exact(x):
        return Fraction(0)
    return complex(0) if isinstance(x, complex) else 0.0


def unit_phase(p: Scalar) -> Scalar:
    """Return u with |u| = 1 and u * p = |p| (the conjugate phase of p)."""
    if p == 0:
        raise ZeroDivisionError("phase of zero is undefined")
    if isinstance(p, complex):
        return p.conjugate() / abs(p)
    if is_exact(p):
        return Fraction(1) if p > 0 else Fraction(-1)
    return 1.0 if p > 0 else -1.0


def _iroot(k: int, n: int) -> int:
    """Floor of the n-th root of a nonnegative integer."""
    if k < 2:
        return k
    hi = 1 << (k.bit_length() // n + 1)
    lo = 0
    while lo < hi:
        mid = (lo + hi + 1) // 2
        if mid ** n <= k:
            lo = mid
        else:
            hi = mid - 1
    return lo


def nth_root(q, n: int):
    """Nonnegative n-th root; exact Fraction when q is a perfect n-th power."""
    if n < 1:
        raise ValueError("root order must be positive")
    if is_exact(q):
        q = Fraction(q)
        if q < 0:
            raise ValueError("negative radicand")
        if n == 1:
            return q
        a, b = _iroot(q.numerator, n), _iroot(q.denominator, n)
        if a ** n == q.numerator and b ** n == q.denominator:
            return Fraction(a, b)
        return math.exp((math.log(q.numerator) - math.log(q.denominator)) / n)
    q = float(q)
    if q == 0:
        return 0.0
    return math.exp(math.log(q) / n)


def log_abs(x) -> float:
    """log|x| that survives huge exact rationals."""
    if is_exact(x):
        x = abs(Fraction(x))
        return math.log(x.numerator) - math.log(x.denominator)
    return math.log(abs(x))


def sign_vs_one(value, exact: bool, rtol: float = DEFAULT_RTOL) -> int:
    """-1, 0, +1 according to value < 1, value == 1 (within rtol in float mode), value > 1."""
    if exact:
        return (value > 1) - (value < 1)
    if abs(float(value) - 1.0) <= rtol:
        return 0
    return 1 if value > 1 else -1


def to_json_scalar(x):
    if isinstance(x, complex):
        return [x.real, x.imag]
    if is_exact(x):
        x = Fraction(x)
        return x.numerator if x.denominator == 1 else f"{x.numerator}/{x.denominator}"
    if isinstance(x, Number):
        return float(x)
    raise TypeError(f"not a scalar: {x!r}")


def to_float(x) -> float:
    """Real-valued quantity to float; infinity passes through."""
    return float(x)
