"""Exact rational helpers shared by every module.

All numbers in this package are :class:`fractions.Fraction`.  Floats are
rejected on input because a float has already lost the value the caller
meant to write.
"""
from __future__ import annotations

from fractions import Fraction
from math import gcd
from typing import Iterable, Sequence

Vector = tuple  # tuple[Fraction, ...]

ZERO = Fraction(0)
ONE = Fraction(1)


def frac(value) -> Fraction:
    """Coerce ``value`` to an exact Fraction.

    Accepts ints, Fractions and strings such as ``"3"``, ``"-2/7"``.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise TypeError("booleans are not rationals")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value.strip())
    raise TypeError(f"cannot convert {type(value).__name__} {value!r} to an exact rational")


def vec(values: Iterable) -> tuple:
    return tuple(frac(v) for v in values)


def dot(a: Sequence[Fraction], b: Sequence[Fraction]) -> Fraction:
    return sum((x * y for x, y in zip(a, b) if x and y), ZERO)


def fmt(q: Fraction) -> str:
    """Serialize as ``"p/q"`` (``"p"`` when the denominator is 1)."""
    q = frac(q)
    if q.denominator == 1:
        return str(q.numerator)
    return f"{q.numerator}/{q.denominator}"


def fmt_vec(v: Iterable[Fraction]) -> list:
    return [fmt(x) for x in v]


def primitive(coeffs: Sequence[Fraction], offset: Fraction) -> tuple:
    """Scale ``(coeffs, offset)`` by a positive factor to coprime integers.

    Positive scaling keeps the half-space ``coeffs . x <= offset`` unchanged,
    so two rows describing the same half-space normalise identically.
    """
    values = list(coeffs) + [offset]
    lcm = 1
    for v in values:
        d = v.denominator
        lcm = lcm * d // gcd(lcm, d)
    ints = [int(v * lcm) for v in values]
    g = 0
    for i in ints:
        g = gcd(g, abs(i))
    if g == 0:
        return tuple(ZERO for _ in coeffs), ZERO
    return tuple(Fraction(i // g) for i in ints[:-1]), Fraction(ints[-1] // g)
