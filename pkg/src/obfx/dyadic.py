"""Exact dyadic rationals ``numerator / 2**log2_denominator``.

Every probability that arises from uniform bits has a power-of-two
denominator, so verifier arithmetic never needs rounding.
"""

from __future__ import annotations

import functools
import sys
from fractions import Fraction
from numbers import Rational

import mpmath
from mpmath.libmp import from_man_exp, round_nearest


def _trailing_zeros(x: int) -> int:
    return (x & -x).bit_length() - 1


@functools.total_ordering
class DyadicRational:
    """An exact number of the form ``numerator / 2**log2_denominator``.

    Instances are immutable and kept canonical: the numerator is odd unless
    it is zero or the exponent is zero.
    """

    __slots__ = ("numerator", "log2_denominator")

    def __init__(self, numerator: int = 0, log2_denominator: int = 0):
        numerator = int(numerator)
        log2_denominator = int(log2_denominator)
        if log2_denominator < 0:
            numerator <<= -log2_denominator
            log2_denominator = 0
        if numerator == 0:
            log2_denominator = 0
        elif log2_denominator:
            shift = min(_trailing_zeros(numerator), log2_denominator)
            numerator >>= shift
            log2_denominator -= shift
        object.__setattr__(self, "numerator", numerator)
        object.__setattr__(self, "log2_denominator", log2_denominator)

    def __setattr__(self, name, value):
        raise AttributeError("DyadicRational is immutable")

    def __reduce__(self):
        return (DyadicRational, (self.numerator, self.log2_denominator))

    @classmethod
    def coerce(cls, value) -> DyadicRational:
        """Convert ints, dyadic Fractions and finite floats exactly.

        Raises ValueError if ``value`` has a denominator that is not a power of two.
        """
        if isinstance(value, DyadicRational):
            return value
        if isinstance(value, float):
            value = Fraction(value)
        if isinstance(value, str):
            value = Fraction(value)
        if isinstance(value, Rational):
            den = value.denominator
            if den & (den - 1):
                raise ValueError(f"{value} is not dyadic")
            return cls(value.numerator, den.bit_length() - 1)
        raise TypeError(f"cannot convert {type(value).__name__} to DyadicRational")

    @property
    def denominator(self) -> int:
        return 1 << self.log2_denominator

    def as_fraction(self) -> Fraction:
        return Fraction(self.numerator, self.denominator)

    def half(self) -> DyadicRational:
        return DyadicRational(self.numerator, self.log2_denominator + 1)

    def _aligned(self, other: DyadicRational):
        d = max(self.log2_denominator, other.log2_denominator)
        return (
            self.numerator << (d - self.log2_denominator),
            other.numerator << (d - other.log2_denominator),
            d,
        )

    def __add__(self, other):
        try:
            other = DyadicRational.coerce(other)
        except (TypeError, ValueError):
            return NotImplemented
        a, b, d = self._aligned(other)
        return DyadicRational(a + b, d)

    __radd__ = __add__

    def __sub__(self, other):
        try:
            other = DyadicRational.coerce(other)
        except (TypeError, ValueError):
            return NotImplemented
        a, b, d = self._aligned(other)
        return DyadicRational(a - b, d)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        try:
            other = DyadicRational.coerce(other)
        except (TypeError, ValueError):
            return NotImplemented
        return DyadicRational(
            self.numerator * other.numerator,
            self.log2_denominator + other.log2_denominator,
        )

    __rmul__ = __mul__

    def __neg__(self):
        return DyadicRational(-self.numerator, self.log2_denominator)

    def __abs__(self):
        return DyadicRational(abs(self.numerator), self.log2_denominator)

    def __bool__(self):
        return self.numerator != 0

    def __eq__(self, other):
        if isinstance(other, DyadicRational):
            return (self.numerator, self.log2_denominator) == (
                other.numerator,
                other.log2_denominator,
            )
        if isinstance(other, float):
            other = Fraction(other)
        if isinstance(other, Rational):
            # cross-multiply; building a Fraction would run gcd on huge numerators
            return self.numerator * other.denominator == other.numerator << self.log2_denominator
        return NotImplemented

    def __lt__(self, other):
        if isinstance(other, DyadicRational):
            a, b, _ = self._aligned(other)
            return a < b
        if isinstance(other, float):
            other = Fraction(other)
        if isinstance(other, Rational):
            return self.numerator * other.denominator < other.numerator << self.log2_denominator
        return NotImplemented

    def __hash__(self):
        # same value as hash(Fraction(...)) without normalising a huge numerator
        P = sys.hash_info.modulus
        h = hash(hash(abs(self.numerator)) * pow(2, -self.log2_denominator, P))
        h = h if self.numerator >= 0 else -h
        return -2 if h == -1 else h

    def __float__(self):
        return float(self.as_fraction())

    def __repr__(self):
        return f"DyadicRational({self.numerator}, {self.log2_denominator})"

    def __str__(self):
        num = str(self.numerator) if self.numerator.bit_length() < 12000 else hex(self.numerator)
        if self.log2_denominator == 0:
            return num
        return f"{num}/2^{self.log2_denominator}"

    def to_json(self) -> dict:
        """Exact and decimal renderings, for machine-readable reports."""
        return {"exact": str(self), "decimal": format_decimal(self)}


ZERO = DyadicRational(0)
ONE = DyadicRational(1)


def format_decimal(value, digits: int = 12) -> str:
    """Render an exact value with ``digits`` significant digits.

    Goes through a binary float with unbounded exponent, so values far
    below the double range (say 2**-7000) still print.
    """
    prec = 4 * digits + 16
    if isinstance(value, (Fraction, int)) and not isinstance(value, bool):
        value = Fraction(value)
        if value.denominator & (value.denominator - 1):
            with mpmath.workprec(prec):
                return mpmath.nstr(mpmath.mpf(value.numerator) / value.denominator, digits)
    value = DyadicRational.coerce(value)
    if not value:
        return "0"
    man = from_man_exp(value.numerator, -value.log2_denominator, prec, round_nearest)
    return mpmath.nstr(mpmath.mpf(man), digits)
