"""Explicit extractors for bit-fixing sources.

``cycle_walk_extract`` sums the input bits modulo ``2**m``: a walk on the
cycle Z_M that adds 1 or 0 per bit.  ``plusminus_cycle_extract`` is the
older +1/-1 walk on an odd cycle, kept only for comparison.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .core import BitString, TruthTableFunction, all_inputs, popcount
from .dyadic import DyadicRational


class InfeasibleParameters(ValueError):
    pass


def _bits(w) -> BitString:
    if isinstance(w, BitString):
        return w
    if isinstance(w, str):
        return BitString.from_str(w)
    return BitString(tuple(w))


def cycle_walk_extract(w, m: int) -> BitString:
    """The m-bit encoding of the number of ones in ``w``, modulo 2**m."""
    w = _bits(w)
    if not 1 <= m <= w.length:
        raise ValueError(f"need 1 <= m <= {w.length}, got m={m}")
    return BitString.from_int(w.weight % (1 << m), m)


def parity(w) -> BitString:
    w = _bits(w)
    return BitString((w.weight & 1,))


def plusminus_cycle_extract(w, cycle_size: int) -> int:
    """Endpoint of the walk on Z_cycle_size stepping +1 on a 1 bit and -1 on a 0 bit.

    Even cycles are refused: the walk is bipartite there and the endpoint's
    parity is determined by n.
    """
    if cycle_size < 3 or cycle_size % 2 == 0:
        raise ValueError(f"cycle_size must be odd and >= 3, got {cycle_size}")
    w = _bits(w)
    ones = w.weight
    return (ones - (w.length - ones)) % cycle_size


def cycle_walk_table(n: int, m: int) -> TruthTableFunction:
    if not 1 <= m <= n:
        raise ValueError(f"need 1 <= m <= n, got m={m}, n={n}")
    weights = popcount(all_inputs(n)).astype(np.int64)
    return TruthTableFunction(n, m, weights % (1 << m))


def parity_table(n: int) -> TruthTableFunction:
    return TruthTableFunction(n, 1, popcount(all_inputs(n)).astype(np.int64) & 1)


def plusminus_cycle_table(n: int, cycle_size: int) -> TruthTableFunction:
    """The +/-1 walk endpoint as an m-bit table, m = ceil(log2(cycle_size))."""
    if cycle_size < 3 or cycle_size % 2 == 0:
        raise ValueError(f"cycle_size must be odd and >= 3, got {cycle_size}")
    ones = popcount(all_inputs(n)).astype(np.int64)
    m = (cycle_size - 1).bit_length()
    return TruthTableFunction(n, m, (2 * ones - n) % cycle_size)


def constant_table(n: int, m: int, value: int = 0) -> TruthTableFunction:
    return TruthTableFunction(n, m, np.full(1 << n, value, dtype=np.int64))


def dictator_table(n: int, position: int = 1) -> TruthTableFunction:
    """f(x) = x_position."""
    return TruthTableFunction(n, 1, (all_inputs(n) >> (n - position)) & 1)


@dataclass(frozen=True)
class CycleWalkParams:
    k: int
    epsilon: object
    m: int

    @property
    def M(self) -> int:
        return 1 << self.m

    def __post_init__(self):
        if self.m < 1:
            raise InfeasibleParameters(f"output length m={self.m} < 1")
        if self.k < self.M**2:
            raise InfeasibleParameters(f"k={self.k} < M^2={self.M ** 2}")


def _log2_inverse(epsilon) -> tuple[int | None, float]:
    """(exact integer log2(1/eps) if eps is a power of two, float log2(1/eps))."""
    if isinstance(epsilon, DyadicRational):
        epsilon = epsilon.as_fraction()
    if isinstance(epsilon, float):
        if not math.isfinite(epsilon):
            raise InfeasibleParameters(f"epsilon={epsilon} is not finite")
        frac = Fraction(epsilon)
    else:
        frac = Fraction(epsilon)
    if not 0 < frac < Fraction(1, 2):
        raise InfeasibleParameters(f"need 0 < epsilon < 1/2, got {epsilon}")
    if frac.numerator == 1 and frac.denominator & (frac.denominator - 1) == 0:
        e = frac.denominator.bit_length() - 1
        return e, float(e)
    return None, -math.log2(frac)


def params_for(k: int, epsilon) -> CycleWalkParams:
    """Largest m with m <= (log2 k - log2 log2(1/eps)) / 2, i.e. 4**m * log2(1/eps) <= k."""
    if k < 1:
        raise InfeasibleParameters(f"k must be positive, got {k}")
    exact, approx = _log2_inverse(epsilon)
    m = 0
    if exact is not None:
        while (4 ** (m + 1)) * exact <= k:
            m += 1
    else:
        while (4 ** (m + 1)) * approx <= k:
            m += 1
    if m < 1:
        raise InfeasibleParameters(
            f"k={k}, epsilon={epsilon} gives output length < 1 bit"
        )
    return CycleWalkParams(k=k, epsilon=epsilon, m=m)


def extract(construction: str, bits: BitString, m: int | None = None):
    """Dispatch by name: 'cycle', 'parity' or 'pm-cycle'.

    For 'pm-cycle' the argument ``m`` is the (odd) cycle size.
    """
    if construction == "cycle":
        if m is None:
            raise ValueError("cycle construction needs m")
        return cycle_walk_extract(bits, m)
    if construction == "parity":
        return parity(bits)
    if construction == "pm-cycle":
        if m is None:
            raise ValueError("pm-cycle construction needs the cycle size")
        return plusminus_cycle_extract(bits, m)
    raise ValueError(f"unknown construction {construction!r}")

