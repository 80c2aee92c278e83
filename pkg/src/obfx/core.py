"""Bit strings, bit-fixing sources, truth tables and exact output distributions.

Conventions used throughout the package:

* Input positions are numbered ``1..n`` in every public interface.
* An n-bit string ``b_1 ... b_n`` is identified with the integer whose
  binary expansion it is, most significant bit first, so position ``i``
  lives at bit ``n - i`` of the integer.  A truth table is indexed by that
  integer, and its ``(2,) * n`` reshape has axis ``i - 1`` for position ``i``.
* Output strings of ``m`` bits are likewise stored as integers in ``[0, 2**m)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import comb
from typing import Iterator, Sequence

import numpy as np

from .dyadic import ONE, ZERO, DyadicRational


class DimensionError(ValueError):
    """Operands have incompatible lengths or output widths."""


# ---------------------------------------------------------------------------
# bit strings


@dataclass(frozen=True)
class BitString:
    bits: tuple[int, ...]

    def __post_init__(self):
        bits = tuple(int(b) for b in self.bits)
        if not bits:
            raise ValueError("a BitString needs at least one bit")
        if any(b not in (0, 1) for b in bits):
            raise ValueError(f"bits must be 0 or 1, got {self.bits!r}")
        object.__setattr__(self, "bits", bits)

    @classmethod
    def from_str(cls, s: str) -> BitString:
        return cls(tuple(int(c) for c in s.strip()))

    @classmethod
    def from_int(cls, value: int, n: int) -> BitString:
        if not 0 <= value < (1 << n):
            raise ValueError(f"{value} does not fit in {n} bits")
        return cls(tuple((value >> (n - 1 - i)) & 1 for i in range(n)))

    @property
    def length(self) -> int:
        return len(self.bits)

    def __len__(self):
        return len(self.bits)

    def __iter__(self):
        return iter(self.bits)

    def bit(self, position: int) -> int:
        """The bit at 1-indexed ``position``."""
        if not 1 <= position <= len(self.bits):
            raise IndexError(position)
        return self.bits[position - 1]

    def to_int(self) -> int:
        value = 0
        for b in self.bits:
            value = (value << 1) | b
        return value

    @property
    def weight(self) -> int:
        """Hamming weight."""
        return sum(self.bits)

    def __str__(self):
        return "".join(map(str, self.bits))


def as_int(w, n: int | None = None) -> int:
    """Accept a BitString, a '0101' string or an int and return the integer."""
    if isinstance(w, BitString):
        if n is not None and w.length != n:
            raise DimensionError(f"expected {n} bits, got {w.length}")
        return w.to_int()
    if isinstance(w, str):
        return as_int(BitString.from_str(w), n)
    w = int(w)
    if n is not None and not 0 <= w < (1 << n):
        raise DimensionError(f"{w} does not fit in {n} bits")
    return w


# ---------------------------------------------------------------------------
# oblivious bit-fixing sources


@dataclass(frozen=True)
class ObfsSource:
    """The source with positions ``fixed_positions`` set to ``fixed_values``.

    The remaining ``k = n - len(fixed_positions)`` bits are independent fair
    coins.  Fully fixed sources (k = 0) are rejected.
    """

    n: int
    fixed_positions: tuple[int, ...] = ()
    fixed_values: tuple[int, ...] = ()

    def __post_init__(self):
        pos = tuple(int(p) for p in self.fixed_positions)
        vals = tuple(int(v) for v in self.fixed_values)
        if len(pos) != len(vals):
            raise ValueError("fixed_positions and fixed_values differ in length")
        if len(set(pos)) != len(pos):
            raise ValueError("fixed positions must be distinct")
        if any(not 1 <= p <= self.n for p in pos):
            raise ValueError(f"fixed positions must lie in [1, {self.n}]")
        if any(v not in (0, 1) for v in vals):
            raise ValueError("fixed values must be bits")
        if len(pos) >= self.n:
            raise ValueError("a source must leave at least one bit free (k >= 1)")
        order = sorted(range(len(pos)), key=pos.__getitem__)
        object.__setattr__(self, "fixed_positions", tuple(pos[i] for i in order))
        object.__setattr__(self, "fixed_values", tuple(vals[i] for i in order))

    @classmethod
    def from_masks(cls, n: int, fixed_mask: int, fixed_value: int) -> ObfsSource:
        """Build from integer masks in the package's MSB-first convention."""
        pos = [p for p in range(1, n + 1) if fixed_mask >> (n - p) & 1]
        vals = [fixed_value >> (n - p) & 1 for p in pos]
        return cls(n, tuple(pos), tuple(vals))

    @property
    def k(self) -> int:
        return self.n - len(self.fixed_positions)

    @property
    def free_positions(self) -> tuple[int, ...]:
        fixed = set(self.fixed_positions)
        return tuple(p for p in range(1, self.n + 1) if p not in fixed)

    @property
    def fixed_mask(self) -> int:
        return sum(1 << (self.n - p) for p in self.fixed_positions)

    @property
    def fixed_value(self) -> int:
        return sum(v << (self.n - p) for p, v in zip(self.fixed_positions, self.fixed_values))

    def completions(self) -> Iterator[int]:
        """All 2**k inputs in the support, ordered by the free bits read as a number."""
        base = self.fixed_value
        shifts = [self.n - p for p in self.free_positions]
        k = len(shifts)
        for r in range(1 << k):
            x = base
            for j, s in enumerate(shifts):
                if r >> (k - 1 - j) & 1:
                    x |= 1 << s
            yield x

    def completions_array(self) -> np.ndarray:
        """Same as :meth:`completions`, vectorised; requires ``n <= 64``."""
        if self.n > 64:
            raise ValueError("completions_array needs n <= 64")
        k = self.k
        r = np.arange(1 << k, dtype=np.uint64)
        x = np.full(1 << k, self.fixed_value, dtype=np.uint64)
        for j, p in enumerate(self.free_positions):
            bit = (r >> np.uint64(k - 1 - j)) & np.uint64(1)
            x |= bit << np.uint64(self.n - p)
        return x

    def __str__(self):
        # '*' marks a free position
        chars = ["*"] * self.n
        for p, v in zip(self.fixed_positions, self.fixed_values):
            chars[p - 1] = str(v)
        return "".join(chars)

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "k": self.k,
            "fixed_positions": list(self.fixed_positions),
            "fixed_values": "".join(map(str, self.fixed_values)),
            "pattern": str(self),
        }


def iter_masks(n: int, r: int) -> Iterator[int]:
    """All n-bit masks of popcount r in increasing numeric order (Gosper's hack)."""
    if r == 0:
        yield 0
        return
    mask = (1 << r) - 1
    limit = 1 << n
    while mask < limit:
        yield mask
        c = mask & -mask
        s = mask + c
        mask = (((s ^ mask) >> 2) // c) | s


def mask_positions(mask: int) -> tuple[int, ...]:
    """Positions (1-indexed) of a colex mask, where bit ``p - 1`` stands for position p."""
    out = []
    p = 1
    while mask:
        if mask & 1:
            out.append(p)
        mask >>= 1
        p += 1
    return tuple(out)


def iter_fixed_sets(n: int, size: int) -> Iterator[tuple[int, ...]]:
    """Subsets of [n] of the given size, in colexicographic order."""
    for mask in iter_masks(n, size):
        yield mask_positions(mask)


def enumerate_sources(n: int, k: int) -> Iterator[ObfsSource]:
    """Every (n, k) bit-fixing source exactly once.

    Fixed sets ``L`` come in colexicographic order; within each ``L`` the
    fixed string ``a`` runs through 0..2**(n-k)-1, first fixed position
    being the most significant bit.
    """
    if not 1 <= k <= n:
        raise ValueError(f"need 1 <= k <= n, got k={k}, n={n}")
    width = n - k
    for L in iter_fixed_sets(n, width):
        for a in range(1 << width):
            vals = tuple((a >> (width - 1 - j)) & 1 for j in range(width))
            yield ObfsSource(n, L, vals)


def count_sources(n: int, k: int) -> int:
    return comb(n, k) << (n - k)


# ---------------------------------------------------------------------------
# truth tables


class TruthTableFunction:
    """An explicit function {0,1}^n -> {0,1}^m stored as 2**n integers."""

    __slots__ = ("n", "m", "table")

    def __init__(self, n: int, m: int, table):
        if n < 1 or m < 1:
            raise ValueError("need n >= 1 and m >= 1")
        if m > 63:
            raise ValueError("output length above 63 bits is not supported")
        arr = np.array(table, dtype=np.int64).reshape(-1)
        if arr.shape[0] != 1 << n:
            raise DimensionError(f"table has {arr.shape[0]} rows, expected {1 << n}")
        if arr.size and (arr.min() < 0 or arr.max() >= 1 << m):
            raise ValueError(f"table entries must fit in {m} bits")
        arr.setflags(write=False)
        self.n = n
        self.m = m
        self.table = arr

    @classmethod
    def from_callable(cls, n: int, m: int, fn) -> TruthTableFunction:
        """Tabulate ``fn(BitString) -> BitString | int``."""
        rows = []
        for x in range(1 << n):
            y = fn(BitString.from_int(x, n))
            rows.append(as_int(y, m))
        return cls(n, m, rows)

    def evaluate(self, x: int) -> int:
        return int(self.table[x])

    def __call__(self, w) -> BitString:
        return BitString.from_int(self.evaluate(as_int(w, self.n)), self.m)

    def cube(self) -> np.ndarray:
        """The table reshaped so that axis ``i - 1`` is input position ``i``."""
        return self.table.reshape((2,) * self.n)

    def __eq__(self, other):
        if not isinstance(other, TruthTableFunction):
            return NotImplemented
        return self.n == other.n and self.m == other.m and np.array_equal(self.table, other.table)

    def __hash__(self):
        return hash((self.n, self.m, self.table.tobytes()))

    def __repr__(self):
        return f"TruthTableFunction(n={self.n}, m={self.m})"


# ---------------------------------------------------------------------------
# exact distributions


class Distribution:
    """An exact distribution over m-bit outcomes with dyadic masses.

    Outcomes are integers in ``[0, 2**m)``; absent outcomes have mass zero.
    """

    __slots__ = ("outcome_bits", "masses")

    def __init__(self, outcome_bits: int, masses: dict):
        if outcome_bits < 0:
            raise ValueError("outcome_bits must be non-negative")
        size = 1 << outcome_bits
        clean = {}
        total = ZERO
        for w, p in masses.items():
            w = int(w)
            p = DyadicRational.coerce(p)
            if not 0 <= w < size:
                raise ValueError(f"outcome {w} outside {outcome_bits}-bit range")
            if p < 0:
                raise ValueError("masses must be non-negative")
            if p:
                clean[w] = clean.get(w, ZERO) + p
            total = total + p
        if total != ONE:
            raise ValueError(f"masses sum to {total}, not 1")
        self.outcome_bits = outcome_bits
        self.masses = dict(sorted(clean.items()))

    @classmethod
    def from_counts(cls, outcome_bits: int, counts, log2_total: int) -> Distribution:
        """Masses ``counts[w] / 2**log2_total``."""
        if isinstance(counts, dict):
            items = counts.items()
        else:
            items = enumerate(counts)
        return cls(outcome_bits, {w: DyadicRational(int(c), log2_total) for w, c in items if c})

    @classmethod
    def uniform(cls, outcome_bits: int) -> Distribution:
        return cls(outcome_bits, {w: DyadicRational(1, outcome_bits) for w in range(1 << outcome_bits)})

    @classmethod
    def point(cls, outcome_bits: int, outcome: int = 0) -> Distribution:
        return cls(outcome_bits, {outcome: ONE})

    def __getitem__(self, w: int) -> DyadicRational:
        return self.masses.get(int(w), ZERO)

    @property
    def support(self) -> tuple[int, ...]:
        return tuple(self.masses)

    def __eq__(self, other):
        if not isinstance(other, Distribution):
            return NotImplemented
        return self.outcome_bits == other.outcome_bits and self.masses == other.masses

    def __repr__(self):
        body = ", ".join(f"{w}: {p}" for w, p in self.masses.items())
        return f"Distribution(m={self.outcome_bits}, {{{body}}})"

    def to_json(self) -> dict:
        return {
            "outcome_bits": self.outcome_bits,
            "masses": {
                format(w, f"0{self.outcome_bits}b") if self.outcome_bits else "": str(p)
                for w, p in self.masses.items()
            },
        }


def statistical_distance(p: Distribution, q: Distribution) -> DyadicRational:
    """Half the L1 distance between two distributions, exactly."""
    if p.outcome_bits != q.outcome_bits:
        raise DimensionError(f"outcome widths differ: {p.outcome_bits} vs {q.outcome_bits}")
    total = ZERO
    for w in set(p.masses) | set(q.masses):
        total = total + abs(p[w] - q[w])
    return total.half()


def max_test_advantage(p: Distribution, q: Distribution) -> DyadicRational:
    """``P(T) - Q(T)`` for the test ``T = {w : p(w) > q(w)}``.

    Equals :func:`statistical_distance`; kept separate as the max-over-tests
    formulation.
    """
    if p.outcome_bits != q.outcome_bits:
        raise DimensionError(f"outcome widths differ: {p.outcome_bits} vs {q.outcome_bits}")
    adv = ZERO
    for w in p.masses:
        if p[w] > q[w]:
            adv = adv + (p[w] - q[w])
    return adv


def distance_from_uniform(p: Distribution) -> DyadicRational:
    m = p.outcome_bits
    u = DyadicRational(1, m)
    missing = (1 << m) - len(p.masses)
    total = DyadicRational(missing, m)
    for mass in p.masses.values():
        total = total + abs(mass - u)
    return total.half()


def output_distribution(f, source: ObfsSource) -> Distribution:
    """Exact distribution of ``f`` on the 2**k equally likely completions of ``source``.

    ``f`` is a :class:`TruthTableFunction` or any object with ``n``, ``m``
    and ``evaluate(int) -> int`` (for instance a streaming program).
    """
    if f.n != source.n:
        raise DimensionError(f"function takes {f.n} bits, source has {source.n}")
    k = source.k
    if isinstance(f, TruthTableFunction):
        outs = f.table[source.completions_array().astype(np.int64)]
        values, counts = np.unique(outs, return_counts=True)
        counts_map = dict(zip(values.tolist(), counts.tolist()))
    else:
        counts_map = {}
        for x in source.completions():
            y = f.evaluate(x)
            counts_map[y] = counts_map.get(y, 0) + 1
    return Distribution.from_counts(f.m, counts_map, k)


def source_from_assignment(n: int, assignment: dict[int, int]) -> ObfsSource:
    """Source fixing ``{position: bit}`` and leaving the rest free."""
    items = sorted(assignment.items())
    return ObfsSource(n, tuple(p for p, _ in items), tuple(b for _, b in items))


def popcount(values: np.ndarray) -> np.ndarray:
    return np.bitwise_count(values)


def all_inputs(n: int) -> np.ndarray:
    return np.arange(1 << n, dtype=np.int64)


def bits_of(values: Sequence[int] | np.ndarray, n: int) -> np.ndarray:
    """Matrix whose column ``i - 1`` holds input position ``i`` of each value."""
    v = np.asarray(values, dtype=np.int64)[:, None]
    shifts = np.arange(n - 1, -1, -1, dtype=np.int64)[None, :]
    return (v >> shifts) & 1
