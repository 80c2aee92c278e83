"""Exact worst-case verifiers for resilient and exposure-resilient functions.

All three verifiers share one primitive: for a set ``L`` of fixed positions
and every fixing ``a`` of them, the integer

    G(L, a) = sum_w |M * count_w - 2**k|,

where ``count_w`` counts the completions of ``L^a`` that ``f`` maps to ``w``.
The distance of ``f(L^a)`` from uniform is ``G / 2**(m + 1 + k)``, so all
reductions (max, average, the adaptive recursion) run on integers and are
converted to a :class:`DyadicRational` once at the end.

Adaptive adversaries are searched only in read-echo form: a decision tree
that outputs the bits it reads.  Any other adversary is a post-processing
of one of these and cannot be more distinguishing.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from math import comb
from typing import Iterator, Optional, Tuple, Union

import numpy as np

from .core import (
    Distribution,
    ObfsSource,
    TruthTableFunction,
    distance_from_uniform,
    iter_fixed_sets,
    iter_masks,
    mask_positions,
    output_distribution,
    statistical_distance,
)
from .dyadic import ZERO, DyadicRational

DEFAULT_BUDGET = 1 << 27

# (position, subtree if the bit is 0, subtree if the bit is 1); None is a leaf
Tree = Optional[Tuple[int, "Tree", "Tree"]]


class BudgetExceeded(RuntimeError):
    """The requested exhaustive computation is larger than the work budget."""


class Property(str, enum.Enum):
    RF = "rf"
    STATIC_ERF = "serf"
    ADAPTIVE_ERF = "aerf"

    @classmethod
    def parse(cls, value) -> Property:
        if isinstance(value, Property):
            return value
        v = str(value).lower()
        for p in cls:
            if v in (p.value, p.name.lower()):
                return p
        raise ValueError(f"unknown property {value!r}")


@dataclass(frozen=True)
class StaticWitness:
    fixed_positions: tuple[int, ...]
    distances: tuple[DyadicRational, ...]  # indexed by the fixed string a

    def to_json(self) -> dict:
        return {
            "fixed_positions": list(self.fixed_positions),
            "distance_by_fixing": [str(d) for d in self.distances],
        }


@dataclass(frozen=True)
class VerificationReport:
    property: Property
    n: int
    m: int
    k: int
    worst_distance: DyadicRational
    witness: Union[ObfsSource, StaticWitness, Tree]

    def holds(self, epsilon) -> bool:
        return self.worst_distance <= DyadicRational.coerce(epsilon)

    def to_json(self) -> dict:
        if self.property is Property.ADAPTIVE_ERF:
            witness = tree_to_json(self.witness)
        else:
            witness = self.witness.to_json()
        return {
            "property": self.property.value,
            "n": self.n,
            "m": self.m,
            "k": self.k,
            "worst_distance": self.worst_distance.to_json(),
            "witness": witness,
        }


def _check_k(f: TruthTableFunction, k: int):
    if not 1 <= k <= f.n:
        raise ValueError(f"need 1 <= k <= n={f.n}, got k={k}")


def _check_budget(work: int, budget: int, what: str):
    if work > budget:
        raise BudgetExceeded(f"{what} needs {work} steps, budget is {budget}")


def fixing_excess(f: TruthTableFunction, fixed: tuple[int, ...]) -> np.ndarray:
    """``G(L, a)`` for every fixing ``a`` of the sorted positions ``fixed``.

    Entry ``a`` reads the fixed bits as a number, first position most significant.
    """
    n, m = f.n, f.m
    fixed_set = set(fixed)
    free = [p for p in range(1, n + 1) if p not in fixed_set]
    k = len(free)
    axes = [p - 1 for p in fixed] + [p - 1 for p in free]
    rows = f.cube().transpose(axes).reshape(1 << (n - k), 1 << k)
    M = 1 << m
    K = 1 << k
    R = rows.shape[0]
    if R * M <= 1 << 24:
        idx = (np.arange(R, dtype=np.int64)[:, None] * M + rows).ravel()
        counts = np.bincount(idx, minlength=R * M).reshape(R, M)
        return np.abs(M * counts - K).sum(axis=1)
    out = np.empty(R, dtype=np.int64)
    for r in range(R):
        _, c = np.unique(rows[r], return_counts=True)
        out[r] = np.abs(M * c - K).sum() + (M - c.size) * K
    return out


def rf_work(n: int, k: int) -> int:
    return comb(n, k) << n


def rf_distance(f: TruthTableFunction, k: int, budget: int = DEFAULT_BUDGET) -> VerificationReport:
    """Worst distance from uniform over every (n, k) bit-fixing source.

    The witness is the first worst source in enumeration order.
    """
    _check_k(f, k)
    _check_budget(rf_work(f.n, k), budget, f"rf_distance(n={f.n}, k={k})")
    best, best_L, best_a = -1, None, 0
    for L in iter_fixed_sets(f.n, f.n - k):
        g = fixing_excess(f, L)
        a = int(np.argmax(g))
        if g[a] > best:
            best, best_L, best_a = int(g[a]), L, a
    width = f.n - k
    vals = tuple((best_a >> (width - 1 - j)) & 1 for j in range(width))
    return VerificationReport(
        Property.RF, f.n, f.m, k,
        DyadicRational(best, f.m + 1 + k),
        ObfsSource(f.n, best_L, vals),
    )


def static_erf_distance(f: TruthTableFunction, k: int, budget: int = DEFAULT_BUDGET) -> VerificationReport:
    """Worst, over fixed sets L of size n - k, of the average over fixings a
    of the distance of ``f(L^a)`` from uniform."""
    _check_k(f, k)
    _check_budget(rf_work(f.n, k), budget, f"static_erf_distance(n={f.n}, k={k})")
    best, best_L, best_g = -1, None, None
    for L in iter_fixed_sets(f.n, f.n - k):
        g = fixing_excess(f, L)
        total = int(g.sum())
        if total > best:
            best, best_L, best_g = total, L, g
    witness = StaticWitness(
        best_L, tuple(DyadicRational(int(x), f.m + 1 + k) for x in best_g)
    )
    return VerificationReport(
        Property.STATIC_ERF, f.n, f.m, k,
        DyadicRational(best, f.n + f.m + 1),
        witness,
    )


def adaptive_states(n: int, k: int) -> int:
    """Number of partial assignments with at most n - k bits read."""
    return sum(comb(n, i) << i for i in range(n - k + 1))


def adaptive_erf_distance(f: TruthTableFunction, k: int, budget: int = DEFAULT_BUDGET) -> VerificationReport:
    """Worst distance over adaptive adversaries that read n - k bits.

    Dynamic program over partial assignments rho (a set of read positions
    plus their values):

        D(rho) = max_{i unread} (D(rho, x_i=0) + D(rho, x_i=1)) / 2

    down from the leaves, where n - k bits are read and ``D`` is the
    distance of ``f`` restricted to the subcube from uniform.  ``D`` depends
    only on the subcube, not on the order the bits were read in, so one
    table per set of read positions suffices.  Ties go to the smallest
    position.
    """
    _check_k(f, k)
    n, m = f.n, f.m
    _check_budget(adaptive_states(n, k), budget, f"adaptive_erf_distance(n={n}, k={k})")
    _check_budget(rf_work(n, k), budget, f"adaptive_erf_distance(n={n}, k={k}) leaves")
    d = n - k
    level = {mask: fixing_excess(f, mask_positions(mask)) for mask in iter_masks(n, d)}
    choices: dict[int, np.ndarray] = {}
    for j in range(d - 1, -1, -1):
        nxt = {}
        for mask in iter_masks(n, j):
            cands = []
            cand_pos = []
            rank = 0
            for i in range(1, n + 1):
                bit = 1 << (i - 1)
                if mask & bit:
                    rank += 1
                    continue
                child = level[mask | bit]
                cands.append(child.reshape((2,) * (j + 1)).sum(axis=rank).reshape(-1))
                cand_pos.append(i)
            stack = np.stack(cands)
            arg = stack.argmax(axis=0)
            nxt[mask] = np.take_along_axis(stack, arg[None, :], axis=0)[0]
            choices[mask] = np.asarray(cand_pos, dtype=np.int64)[arg]
        level = nxt
    root = int(level[0][0])
    tree = _rebuild_tree(choices, d)
    return VerificationReport(
        Property.ADAPTIVE_ERF, n, m, k, DyadicRational(root, n + m + 1), tree
    )


def _rebuild_tree(choices: dict[int, np.ndarray], depth: int) -> Tree:
    def build(mask: int, a: int, j: int) -> Tree:
        if j == depth:
            return None
        i = int(choices[mask][a])
        rank = bin(mask & ((1 << (i - 1)) - 1)).count("1")
        low_bits = j - rank
        hi, lo = a >> low_bits, a & ((1 << low_bits) - 1)
        child = mask | (1 << (i - 1))
        c0 = (hi << (low_bits + 1)) | lo
        c1 = c0 | (1 << low_bits)
        return (i, build(child, c0, j + 1), build(child, c1, j + 1))

    return build(0, 0, 0)


def tree_to_json(tree: Tree):
    if tree is None:
        return None
    i, zero, one = tree
    return {"read": i, "0": tree_to_json(zero), "1": tree_to_json(one)}


def tree_from_json(obj) -> Tree:
    if obj is None:
        return None
    return (int(obj["read"]), tree_from_json(obj["0"]), tree_from_json(obj["1"]))


def tree_depth(tree: Tree) -> int:
    """Depth of a full read-echo tree; raises if leaves sit at different depths."""
    if tree is None:
        return 0
    _, zero, one = tree
    dz, do = tree_depth(zero), tree_depth(one)
    if dz != do:
        raise ValueError("read-echo trees must read the same number of bits on every path")
    return dz + 1


def tree_distance(f: TruthTableFunction, tree: Tree) -> DyadicRational:
    """Distance between (transcript, f(x)) and (transcript, uniform) for a
    read-echo tree, from the explicit joint distribution over all inputs."""
    n, m = f.n, f.m
    depth = tree_depth(tree)
    M = 1 << m
    joint: dict[int, int] = {}
    marginal: dict[int, int] = {}
    for x in range(1 << n):
        node, t, seen = tree, 0, set()
        while node is not None:
            i, zero, one = node
            if i in seen or not 1 <= i <= n:
                raise ValueError(f"tree reads position {i} twice or out of range")
            seen.add(i)
            b = (x >> (n - i)) & 1
            t = (t << 1) | b
            node = one if b else zero
        key = t * M + f.evaluate(x)
        joint[key] = joint.get(key, 0) + 1
        marginal[t] = marginal.get(t, 0) + 1
    p = Distribution.from_counts(depth + m, joint, n)
    q = Distribution(
        depth + m,
        {t * M + y: DyadicRational(c, n + m) for t, c in marginal.items() for y in range(M)},
    )
    return statistical_distance(p, q)


def read_echo_trees(n: int, depth: int, unread: frozenset | None = None) -> Iterator[Tree]:
    """Every full read-echo decision tree of the given depth over positions 1..n."""
    if unread is None:
        unread = frozenset(range(1, n + 1))
    if depth == 0:
        yield None
        return
    for i in sorted(unread):
        subs = list(read_echo_trees(n, depth - 1, unread - {i}))
        for zero in subs:
            for one in subs:
                yield (i, zero, one)


def count_read_echo_trees(n: int, depth: int) -> int:
    if depth == 0:
        return 1
    return n * count_read_echo_trees(n - 1, depth - 1) ** 2


def adaptive_erf_distance_bruteforce(f: TruthTableFunction, k: int) -> DyadicRational:
    """Maximum of :func:`tree_distance` over all read-echo trees of depth n - k.

    Independent of the dynamic program; only for n <= 5.
    """
    if f.n > 5:
        raise ValueError(f"brute force is limited to n <= 5, got n={f.n}")
    _check_k(f, k)
    best = ZERO
    for tree in read_echo_trees(f.n, f.n - k):
        best = max(best, tree_distance(f, tree))
    return best


def static_witness_distance(f: TruthTableFunction, fixed_positions: tuple[int, ...]) -> DyadicRational:
    """Average distance over all fixings of ``fixed_positions``, via output_distribution."""
    width = len(fixed_positions)
    total = ZERO
    for a in range(1 << width):
        vals = tuple((a >> (width - 1 - j)) & 1 for j in range(width))
        src = ObfsSource(f.n, fixed_positions, vals)
        total = total + distance_from_uniform(output_distribution(f, src))
    return total * DyadicRational(1, width)


def replay_witness(f: TruthTableFunction, report: VerificationReport) -> DyadicRational:
    """Recompute a report's distance from its witness alone."""
    if report.property is Property.RF:
        return distance_from_uniform(output_distribution(f, report.witness))
    if report.property is Property.STATIC_ERF:
        return static_witness_distance(f, report.witness.fixed_positions)
    return tree_distance(f, report.witness)


_VERIFIERS = {
    Property.RF: rf_distance,
    Property.STATIC_ERF: static_erf_distance,
    Property.ADAPTIVE_ERF: adaptive_erf_distance,
}


def verify(f: TruthTableFunction, prop, k: int, budget: int = DEFAULT_BUDGET) -> VerificationReport:
    return _VERIFIERS[Property.parse(prop)](f, k, budget=budget)
