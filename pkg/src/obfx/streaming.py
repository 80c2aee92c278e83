"""One-pass streaming programs over {0,1}^n and the support-bound attack.

A program has states ``0..states-1``, an initial state, per-position
transition tables ``sigma0[i]`` and ``sigma1[i]`` (row ``i - 1`` for input
position ``i``) and an output map from states to m-bit integers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple

import numpy as np

from .core import (
    BitString,
    ObfsSource,
    TruthTableFunction,
    all_inputs,
    as_int,
    distance_from_uniform,
    output_distribution,
)


class PreconditionError(ValueError):
    pass


class InfeasibleAttack(ValueError):
    pass


def _is_permutation(row: np.ndarray) -> bool:
    return np.unique(row).size == row.size


@dataclass(frozen=True, eq=False)
class StreamingProgram:
    states: int
    initial: int
    sigma0: np.ndarray
    sigma1: np.ndarray
    output: tuple[int, ...]
    m: int

    def __post_init__(self):
        s0 = np.array(self.sigma0, dtype=np.int64)
        s1 = np.array(self.sigma1, dtype=np.int64)
        if s0.ndim != 2 or s0.shape != s1.shape:
            raise ValueError("sigma0 and sigma1 must both have shape (n, states)")
        if s0.shape[0] < 1 or s0.shape[1] != self.states:
            raise ValueError(f"transition tables need shape (n, {self.states}), got {s0.shape}")
        for tab in (s0, s1):
            if tab.min() < 0 or tab.max() >= self.states:
                raise ValueError("transition maps must stay inside the state space")
        if not 0 <= self.initial < self.states:
            raise ValueError("initial state out of range")
        out = tuple(int(o) for o in self.output)
        if len(out) != self.states:
            raise ValueError("output map needs one entry per state")
        if self.m < 1 or any(not 0 <= o < 1 << self.m for o in out):
            raise ValueError(f"outputs must be {self.m}-bit values")
        s0.setflags(write=False)
        s1.setflags(write=False)
        object.__setattr__(self, "sigma0", s0)
        object.__setattr__(self, "sigma1", s1)
        object.__setattr__(self, "output", out)

    @property
    def n(self) -> int:
        return self.sigma0.shape[0]

    @property
    def space(self) -> float:
        """log2 of the number of states."""
        return math.log2(self.states)

    def final_state(self, x: int) -> int:
        v = self.initial
        n = self.n
        for i in range(n):
            if x >> (n - 1 - i) & 1:
                v = self.sigma1[i, v]
            else:
                v = self.sigma0[i, v]
        return int(v)

    def evaluate(self, x: int) -> int:
        return self.output[self.final_state(x)]

    def __call__(self, w) -> BitString:
        return run(self, w)

    def to_truth_table(self) -> TruthTableFunction:
        if self.n > 24:
            raise ValueError("tabulating needs n <= 24")
        xs = all_inputs(self.n)
        v = np.full(xs.shape, self.initial, dtype=np.int64)
        for i in range(self.n):
            bit = (xs >> (self.n - 1 - i)) & 1
            v = np.where(bit == 1, self.sigma1[i][v], self.sigma0[i][v])
        return TruthTableFunction(self.n, self.m, np.asarray(self.output, dtype=np.int64)[v])

    def __eq__(self, other):
        if not isinstance(other, StreamingProgram):
            return NotImplemented
        return (
            self.states == other.states
            and self.initial == other.initial
            and self.m == other.m
            and self.output == other.output
            and np.array_equal(self.sigma0, other.sigma0)
            and np.array_equal(self.sigma1, other.sigma1)
        )

    def __repr__(self):
        return f"StreamingProgram(n={self.n}, states={self.states}, m={self.m})"


def run(p: StreamingProgram, w) -> BitString:
    return BitString.from_int(p.evaluate(as_int(w, p.n)), p.m)


class ForgetlessCheck(NamedTuple):
    forgetless: bool
    violations: tuple[int, ...]

    def __bool__(self):
        return self.forgetless


def is_forgetless(p: StreamingProgram) -> ForgetlessCheck:
    """Forgetless iff at every position one of the two transition maps is a bijection.

    ``violations`` lists the 1-indexed positions where neither is.
    """
    bad = tuple(
        i + 1
        for i in range(p.n)
        if not (_is_permutation(p.sigma0[i]) or _is_permutation(p.sigma1[i]))
    )
    return ForgetlessCheck(not bad, bad)


def normalize(p: StreamingProgram) -> tuple[StreamingProgram, tuple[int, ...]]:
    """Equivalent program whose zero-bit transitions are all the identity.

    Returns ``(q, negated)`` where ``negated`` lists the positions whose
    input bit must be flipped: ``p(x) == q(x ^ mask(negated))``.
    With prefix permutations ``P_i = sigma0_i o ... o sigma0_1`` the new
    one-bit maps are ``f_i = P_i^{-1} o sigma1_i o P_{i-1}`` and the new
    output map is ``phi o P_n``.
    """
    check = is_forgetless(p)
    if not check:
        raise PreconditionError(f"program is not forgetless at positions {list(check.violations)}")
    V = p.states
    ident = np.arange(V, dtype=np.int64)
    if all(np.array_equal(row, ident) for row in p.sigma0):
        return p, ()

    s0 = p.sigma0.copy()
    s1 = p.sigma1.copy()
    negated = []
    for i in range(p.n):
        if not _is_permutation(s0[i]):
            s0[i], s1[i] = p.sigma1[i].copy(), p.sigma0[i].copy()
            negated.append(i + 1)

    prefix = ident.copy()  # P_{i-1}
    f = np.empty_like(s1)
    for i in range(p.n):
        nxt = s0[i][prefix]  # P_i = sigma0_i o P_{i-1}
        inv = np.empty(V, dtype=np.int64)
        inv[nxt] = ident
        f[i] = inv[s1[i][prefix]]
        prefix = nxt
    psi = tuple(p.output[v] for v in prefix)
    q = StreamingProgram(
        states=V,
        initial=p.initial,
        sigma0=np.tile(ident, (p.n, 1)),
        sigma1=f,
        output=psi,
        m=p.m,
    )
    return q, tuple(negated)


def negation_mask(n: int, negated) -> int:
    return sum(1 << (n - pos) for pos in negated)


@dataclass(frozen=True)
class AttackResult:
    """Outcome of the greedy pigeonhole attack.

    ``free_positions`` is the final pigeonhole set F_k (positions whose
    normalized one-bit map walks ``state_chain``).  ``source`` frees the
    first k of them and fixes every other bit so the normalized program
    reads 0 there; with exactly k free bits the Hamming weight takes k + 1
    values, which is ``support_bound``.
    """

    source: ObfsSource
    state_chain: tuple[int, ...]
    free_positions: tuple[int, ...]
    stage_sizes: tuple[int, ...]
    negated: tuple[int, ...]
    weight_outputs: tuple[int, ...]
    k: int
    support_bound: int
    k_support_bound: int

    def to_json(self) -> dict:
        return {
            "k": self.k,
            "source": self.source.to_json(),
            "state_chain": list(self.state_chain),
            "free_positions": list(self.free_positions),
            "stage_sizes": list(self.stage_sizes),
            "negated_positions": list(self.negated),
            "weight_outputs": list(self.weight_outputs),
            "support_bound": self.support_bound,
            "k_support_bound": self.k_support_bound,
        }


def space_condition_holds(p: StreamingProgram, k: int) -> bool:
    """log2|V| <= log2(n/k)/k, checked exactly as k * |V|**k <= n."""
    return k * p.states**k <= p.n


def attack_source(p: StreamingProgram, k: int) -> AttackResult:
    """Build a k-bit source on which ``p`` depends only on the number of ones.

    Greedy tie-break: at each stage the target state with the largest
    preimage wins, ties going to the smallest state index.
    """
    if not 1 <= k <= p.n:
        raise ValueError(f"need 1 <= k <= n, got k={k}")
    check = is_forgetless(p)
    if not check:
        raise PreconditionError(f"program is not forgetless at positions {list(check.violations)}")
    if not space_condition_holds(p, k):
        threshold = math.log2(p.n / k) / k
        raise InfeasibleAttack(
            f"space s={p.space:.6f} exceeds log2(n/k)/k={threshold:.6f} (n={p.n}, k={k})"
        )
    q, negated = normalize(p)
    F = np.arange(p.n)  # 0-indexed positions
    v = q.initial
    chain = [v]
    sizes = []
    for _ in range(k):
        targets = q.sigma1[F, v]
        counts = np.bincount(targets, minlength=q.states)
        v = int(np.argmax(counts))  # first maximum = smallest state
        F = F[targets == v]
        chain.append(v)
        sizes.append(int(F.size))
    free = tuple(int(i) + 1 for i in F)
    chosen = set(free[:k])
    neg = set(negated)
    fixed_pos = tuple(i for i in range(1, p.n + 1) if i not in chosen)
    fixed_val = tuple(1 if i in neg else 0 for i in fixed_pos)
    source = ObfsSource(p.n, fixed_pos, fixed_val)
    return AttackResult(
        source=source,
        state_chain=tuple(chain),
        free_positions=free,
        stage_sizes=tuple(sizes),
        negated=negated,
        weight_outputs=tuple(q.output[s] for s in chain),
        k=k,
        support_bound=k + 1,
        k_support_bound=k,
    )


def attack_report(p: StreamingProgram, result: AttackResult) -> dict:
    """Exact output distribution of ``p`` on the attack source, plus derived bounds."""
    dist = output_distribution(p, result.source)
    dist_u = distance_from_uniform(dist)
    M = 1 << p.m
    return {
        "program": {"n": p.n, "states": p.states, "m": p.m, "space": p.space},
        "attack": result.to_json(),
        "output_distribution": dist.to_json(),
        "support_size": len(dist.support),
        "distance": dist_u.to_json(),
        "forced_distance_lower_bound": str(Fraction(M - result.support_bound, M)),
    }


def cycle_add_program(n: int, M: int) -> StreamingProgram:
    """Walk on Z_M adding 1 per one-bit; computes the cycle-walk extractor."""
    if M < 2 or M & (M - 1):
        raise ValueError(f"M must be a power of two >= 2, got {M}")
    states = np.arange(M, dtype=np.int64)
    return StreamingProgram(
        states=M,
        initial=0,
        sigma0=np.tile(states, (n, 1)),
        sigma1=np.tile((states + 1) % M, (n, 1)),
        output=tuple(range(M)),
        m=M.bit_length() - 1,
    )


def _is_prime(p: int) -> bool:
    if p < 2:
        return False
    return all(p % d for d in range(2, math.isqrt(p) + 1))


def fp_chord_program(n: int, p: int) -> StreamingProgram:
    """Walk on F_p: a zero bit moves x to x+1, a one bit to x^{-1} (0 stays 0)."""
    if not _is_prime(p):
        raise ValueError(f"{p} is not prime")
    xs = np.arange(p, dtype=np.int64)
    inv = np.array([0] + [pow(x, -1, p) for x in range(1, p)], dtype=np.int64)
    return StreamingProgram(
        states=p,
        initial=0,
        sigma0=np.tile((xs + 1) % p, (n, 1)),
        sigma1=np.tile(inv, (n, 1)),
        output=tuple(range(p)),
        m=max(1, (p - 1).bit_length()),
    )


def symmetric_output_bound(k: int, epsilon, support: int | None = None) -> float:
    """Largest output length log2(support/(1-eps)) a symmetric extractor can have.

    ``support`` defaults to ``k``; pass ``k + 1`` for the count of Hamming
    weights of k free bits.
    """
    eps = float(epsilon)
    if eps >= 1:
        raise ValueError(f"epsilon must be < 1, got {epsilon}")
    if support is None:
        support = k
    return math.log2(support / (1 - eps))


def streaming_output_bounds(k: int, epsilon) -> dict:
    """Both forms of the output-length bound for small-space forgetless programs."""
    return {
        "support_k": symmetric_output_bound(k, epsilon),
        "support_k_plus_1": symmetric_output_bound(k, epsilon, support=k + 1),
    }


def random_forgetless_program(n: int, states: int, m: int, rng: np.random.Generator) -> StreamingProgram:
    """A random forgetless program: per position one random permutation and one random map."""
    s0 = np.empty((n, states), dtype=np.int64)
    s1 = np.empty((n, states), dtype=np.int64)
    for i in range(n):
        perm = rng.permutation(states)
        other = rng.integers(0, states, size=states)
        if rng.integers(0, 2):
            s0[i], s1[i] = perm, other
        else:
            s0[i], s1[i] = other, perm
    output = rng.integers(0, 1 << m, size=states)
    return StreamingProgram(
        states=states,
        initial=int(rng.integers(0, states)),
        sigma0=s0,
        sigma1=s1,
        output=tuple(int(o) for o in output),
        m=m,
    )
