"""Seeded sweeps over random truth tables.

Each trial draws a uniformly random function with a seed derived from
``(master_seed, k, trial)`` alone, so the same functions are seen by every
property and by any number of worker processes.  Sources are never
sampled: each trial runs an exhaustive verifier.
"""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .core import TruthTableFunction
from .dyadic import DyadicRational, format_decimal
from .verify import DEFAULT_BUDGET, BudgetExceeded, Property, verify


def trial_seed(master_seed: int, k: int, trial: int) -> np.random.SeedSequence:
    return np.random.SeedSequence([master_seed, k, trial])


def sample_random_function(n: int, m: int, seed, max_n: int = 24) -> TruthTableFunction:
    """Every table entry independently uniform on {0,1}^m."""
    if n > max_n:
        raise BudgetExceeded(f"a random table with n={n} exceeds max_n={max_n}")
    rng = np.random.default_rng(seed)
    return TruthTableFunction(n, m, rng.integers(0, 1 << m, size=1 << n, dtype=np.int64))


def confidence_radius(trials: int, delta: float = 0.05) -> float:
    """Radius r with 2 exp(-trials r^2 / 2) = delta."""
    return math.sqrt(2 * math.log(2 / delta) / trials)


@dataclass(frozen=True)
class SweepConfig:
    property: Property
    n: int
    m: int
    epsilon: Fraction  # any exact rational; comparisons are exact
    k_values: tuple[int, ...]
    trials: int
    master_seed: int = 0
    workers: int = 1
    delta: float = 0.05
    budget: int = DEFAULT_BUDGET
    inject: TruthTableFunction | None = field(default=None, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "property", Property.parse(self.property))
        eps = Fraction(self.epsilon)
        if not 0 <= eps <= 1:
            raise ValueError(f"epsilon must lie in [0, 1], got {eps}")
        object.__setattr__(self, "epsilon", eps)
        object.__setattr__(self, "k_values", tuple(int(k) for k in self.k_values))
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if any(not 1 <= k <= self.n for k in self.k_values):
            raise ValueError(f"every k must lie in [1, {self.n}]")


@dataclass(frozen=True)
class SweepRow:
    k: int
    trials: int
    successes: int
    mean_distance: Fraction
    max_distance: DyadicRational
    conf_radius: float

    @property
    def fraction(self) -> Fraction:
        return Fraction(self.successes, self.trials)


@dataclass(frozen=True)
class SweepResult:
    config: SweepConfig
    rows: tuple[SweepRow, ...]
    distances: dict = field(compare=False, repr=False)  # (k, trial) -> DyadicRational

    def row(self, k: int) -> SweepRow:
        return next(r for r in self.rows if r.k == k)

    def crossing_point(self, level: float = 0.5) -> int | None:
        """Smallest k whose success fraction reaches ``level``."""
        return next((r.k for r in self.rows if r.fraction >= level), None)

    def to_csv(self, header: bool = True) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        if header:
            w.writerow(CSV_COLUMNS)
        c = self.config
        for r in self.rows:
            w.writerow([
                c.property.value, c.n, c.m, str(c.epsilon), r.k, r.trials, r.successes,
                format_decimal(r.fraction), format_decimal(r.mean_distance),
                format_decimal(r.max_distance), f"{r.conf_radius:.12g}", c.master_seed,
            ])
        return buf.getvalue()


CSV_COLUMNS = [
    "property", "n", "m", "eps", "k", "trials", "successes", "fraction",
    "mean_distance", "max_distance", "conf_radius", "seed",
]


def _trial(args):
    prop, n, m, k, trial, master_seed, budget, inject = args
    if inject is not None and trial == 0:
        f = inject
    else:
        f = sample_random_function(n, m, trial_seed(master_seed, k, trial))
    try:
        d = verify(f, prop, k, budget=budget).worst_distance
    except BudgetExceeded as exc:
        raise BudgetExceeded(f"k={k}, trial={trial}: {exc}") from exc
    return k, trial, d.numerator, d.log2_denominator


def run_sweep(config: SweepConfig) -> SweepResult:
    """Success fraction of random functions at threshold epsilon, per k.

    Results do not depend on ``config.workers``: seeds are per task and the
    reduction (count, sum, max) is order-free.
    """
    c = config
    tasks = [
        (c.property, c.n, c.m, k, t, c.master_seed, c.budget, c.inject)
        for k in c.k_values
        for t in range(c.trials)
    ]
    if c.workers > 1:
        with ProcessPoolExecutor(max_workers=c.workers) as pool:
            results = list(pool.map(_trial, tasks, chunksize=max(1, len(tasks) // (4 * c.workers))))
    else:
        results = [_trial(t) for t in tasks]
    distances = {(k, t): DyadicRational(num, den) for k, t, num, den in results}
    eps = c.epsilon  # exact rational; distances are dyadic
    radius = confidence_radius(c.trials, c.delta)
    rows = []
    for k in c.k_values:
        ds = [distances[(k, t)] for t in range(c.trials)]
        total = sum((d.as_fraction() for d in ds), Fraction(0))
        rows.append(SweepRow(
            k=k,
            trials=c.trials,
            successes=sum(1 for d in ds if d <= eps),
            mean_distance=total / c.trials,
            max_distance=max(ds),
            conf_radius=radius,
        ))
    return SweepResult(c, tuple(rows), distances)


def sweeps_csv(results) -> str:
    parts = [results[0].to_csv(header=True)]
    parts += [r.to_csv(header=False) for r in results[1:]]
    return "".join(parts)


def all_functions(n: int, m: int, limit: int = 1 << 16):
    """Every function {0,1}^n -> {0,1}^m, as truth tables in index order."""
    count = (1 << m) ** (1 << n)
    if count > limit:
        raise BudgetExceeded(f"{count} functions exceed the exhaustive limit {limit}")
    N = 1 << n
    M = 1 << m
    idx = np.arange(count, dtype=np.int64)
    digits = (idx[:, None] // (M ** np.arange(N, dtype=np.int64))[None, :]) % M
    for row in digits:
        yield TruthTableFunction(n, m, row)


def exhaustive_sweep(n: int, m: int, epsilon, k: int, prop, budget: int = DEFAULT_BUDGET) -> Fraction:
    """Exact fraction of all functions with worst distance <= epsilon."""
    eps = Fraction(epsilon)
    good = 0
    total = 0
    for f in all_functions(n, m):
        total += 1
        if verify(f, prop, k, budget=budget).worst_distance <= eps:
            good += 1
    return Fraction(good, total)


def single_test_failure_rate(n: int, m: int, epsilon, fixed_positions, test) -> Fraction:
    """Fraction of all functions failing one fixed statistical test against one static adversary.

    The adversary sees ``fixed_positions``; ``test`` is a boolean array of
    shape (2**d, 2**m) marking the (view, output) pairs in T.  A function
    fails when |Pr[(view, f(x)) in T] - |T| / 2**(d+m)| > epsilon.
    """
    eps = Fraction(epsilon)
    d = len(fixed_positions)
    test = np.asarray(test, dtype=bool).reshape(1 << d, 1 << m)
    xs = np.arange(1 << n, dtype=np.int64)
    view = np.zeros_like(xs)
    for p in fixed_positions:
        view = (view << 1) | ((xs >> (n - p)) & 1)
    N = 1 << n
    mu = Fraction(int(test.sum()), test.size)
    fails = 0
    total = 0
    for f in all_functions(n, m):
        hits = int(test[view, f.table].sum())
        total += 1
        if abs(Fraction(hits, N) - mu) > eps:
            fails += 1
    return Fraction(fails, total)
