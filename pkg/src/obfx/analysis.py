"""Closed-form bounds next to the exact quantities they bound.

Exact sides are :class:`DyadicRational`; bound formulas are evaluated with
mpmath at ``PREC`` bits.  When an exact value is compared to a bound it is
first rounded *upward* to an mpf, so a comparison can only err towards
reporting a violation.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from fractions import Fraction
from math import comb

import gmpy2
import mpmath
from mpmath.libmp import from_man_exp, round_ceiling

from .core import Distribution, distance_from_uniform
from .verify import BudgetExceeded
from .dyadic import DyadicRational, format_decimal

PREC = 96


def _mpf_up(value: DyadicRational) -> mpmath.mpf:
    """Smallest PREC-bit float >= value."""
    with mpmath.workprec(PREC):
        # inside workprec so the mpf constructor does not re-round to 53 bits
        return mpmath.mpf(from_man_exp(value.numerator, -value.log2_denominator, PREC, round_ceiling))


# ---------------------------------------------------------------------------
# the walk on Z_M


def _cyclic_mul(a: list, b: list, M: int) -> list:
    """Product of two coefficient vectors in Z[x]/(x^M - 1), via one big multiplication."""
    width = int(gmpy2.bit_length(max(a))) + int(gmpy2.bit_length(max(b))) + M.bit_length() + 1
    pa = gmpy2.mpz(0)
    for c in reversed(a):
        pa = (pa << width) | c
    pb = gmpy2.mpz(0)
    for c in reversed(b):
        pb = (pb << width) | c
    prod = pa * pb
    slot = (gmpy2.mpz(1) << width) - 1
    out = [gmpy2.mpz(0)] * M
    for i in range(2 * M - 1):
        out[i % M] += (prod >> (width * i)) & slot
    return out


def walk_counts(k: int, M: int) -> list[int]:
    """Number of k-bit strings of each Hamming weight class mod M.

    These are the coefficients of (1 + x)^k mod (x^M - 1), computed by
    repeated squaring.
    """
    if k < 0 or M < 1:
        raise ValueError("need k >= 0 and M >= 1")
    if M == 1:
        return [1 << k]
    result = [gmpy2.mpz(0)] * M
    result[0] = gmpy2.mpz(1)
    base = [gmpy2.mpz(0)] * M
    base[0] += 1
    base[1] += 1
    e = k
    while e:
        if e & 1:
            result = _cyclic_mul(result, base, M)
        e >>= 1
        if e:
            base = _cyclic_mul(base, base, M)
    return [int(c) for c in result]


def exact_walk_distribution(k: int, M: int) -> Distribution:
    """Distribution of the sum of k fair 0/1 steps, reduced mod M (M a power of two)."""
    if k < 1:
        raise ValueError(f"k must be positive, got {k}")
    if M < 1 or M & (M - 1):
        raise ValueError(f"M must be a power of two, got {M}")
    return Distribution.from_counts(M.bit_length() - 1, walk_counts(k, M), k)


def walk_distance(k: int, M: int) -> DyadicRational:
    return distance_from_uniform(exact_walk_distribution(k, M))


def fourier_mixing_bound(k: int, M: int) -> mpmath.mpf:
    """exp(-k pi^2 / 2M^2) / (2 (1 - exp(-3 k pi^2 / 2M^2)))."""
    if k < 1 or M < 2:
        raise ValueError("need k >= 1 and M >= 2")
    with mpmath.workprec(PREC):
        x = mpmath.mpf(k) * mpmath.pi**2 / (2 * mpmath.mpf(M) ** 2)
        return mpmath.exp(-x) / (2 * (1 - mpmath.exp(-3 * x)))


def simplified_mixing_bound(k: int, M: int) -> mpmath.mpf:
    """exp(-k pi^2 / 2M^2)."""
    with mpmath.workprec(PREC):
        return mpmath.exp(-mpmath.mpf(k) * mpmath.pi**2 / (2 * mpmath.mpf(M) ** 2))


def fourier_cosine_sum_bound(k: int, M: int) -> mpmath.mpf:
    """(1/4) * sum_{j=1}^{M-1} (1/2 + cos(2 pi j / M) / 2)^k, for even M."""
    if M < 2 or M % 2:
        raise ValueError(f"M must be even, got {M}")
    with mpmath.workprec(PREC):
        total = mpmath.mpf(0)
        for j in range(1, M):
            total += (mpmath.mpf(1) / 2 + mpmath.cos(2 * mpmath.pi * j / M) / 2) ** k
        return total / 4


def fourier_l2_bound(k: int, M: int) -> mpmath.mpf:
    """sqrt of :func:`fourier_cosine_sum_bound`.

    Cauchy-Schwarz and Plancherel bound the *square* of the total variation
    distance by the cosine sum, so its square root bounds the distance.
    """
    with mpmath.workprec(PREC):
        return mpmath.sqrt(fourier_cosine_sum_bound(k, M))


@dataclass(frozen=True)
class BoundReport:
    bound_value: mpmath.mpf
    exact_value: DyadicRational
    parameters: dict
    extras: dict = field(default_factory=dict)

    @property
    def satisfied(self) -> bool:
        return _mpf_up(self.exact_value) <= self.bound_value

    def to_json(self) -> dict:
        out = {
            "parameters": self.parameters,
            "exact": self.exact_value.to_json(),
            "bound": mpmath.nstr(self.bound_value, 15),
            "satisfied": self.satisfied,
        }
        for key, val in self.extras.items():
            out[key] = mpmath.nstr(val, 15) if isinstance(val, mpmath.mpf) else val
        return out


def walk_bound_report(k: int, M: int) -> BoundReport:
    exact = walk_distance(k, M)
    extras = {"closed_form": fourier_mixing_bound(k, M)}
    if M % 2 == 0:
        extras["cosine_sum"] = fourier_cosine_sum_bound(k, M)
        extras["l2_bound"] = fourier_l2_bound(k, M)
        extras["cosine_sum_satisfied"] = bool(_mpf_up(exact) <= extras["cosine_sum"])
    return BoundReport(extras["closed_form"], exact, {"k": k, "M": M}, extras)


@dataclass(frozen=True)
class SandwichRow:
    k: int
    M: int
    exact: DyadicRational
    cosine_sum: mpmath.mpf
    closed_form: mpmath.mpf
    simplified: mpmath.mpf

    @property
    def exact_le_cosine_sum(self) -> bool:
        return _mpf_up(self.exact) <= self.cosine_sum

    @property
    def cosine_sum_le_closed_form(self) -> bool:
        return self.cosine_sum <= self.closed_form

    @property
    def closed_form_le_simplified(self) -> bool:
        return self.closed_form <= self.simplified

    @property
    def exact_le_closed_form(self) -> bool:
        return _mpf_up(self.exact) <= self.closed_form

    @property
    def satisfied(self) -> bool:
        return self.exact_le_cosine_sum and self.cosine_sum_le_closed_form and self.closed_form_le_simplified


def log_grid(lo: int, hi: int, points: int) -> list[int]:
    """About ``points`` distinct integers spread geometrically over [lo, hi]."""
    if points < 2 or lo >= hi:
        return [lo]
    ratio = (hi / lo) ** (1 / (points - 1))
    vals = sorted({min(hi, max(lo, round(lo * ratio**i))) for i in range(points)})
    return vals


def sandwich_rows(M_values=(2, 4, 8, 16), k_max: int = 1 << 20, points: int = 12) -> list[SandwichRow]:
    rows = []
    for M in M_values:
        for k in log_grid(M * M, k_max, points):
            rows.append(
                SandwichRow(
                    k, M,
                    walk_distance(k, M),
                    fourier_cosine_sum_bound(k, M),
                    fourier_mixing_bound(k, M),
                    simplified_mixing_bound(k, M),
                )
            )
    return rows


def sandwich_csv(rows: list[SandwichRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["k", "M", "exact", "cosine_sum", "closed_form", "satisfied"])
    for r in rows:
        w.writerow([
            r.k, r.M, _fmt(r.exact), mpmath.nstr(r.cosine_sum, 12),
            mpmath.nstr(r.closed_form, 12), str(r.satisfied).lower(),
        ])
    return buf.getvalue()


def _fmt(value: DyadicRational) -> str:
    return format_decimal(value)


# ---------------------------------------------------------------------------
# Chernoff bound and its converse


def chernoff_upper(t: int, epsilon) -> mpmath.mpf:
    """2 exp(-t eps^2 / 2); vacuous when >= 1 but returned as is."""
    eps = Fraction(epsilon) if not isinstance(epsilon, float) else epsilon
    if t < 1 or not 0 < eps < 1:
        raise ValueError("need t >= 1 and 0 < epsilon < 1")
    with mpmath.workprec(PREC):
        e = mpmath.mpf(eps.numerator) / eps.denominator if isinstance(eps, Fraction) else mpmath.mpf(eps)
        return 2 * mpmath.exp(-t * e**2 / 2)


def binomial_tail_exact(t: int, epsilon) -> DyadicRational:
    """Pr[|X/t - 1/2| >= eps] for X ~ Binomial(t, 1/2), exactly."""
    eps = Fraction(epsilon)
    if t < 1:
        raise ValueError("t must be positive")
    if not 0 <= eps <= Fraction(1, 2):
        raise ValueError(f"need 0 <= epsilon <= 1/2, got {epsilon}")
    # |j/t - 1/2| >= eps  <=>  |2j - t| >= 2 t eps
    thresh = 2 * t * eps
    total = sum(comb(t, j) for j in range(t + 1) if abs(2 * j - t) >= thresh)
    return DyadicRational(total, t)


def converse_case(t: int, epsilon) -> int:
    """1 if eps < 1/(4 sqrt t), 2 if that <= eps < 1/5, else 3."""
    eps = Fraction(epsilon)
    # eps < 1/(4 sqrt t)  <=>  16 t eps^2 < 1
    if 16 * t * eps * eps < 1:
        return 1
    if eps < Fraction(1, 5):
        return 2
    return 3


def neg_log2_ceil(value: DyadicRational) -> int:
    """Smallest integer e >= 0 with value >= 2**-e (value in (0, 1])."""
    if not 0 < value <= 1:
        raise ValueError("value must lie in (0, 1]")
    e = 0
    while value < DyadicRational(1, e):
        e += 1
    return e


@dataclass(frozen=True)
class ConverseRow:
    t: int
    epsilon: Fraction
    case: int
    tail: DyadicRational
    exponent: int  # smallest e with tail >= 2**-e
    chernoff: mpmath.mpf

    @property
    def t_eps2(self) -> Fraction:
        return self.t * self.epsilon**2

    def holds_with(self, c: Fraction) -> bool:
        """tail >= 2**-ceil(c t eps^2)."""
        e = math.ceil(c * self.t_eps2)
        return self.tail >= DyadicRational(1, e)


@dataclass(frozen=True)
class ConverseReport:
    rows: list
    fitted_c: Fraction
    fitted_c_by_t: dict
    case1_min_tail: DyadicRational | None

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t", "eps", "case", "tail", "neg_log2_tail_ceil", "chernoff_upper", "holds_fitted_c"])
        for r in self.rows:
            holds = r.holds_with(self.fitted_c) if r.case > 1 else ""
            w.writerow([r.t, str(r.epsilon), r.case, _fmt(r.tail), r.exponent,
                        mpmath.nstr(r.chernoff, 12), str(holds).lower()])
        return buf.getvalue()

    def to_json(self) -> dict:
        return {
            "fitted_c": str(self.fitted_c),
            "fitted_c_decimal": float(self.fitted_c),
            "fitted_c_by_t": {str(t): str(c) for t, c in self.fitted_c_by_t.items()},
            "case1_min_tail": None if self.case1_min_tail is None else self.case1_min_tail.to_json(),
        }


def converse_regime_report(t_grid, eps_grid, budget: int = 1 << 24) -> ConverseReport:
    """Exact tails on a grid, classified by case, with the fitted lower-bound constant.

    The fitted ``c`` is the least value of the form e / (t eps^2) that makes
    ``tail >= 2**-ceil(c t eps^2)`` hold at every grid point in cases 2 and 3.
    """
    work = sum(t for t in t_grid) * len(list(eps_grid))
    if work > budget:
        raise BudgetExceeded(f"converse grid needs {work} steps, budget is {budget}")
    rows = []
    for t in t_grid:
        for eps in eps_grid:
            eps = Fraction(eps)
            tail = binomial_tail_exact(t, eps)
            rows.append(ConverseRow(t, eps, converse_case(t, eps), tail, neg_log2_ceil(tail),
                                    chernoff_upper(t, eps) if eps > 0 else mpmath.mpf(2)))
    fit_rows = [r for r in rows if r.case > 1 and r.t_eps2 > 0]
    fitted = max((Fraction(r.exponent) / r.t_eps2 for r in fit_rows), default=Fraction(0))
    by_t = {}
    for r in fit_rows:
        c = Fraction(r.exponent) / r.t_eps2
        by_t[r.t] = max(by_t.get(r.t, Fraction(0)), c)
    case1 = [r.tail for r in rows if r.case == 1]
    return ConverseReport(rows, fitted, dict(sorted(by_t.items())), min(case1) if case1 else None)


# ---------------------------------------------------------------------------
# structural threshold predictions


def threshold_predictions(n: int, epsilon, m: int = 1, constants: dict | None = None) -> dict:
    """Critical k values implied by the random-function results, additive constants explicit.

    ``constants`` may set ``rf``, ``rf_failure``, ``static`` and ``adaptive``
    (all default 0).  These are structural predictions, not calibrated ones.
    """
    c = {"rf": 0.0, "rf_failure": 0.0, "static": 0.0, "adaptive": 0.0}
    c.update(constants or {})
    log_inv = -math.log2(float(epsilon))
    rf = math.log2(n) + 2 * log_inv + c["rf"]

    rf_refined = next(
        (k for k in range(1, n + 1) if k >= refined_rf_term(n, k) + 2 * log_inv + c["rf"]), None
    )
    rf_failure = max(
        (k for k in range(1, n) if k <= math.log2(n - k) + 2 * log_inv - c["rf_failure"]),
        default=None,
    )
    return {
        "n": n,
        "epsilon": float(epsilon),
        "m": m,
        "constants": c,
        "rf_existence_k": rf,
        "rf_existence_k_refined": rf_refined,
        "rf_failure_max_k": rf_failure,
        "static_erf_k": m + 2 * log_inv + c["static"],
        "adaptive_erf_k": math.log2(math.log2(n)) + 2 * log_inv + c["adaptive"],
    }


def refined_rf_term(n: int, k: int) -> float:
    """max(log2(n - k), log2 log2 C(n, k)), with log2 0 read as 0."""
    a = math.log2(n - k) if n > k else 0.0
    cnk = comb(n, k)
    b = math.log2(math.log2(cnk)) if cnk > 2 else 0.0
    return max(a, b)
