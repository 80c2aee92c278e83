"""Exact binomial tails next to the Chernoff upper bound and the converse regimes."""

from fractions import Fraction

from obfx.analysis import binomial_tail_exact, chernoff_upper, converse_regime_report

for t in (16, 64, 256):
    e = Fraction(1, 4)
    print(f"t={t:3d} eps=1/4 tail={float(binomial_tail_exact(t, e)):.3e} chernoff={float(chernoff_upper(t, e)):.3e}")

rep = converse_regime_report([1 << i for i in range(3, 9)], [Fraction(1, 8), Fraction(1, 4)])
print("fitted converse constant c =", rep.fitted_c)
