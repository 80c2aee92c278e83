"""Seeded sweep showing where random functions start to satisfy each property."""

from fractions import Fraction

from obfx.experiments import SweepConfig, run_sweep

common = dict(n=8, m=1, epsilon=Fraction(1, 4), k_values=tuple(range(1, 9)), trials=60, master_seed=0, workers=4)
for prop in ("rf", "serf", "aerf"):
    res = run_sweep(SweepConfig(prop, **common))
    fractions = " ".join(f"{float(r.fraction):.2f}" for r in res.rows)
    print(f"{prop:4s} crossing k={res.crossing_point()}  fractions by k: {fractions}")
