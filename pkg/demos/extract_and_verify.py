"""Build the cycle-walk extractor and check it exactly against every bit-fixing source."""

from obfx.extractors import cycle_walk_table, params_for, parity_table
from obfx.verify import verify

params = params_for(16, 0.25)
print(f"k=16, eps=1/4 -> m={params.m} output bits on a cycle of size {params.M}")

f = cycle_walk_table(8, params.m)
for prop in ("rf", "serf", "aerf"):
    report = verify(f, prop, 4)
    print(f"cycle walk n=8 m={params.m} k=4 {prop:4s} worst distance {report.worst_distance}")

# parity is perfect for every k
print("parity n=8 k=1 rf distance", verify(parity_table(8), "rf", 1).worst_distance)
