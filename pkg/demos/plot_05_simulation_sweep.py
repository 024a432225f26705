"""
Design comparison on random graphs
==================================

Monte Carlo log-MSE of the completely randomized design against degree
blocking, on preferential-attachment graphs with growing degree skew.
Results do not depend on the worker count.
"""

from netdesign.simulate import RunConfig, SweepConfig, sweep, rows_to_csv

base = RunConfig(family="pa", N=100, m=2, designs=("crd", "pbd-random"), replications=1000, graph_seed=1)
rows = sweep(SweepConfig(base=base, pow=(0.5, 1.0, 2.0)), workers=4)
for r in rows:
    print("pow=%.1f  %-10s log_mse=%.3f" % (r["density_or_pow"], r["design"], r["log_mse"]))

# the same rows as CSV
print(rows_to_csv(rows)[:200])
