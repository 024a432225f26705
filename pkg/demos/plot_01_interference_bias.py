"""
Interference bias of the difference-in-means estimator
======================================================

Spillover between treated and control units biases the naive estimator.
Here we measure that bias on a ring and compare it with the
worst-case bound.
"""

import numpy as np

from netdesign.design import ExperimentConfig, crd_mask, Treatment
from netdesign.graph import cycle_graph
from netdesign.interference import Linear, lipschitz_constants
from netdesign.outcome import sample_gaussian_model, simulate_outcomes, neyman_estimate, xi
from netdesign.bounds import bias_bound_crd

# a 12-cycle, half the vertices treated
g = cycle_graph(12)
cfg = ExperimentConfig.for_graph(g, p=1, r=2)
model = sample_gaussian_model(g, Linear(1.0), seed=3)

rng = np.random.default_rng(0)
T = Treatment.from_mask(crd_mask(cfg, rng), cfg)
y = simulate_outcomes(model, g, T)
print("treated:", sorted(T.treated))
print("estimate %.3f  true mean effect %.3f" % (neyman_estimate(y, T), model.t.mean()))
print("interference error xi = %.3f" % xi(model, g, T))

# the completely randomized design has a closed-form bias bound
k_v = lipschitz_constants(Linear(1.0), g)
print("CRD bias bound: %.3f" % bias_bound_crd(float(k_v.mean()), cfg.r, cfg.n))
