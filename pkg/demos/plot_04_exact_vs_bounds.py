"""
Exact moments against the bounds
================================

On small graphs every assignment can be enumerated, which gives the exact
bias and mean squared interference error of a design.  The bounds sit above.
"""

from netdesign.design import ExperimentConfig, partition_by_degree
from netdesign.graph import gen_erdos_renyi
from netdesign.interference import NormalizedLinear, lipschitz_constants
from netdesign.outcome import sample_gaussian_model
from netdesign.oracle import exact_moments_blocked, exact_moments_crd
from netdesign.bounds import bias_bound_lipschitz, mse_bound_general

g = gen_erdos_renyi(12, 0.5, seed=11)
cfg = ExperimentConfig.for_graph(g)
spec = NormalizedLinear(1.0)
model = sample_gaussian_model(g, spec, seed=1)

P = partition_by_degree(g, cfg)
blocked = exact_moments_blocked(g, P, cfg, model)
crd = exact_moments_crd(g, cfg, model)
print("degree blocks: E xi %+.4f  rmse %.4f  (%d assignments)" % (blocked.mean_xi, blocked.rmse_xi, blocked.count))
print("CRD:           E xi %+.4f  rmse %.4f  (%d assignments)" % (crd.mean_xi, crd.rmse_xi, crd.count))

k_v = lipschitz_constants(spec, g)
print("bias bound %.4f, rmse bound %.4f" % (bias_bound_lipschitz(g, P, k_v), mse_bound_general(g, P, 1.0, 1.0, cfg)))
