"""
Blocking on degree
==================

Sorting vertices by degree and randomizing within consecutive blocks keeps
treated and control degree profiles close.  The transport constant C_P
stays at most 2 for the sorted partition.
"""

from netdesign.design import ExperimentConfig, partition_by_degree
from netdesign.graph import gen_preferential_attachment
from netdesign.quasicoloring import c_p

g = gen_preferential_attachment(60, 1.5, 2, seed=7)
cfg = ExperimentConfig.for_graph(g, p=1, r=2)
P = partition_by_degree(g, cfg)
print("first blocks:", P.blocks[:5])
print("degrees in them:", [[int(g.degrees[v]) for v in b] for b in P.blocks[:5]])
print("C_P = %.3f" % c_p(P, g, cfg))
