"""
Perfect quasi-colorings
=======================

A treated set is a perfect quasi-coloring when treated and control vertices
see the same mix of treated and control neighbors, degree by degree.  Then
the interference terms cancel for every symmetric spillover.
"""

from netdesign.design import ExperimentConfig, Treatment
from netdesign.graph import cycle_graph, path_graph, gen_copies_graph
from netdesign.quasicoloring import bidegree_measure, is_perfect_quasicoloring, find_perfect_quasicoloring

# on a square, adjacent pairs work and the diagonal does not
sq = cycle_graph(4)
print("square {0,1}:", is_perfect_quasicoloring(sq, {0, 1}))
print("square {0,2}:", is_perfect_quasicoloring(sq, {0, 2}))
cfg = ExperimentConfig.for_graph(sq)
print("bidegree measure of {0,2}:", bidegree_measure(sq, Treatment(frozenset({0, 2}), cfg)).atoms)

# the hexagon has none at all
print("hexagon witness:", find_perfect_quasicoloring(cycle_graph(6)))

# two crossed copies of any graph always have one
g, parts, Q = gen_copies_graph(path_graph(3))
print("copies of a 3-path:", sorted(Q), is_perfect_quasicoloring(g, Q))
