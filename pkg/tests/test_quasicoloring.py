import itertools
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from corpus import random_connected_er, random_spec, random_model, random_table
from netdesign.design import ExperimentConfig, Partition, Treatment, TypePartition, crd
from netdesign.graph import (
    IsolatedVertexWarning,
    build_graph,
    complete_graph,
    cycle_graph,
    gen_copies_graph,
    gen_preferential_attachment,
    path_graph,
)
from netdesign.interference import LipschitzBudget, Linear, SymmetricTable, Typed, lipschitz_norm, metric_dK
from netdesign.oracle import wasserstein_dual_lp
from netdesign.outcome import xi
from netdesign.quasicoloring import (
    BidegreeMeasure,
    QuasiColoringError,
    bidegree_measure,
    c_p,
    domain_diameter,
    find_perfect_quasicoloring,
    is_perfect_quasicoloring,
    typed_bidegree_measures,
    wasserstein_norm,
    xi_via_measure,
)

SQUARE = cycle_graph(4)
HALF = ExperimentConfig(1, 2, 2)


def _T(g, vs, p=1, r=2):
    return Treatment(frozenset(vs), ExperimentConfig.for_graph(g, p, r))


def test_square_colorings():
    assert bidegree_measure(SQUARE, _T(SQUARE, {0, 1})).is_zero()
    D = bidegree_measure(SQUARE, _T(SQUARE, {0, 2}))
    assert D.atoms == {(0, 2): 1.0, (2, 0): -1.0}
    assert is_perfect_quasicoloring(SQUARE, {0, 1})
    assert not is_perfect_quasicoloring(SQUARE, {0, 2})


def test_isolated_vertex_rejected():
    with pytest.warns(IsolatedVertexWarning):
        g = build_graph(4, [(0, 1), (1, 2)])
    with pytest.raises(ValueError):
        bidegree_measure(g, _T(g, {0, 1}))


def test_hexagon_has_no_perfect_coloring():
    g = cycle_graph(6)
    assert not any(is_perfect_quasicoloring(g, Q) for Q in itertools.combinations(range(6), 3))
    assert find_perfect_quasicoloring(g) is None


def test_size_preconditions():
    with pytest.raises(QuasiColoringError):
        is_perfect_quasicoloring(SQUARE, {0})
    with pytest.raises(QuasiColoringError):
        is_perfect_quasicoloring(cycle_graph(5), {0, 1})
    with pytest.raises(QuasiColoringError):
        find_perfect_quasicoloring(cycle_graph(26))


def test_find_on_square_and_copies():
    assert find_perfect_quasicoloring(SQUARE) == {0, 1}
    g, parts, Q = gen_copies_graph(path_graph(2))
    W = find_perfect_quasicoloring(g)
    assert W is not None and is_perfect_quasicoloring(g, W)
    W = find_perfect_quasicoloring(g, TypePartition.from_parts(parts))
    assert W is not None and is_perfect_quasicoloring(g, W, TypePartition.from_parts(parts))


def _brute_force_smallest(g, types=None):
    N = g.num_vertices
    for Q in itertools.combinations(range(N), N // 2):
        if is_perfect_quasicoloring(g, Q, types):
            return frozenset(Q)
    return None


@given(st.integers(0, 2**31), st.sampled_from([4, 6, 8, 10]))
def test_search_matches_brute_force(seed, N):
    rng = np.random.default_rng(seed)
    g = random_connected_er(N, float(rng.uniform(0.2, 0.8)), rng)
    assert find_perfect_quasicoloring(g) == _brute_force_smallest(g)


@given(st.integers(0, 2**31))
def test_typed_search_matches_brute_force(seed):
    rng = np.random.default_rng(seed)
    g = random_connected_er(8, float(rng.uniform(0.2, 0.8)), rng)
    types = TypePartition.from_parts(rng.permutation(8).reshape(2, 4).tolist())
    assert find_perfect_quasicoloring(g, types) == _brute_force_smallest(g, types)


@pytest.mark.parametrize("h", [path_graph(2), path_graph(3), complete_graph(3)])
def test_copies_canonical_q_perfect(h):
    g, parts, Q = gen_copies_graph(h)
    types = TypePartition.from_parts(parts)
    assert is_perfect_quasicoloring(g, Q)
    assert is_perfect_quasicoloring(g, Q, types)
    T = _T(g, Q)
    assert all(D.is_zero() for D in typed_bidegree_measures(g, T, types).values())


@given(st.integers(0, 2**31))
def test_measure_identities(seed):
    rng = np.random.default_rng(seed)
    r = int(rng.integers(2, 4))
    g = random_connected_er(r * int(rng.integers(2, 5)), 0.5, rng)
    cfg = ExperimentConfig.for_graph(g, int(rng.integers(1, r)), r)
    T = crd(g, cfg, rng)
    D = bidegree_measure(g, T)
    assert abs(D.total_mass) < 1e-12
    degs = set(int(d) for d in g.degrees)
    assert all(a + b in degs for a, b in D.atoms)
    single = typed_bidegree_measures(g, T, TypePartition.single(g.num_vertices))
    assert single[0].atoms == pytest.approx(D.atoms)
    spec = random_spec(g, rng)
    m = random_model(g, spec, rng)
    assert xi_via_measure(spec, D) == pytest.approx(xi(m, g, T), abs=1e-12)


@given(st.integers(0, 2**31))
def test_typed_measures_add_up(seed):
    rng = np.random.default_rng(seed)
    g = random_connected_er(12, 0.4, rng)
    cfg = ExperimentConfig.for_graph(g)
    types = TypePartition.from_parts(rng.permutation(12).reshape(3, 4).tolist())
    z = np.zeros(12, dtype=bool)
    for part in types.parts:
        z[list(rng.choice(part, 2, replace=False))] = True
    T = Treatment.from_mask(z, cfg)
    parts = typed_bidegree_measures(g, T, types)
    total = BidegreeMeasure({})
    for D in parts.values():
        assert abs(D.total_mass) < 1e-12
        total = total + D
    assert (total + -bidegree_measure(g, T)).is_zero(1e-12)
    tables = tuple(random_table(g, rng) for _ in types.parts)
    spec = Typed(types, tables)
    m = random_model(g, spec, rng)
    assert xi_via_measure(spec, parts) == pytest.approx(xi(m, g, T), abs=1e-12)


def test_typed_count_violation():
    g = cycle_graph(4)
    types = TypePartition.from_parts([[0, 1], [2, 3]])
    with pytest.raises(QuasiColoringError):
        typed_bidegree_measures(g, _T(g, {0, 1}), types)


@given(st.integers(0, 2**31), st.sampled_from([6, 8, 10]))
def test_perfect_equivalences(seed, N):
    rng = np.random.default_rng(seed)
    g = random_connected_er(N, float(rng.uniform(0.2, 0.9)), rng)
    Q = frozenset(rng.choice(N, N // 2, replace=False).tolist())
    T, C = _T(g, Q), _T(g, set(range(N)) - Q)
    DQ, DC = bidegree_measure(g, T), bidegree_measure(g, C)
    assert DQ.swapped().atoms == pytest.approx((-DC).atoms)
    perfect = is_perfect_quasicoloring(g, Q)
    assert perfect == is_perfect_quasicoloring(g, set(range(N)) - Q) == DQ.is_zero()
    # xi vanishes for every indicator table exactly when Q is perfect
    domain = [(a, d - a) for d in set(int(x) for x in g.degrees) for a in range(1, d + 1)]
    degs = g.degrees
    indicator = lambda u: SymmetricTable.from_function(lambda a, b: float((a, b) == u), degs)
    zero_everywhere = all(xi_via_measure(indicator(u), D) == 0 for u in domain for D in (DQ, DC))
    assert zero_everywhere == perfect


def test_measure_xi_on_diagonal_square():
    gamma = 0.7
    D = bidegree_measure(SQUARE, _T(SQUARE, {0, 2}))
    assert xi_via_measure(Linear(gamma), D) == pytest.approx(-2 * gamma)
    assert xi_via_measure(Linear(gamma), BidegreeMeasure({})) == 0


def test_wasserstein_simple_cases():
    b = LipschitzBudget(1.0, 2.0)
    assert wasserstein_norm(BidegreeMeasure({}), b, 3).value == 0
    u, v = (1, 2), (3, 0)
    D = BidegreeMeasure({u: -0.75, v: 0.75})
    res = wasserstein_norm(D, b, 3)
    assert res.value == pytest.approx(0.75 * metric_dK(b, 3, u, v))
    assert res.plan == [(v, u, 0.75)]
    with pytest.raises(QuasiColoringError):
        wasserstein_norm(BidegreeMeasure({u: 1.0}), b, 3)


@given(st.integers(0, 2**31))
def test_wasserstein_matches_dual_lp(seed):
    rng = np.random.default_rng(seed)
    dmax = 5
    k = int(rng.integers(2, 9))
    pts = {(int(a), int(d - a)) for d, a in zip(rng.integers(1, dmax + 1, k), rng.integers(0, 6, k)) if a <= d}
    pts = sorted(pts)
    if len(pts) < 2:
        return
    mass = rng.normal(size=len(pts))
    mass -= mass.mean()
    D = BidegreeMeasure(dict(zip(pts, mass.tolist())))
    b = LipschitzBudget(float(rng.uniform(0, 2)), float(rng.uniform(0.1, 2)))
    res = wasserstein_norm(D, b, dmax)
    assert res.value == pytest.approx(wasserstein_dual_lp(D, b, dmax), abs=1e-9)
    # plan moves the positive part onto the negative part
    out, into = {}, {}
    for s, t, m in res.plan:
        out[s] = out.get(s, 0) + m
        into[t] = into.get(t, 0) + m
    for u, m in D.atoms.items():
        if m > 0:
            assert out[u] == pytest.approx(m)
        else:
            assert into[u] == pytest.approx(-m)


@given(st.integers(0, 2**31))
def test_xi_bounded_by_norm_times_wasserstein(seed):
    rng = np.random.default_rng(seed)
    g = random_connected_er(10, float(rng.uniform(0.2, 0.8)), rng)
    cfg = ExperimentConfig.for_graph(g)
    b = LipschitzBudget(float(rng.uniform(0.1, 2)), float(rng.uniform(0.1, 2)))
    spec = random_spec(g, rng)
    T = crd(g, cfg, rng)
    D = bidegree_measure(g, T)
    W = wasserstein_norm(D, b, int(g.degrees.max())).value
    assert abs(xi_via_measure(spec, D)) <= lipschitz_norm(spec, g, b) * W + 1e-9
    assert W <= 0.5 * domain_diameter(b, g) * D.total_variation + 1e-12


def test_cp_examples():
    g = complete_graph(6)
    cfg = ExperimentConfig.for_graph(g)
    assert c_p(Partition.from_blocks([[0, 3], [1, 5], [2, 4]]), g, cfg) == 0
    g = build_graph(6, [(0, 1), (0, 2), (0, 3), (1, 4), (2, 5)])
    P = Partition.from_blocks([[0, 3], [1, 2], [4, 5]])
    assert c_p(P, g, ExperimentConfig.for_graph(g)) == pytest.approx(4 / 3)


def test_measure_file_roundtrip(tmp_path):
    D = BidegreeMeasure({(0, 2): 0.5, (1, 1): -0.25, (2, 0): -0.25})
    D.write(tmp_path / "d.txt")
    assert (tmp_path / "d.txt").read_text() == "0 2 0.5\n1 1 -0.25\n2 0 -0.25\n"
    assert BidegreeMeasure.read(tmp_path / "d.txt") == D
