import itertools

import numpy as np
import pytest
from hypothesis import given, strategies as st

from corpus import random_table
from netdesign.design import TypePartition
from netdesign.graph import build_graph, complete_graph, cycle_graph, gen_preferential_attachment
from netdesign.interference import (
    BRUTE_FORCE_DEGREE_CAP,
    InterferenceError,
    LipschitzBudget,
    Linear,
    NormalizedLinear,
    SymmetricTable,
    ThresholdCount,
    ThresholdFraction,
    Typed,
    eval_interference,
    format_spec,
    lipschitz_constant,
    lipschitz_norm,
    metric_dK,
    parse_spec,
    weight,
    weight_bruteforce,
)

STAR = build_graph(6, [(0, v) for v in range(1, 6)])  # centre degree 5
SPECS = [Linear(0.7), NormalizedLinear(1.3), ThresholdCount(0.9, 2), ThresholdFraction(1.1, 0.5)]


def test_linear_value():
    assert eval_interference(Linear(0.5), STAR, 0, 3) == 1.5


@pytest.mark.parametrize("spec", SPECS)
def test_empty_treated_set_is_zero(spec):
    assert eval_interference(spec, STAR, 0, 0) == 0
    assert eval_interference(spec, STAR, 1, 0) == 0


def test_threshold_count_value():
    assert eval_interference(ThresholdCount(1.0, 2), STAR, 0, 5) == 2


def test_eval_out_of_range():
    with pytest.raises(InterferenceError):
        eval_interference(Linear(1.0), STAR, 1, 2)


def test_lipschitz_constants():
    g = STAR
    assert lipschitz_constant(Linear(0.4), g, 0) == pytest.approx(0.4 * 5)
    assert lipschitz_constant(NormalizedLinear(0.4), g, 0) == 0.4
    assert lipschitz_constant(NormalizedLinear(0.4), g, 3) == 0.4
    zero = SymmetricTable.from_function(lambda a, b: 0.0, g.degrees)
    assert lipschitz_constant(zero, g, 0) == 0


def test_weights():
    assert weight(Linear(0.3), STAR, 0, 2) == pytest.approx(0.3)
    assert weight(Linear(0.3), STAR, 1, 2) == 0
    assert weight(ThresholdCount(0.8, 2), STAR, 0, 4) == pytest.approx(0.8)


def test_metric_examples():
    b = LipschitzBudget(0.0, 1.0)
    assert metric_dK(b, 2, (1, 1), (0, 2)) == 0.5
    assert metric_dK(LipschitzBudget(), 4, (1, 2), (1, 2)) == 0
    with pytest.raises(InterferenceError):
        metric_dK(b, 2, (0, 0), (0, 2))
    with pytest.raises(InterferenceError):
        LipschitzBudget(1.0, 0.0)


bideg = st.tuples(st.integers(0, 6), st.integers(0, 6)).filter(lambda u: sum(u) > 0)


@given(bideg, bideg, bideg, st.floats(0, 3), st.floats(0.01, 3))
def test_metric_axioms(u, v, w, K1, K2):
    b = LipschitzBudget(K1, K2)
    d = lambda x, y: metric_dK(b, 12, x, y)
    assert d(u, v) == pytest.approx(d(v, u), abs=1e-15)
    assert d(u, w) <= d(u, v) + d(v, w) + 1e-12


def _subset_lipschitz_ok(spec, d):
    K = spec.lipschitz(d)
    f = lambda S: spec.f(len(S), d - len(S))
    subsets = [frozenset(c) for k in range(d + 1) for c in itertools.combinations(range(d), k)]
    return all(abs(f(A) - f(B)) <= K * len(A ^ B) / d + 1e-12 for A in subsets for B in subsets)


@pytest.mark.parametrize("spec", SPECS)
@pytest.mark.parametrize("d", [1, 2, 3, 5, 6])
def test_lipschitz_over_all_subset_pairs(spec, d):
    assert _subset_lipschitz_ok(spec, d)


@pytest.mark.parametrize("spec", SPECS)
def test_lipschitz_by_size_up_to_12(spec):
    # symmetric f depends on |A| only and min |A Δ B| = ||A| - |B||, so size pairs are exhaustive
    for d in range(1, 13):
        K = spec.lipschitz(d)
        for a, c in itertools.product(range(d + 1), repeat=2):
            assert abs(spec.f(a, d - a) - spec.f(c, d - c)) <= K * abs(a - c) / d + 1e-12


@given(st.integers(0, 2**31))
def test_table_lipschitz_is_tight(seed):
    rng = np.random.default_rng(seed)
    g = gen_preferential_attachment(10, 1.0, 2, seed)
    spec = random_table(g, rng)
    for v in range(g.num_vertices):
        d = g.degree(v)
        K = lipschitz_constant(spec, g, v)
        ratios = [abs(spec.f(a + 1, d - a - 1) - spec.f(a, d - a)) * d for a in range(d)]
        assert max(ratios) == pytest.approx(K)
        if d <= 6:
            assert _subset_lipschitz_ok(spec, d)


@given(st.integers(0, 2**31))
def test_weight_bounded_by_lipschitz_over_degree(seed):
    rng = np.random.default_rng(seed)
    g = gen_preferential_attachment(12, 1.0, 2, seed)
    for spec in SPECS + [random_table(g, rng)]:
        for u, v in g.edges():
            for a, b in ((u, v), (v, u)):
                assert weight(spec, g, a, b) <= lipschitz_constant(spec, g, a) / g.degree(a) + 1e-12


@pytest.mark.parametrize("spec", SPECS)
def test_weight_matches_bruteforce(spec):
    g = STAR
    nb = g.neighbors(0)
    fv = lambda S: spec.f(len(S), len(nb) - len(S))
    for w in nb:
        assert weight(spec, g, 0, w) == pytest.approx(weight_bruteforce(fv, nb, w))


def test_weight_bruteforce_cap():
    with pytest.raises(InterferenceError):
        weight_bruteforce(lambda S: 0.0, range(BRUTE_FORCE_DEGREE_CAP + 1), 0)


def test_weight_bruteforce_asymmetric():
    # set function that cares which neighbour is treated
    fv = lambda S: 2.0 * (1 in S) + 0.5 * len(S)
    assert weight_bruteforce(fv, [1, 2, 3], 1) == 2.5
    assert weight_bruteforce(fv, [1, 2, 3], 2) == 0.5


def test_table_rules(tmp_path):
    with pytest.raises(InterferenceError):
        SymmetricTable({(0, 3): 1.0})
    with pytest.raises(InterferenceError):
        SymmetricTable({(-1, 3): 1.0})
    t = SymmetricTable({(1, 1): 0.5, (2, 0): -1.0})
    assert t.f(0, 2) == 0
    with pytest.raises(InterferenceError):
        t.f(1, 3)
    with pytest.raises(InterferenceError):
        t.check_domain([3])
    t.write(tmp_path / "t.txt")
    assert (tmp_path / "t.txt").read_text() == "1 1 0.5\n2 0 -1.0\n"
    assert SymmetricTable.read(tmp_path / "t.txt") == t


def test_typed_dispatch():
    g = cycle_graph(4)
    types = TypePartition.from_parts([[0, 1], [2, 3]])
    spec = Typed(types, (Linear(1.0), Linear(3.0)))
    assert eval_interference(spec, g, 0, 2) == 2.0
    assert eval_interference(spec, g, 3, 2) == 6.0
    assert lipschitz_constant(spec, g, 2) == 6.0
    with pytest.raises(InterferenceError):
        Typed(types, (Linear(1.0),))


@pytest.mark.parametrize("spec", SPECS)
def test_spec_text_roundtrip(spec):
    assert parse_spec(format_spec(spec)) == spec


def test_parse_spec_errors():
    assert parse_spec("zero") == Linear(0.0)
    for bad in ["linear", "threshold-count:1", "wavy:1"]:
        with pytest.raises(InterferenceError):
            parse_spec(bad)


def test_lipschitz_norm():
    g = gen_preferential_attachment(12, 1.0, 2, 3)
    # gamma * |fraction difference| <= gamma * d_K / K2, attained within a degree class
    assert lipschitz_norm(NormalizedLinear(0.6), g, LipschitzBudget(1.0, 1.0)) == pytest.approx(0.6)
    assert lipschitz_norm(Linear(0.0), g, LipschitzBudget()) == 0
    # degree-only differences at d_K distance 0 when K1 = 0
    assert lipschitz_norm(Linear(1.0), g, LipschitzBudget(0.0, 1.0)) == float("inf")
    assert lipschitz_norm(NormalizedLinear(1.0), complete_graph(5), LipschitzBudget(0.0, 2.0)) == pytest.approx(0.5)
