import random
from fractions import Fraction as F

import pytest
from hypothesis import given, strategies as st

from densecomp import measure as ms
from densecomp.descriptions import BOX
from densecomp.measure import DIVERGE, BoundedUseFunctional, CylinderSet, Leaf, Node

from reference import cylinder_measure, outcome_masses_bruteforce

words = st.text("01", max_size=6)
cylinders = st.lists(words, max_size=5)


def test_measure_examples():
    assert CylinderSet.whole().measure == 1
    assert CylinderSet.empty().measure == 0
    assert CylinderSet.of("010").measure == F(1, 8)
    assert CylinderSet.of("0", "10").measure == F(3, 4)
    assert CylinderSet.of("0", "1").prefixes == ("",)


@given(cylinders)
def test_measure_matches_counting(ps):
    c = CylinderSet(tuple(ps))
    assert c.measure == cylinder_measure(ps, 6)
    assert c.measure + c.complement().measure == 1


@given(cylinders, cylinders)
def test_set_algebra_is_exact(a, b):
    A, B = CylinderSet(tuple(a)), CylinderSet(tuple(b))
    assert (A | B).measure + (A & B).measure == A.measure + B.measure
    assert (A - B).measure == A.measure - (A & B).measure
    for bits in ("000000", "010101", "111111", "100110"):
        assert (A & B).contains(bits) == (A.contains(bits) and B.contains(bits))
        assert (A | B).contains(bits) == (A.contains(bits) or B.contains(bits))
    assert CylinderSet.from_json(A.to_json()) == A


def _or_tree():
    return Node(0, Node(1, Leaf(0), Leaf(1)), Leaf(1))


def test_outcome_measure_examples():
    phi = BoundedUseFunctional((Leaf(5), _or_tree(), Node(0, Leaf(1), Node(1, Leaf(1), Node(2, Leaf(1), Leaf(DIVERGE))))))
    assert ms.outcome_measures(phi, 0) == {5: 1}
    assert ms.outcome_measures(phi, 1) == {0: F(1, 4), 1: F(3, 4)}
    assert ms.outcome_measures(phi, 2)[DIVERGE] == F(1, 8)
    assert ms.render_masses(ms.outcome_measures(phi, 2)) == {"1": "7/8", "diverge": "1/8"}


@given(st.integers(0, 2 ** 31), st.integers(1, 5))
def test_outcome_measures_three_ways(seed, use):
    rng = random.Random(seed)
    phi = ms.planted_functional(rng, [rng.randint(0, 2)], use=use, values=(0, 1, 2), box=True, diverge=True)
    walked = ms.outcome_measures(phi, 0)
    classes = {v: c.measure for v, c in ms.outcome_classes(phi, 0).items()}
    brute = outcome_masses_bruteforce(ms.tree_to_json(phi.trees[0]))
    brute = {BOX if v == "box" else DIVERGE if v == "diverge" else v: m for v, m in brute.items()}
    assert walked == classes == brute
    assert sum(walked.values()) == 1


def test_tree_json_round_trip():
    phi = BoundedUseFunctional((Node(2, Leaf(BOX), Leaf(DIVERGE)), _or_tree()), "t")
    assert BoundedUseFunctional.from_json(phi.to_json()) == phi
    assert phi.use(0) == 3


def test_generic_extraction_examples():
    phi = BoundedUseFunctional((_or_tree(), Node(0, Leaf(0), Leaf(1)), Leaf(DIVERGE)))
    d, rep = ms.majority_extract(phi, "generic", 3, target=lambda n: 1)
    assert d.axioms(3) == [(0, 1, 0)]
    assert rep.flagged == ()
    with pytest.raises(ValueError):
        ms.majority_extract(phi, "other", 3)


def test_edc_extraction_examples():
    # masses 1/4, 3/8, 3/8 for values 0, 1, box
    t = Node(0, Node(1, Leaf(0), Leaf(1)), Node(1, Node(2, Leaf(1), Leaf(BOX)), Leaf(BOX)))
    d, rep = ms.majority_extract_edc(BoundedUseFunctional((t, Leaf(DIVERGE))), 2)
    assert d.window(0, 1).tolist() == [1]
    assert d.window(1, 2).tolist() == [-1] and rep.flagged == (1,)


def test_coarse_extraction_examples():
    # convergence class: depth-1 leaf (value 1, 1/2) then depth-2 leaf (value 0, 1/4)
    t = Node(0, Leaf(1), Node(1, Leaf(0), Leaf(DIVERGE)))
    d, rep = ms.majority_extract_coarse(BoundedUseFunctional((t, Node(0, Leaf(2), Leaf(DIVERGE)))), 2)
    assert d.window(0, 2).tolist() == [1, 0]
    assert rep.flagged == (1,)


@given(st.integers(0, 2 ** 31))
def test_planted_functionals_are_recovered(seed):
    rng = random.Random(seed)
    target = [rng.randint(0, 1) for _ in range(16)]
    g = ms.planted_functional(rng, target, min_mass=F(3, 4))
    d, _ = ms.majority_extract(g, "generic", 16)
    assert [d.value(n) for n in range(16)] == target
    e = ms.planted_functional(rng, target, min_mass=F(3, 4), box=True, diverge=True)
    bm, _ = ms.majority_extract_edc(e, 16)
    assert bm.window(0, 16).tolist() == target
    cm, _ = ms.majority_extract_coarse(g, 16)
    assert cm.window(0, 16).tolist() == target


def test_fubini_examples():
    S = ms.demo_family(64)
    rep = ms.fubini_check(S, F(7, 10))
    assert rep.a_proxy == F(1, 2) and rep.b_proxy == F(1, 2)
    assert rep.bound == F(1, 2) * F(3, 10) + F(1, 2)
    assert rep.verdict_ok and rep.identity_ok
    assert rep.average_measure == F(3, 4)
    whole = ms.FamilyS((CylinderSet.whole(),) * 8)
    assert ms.fubini_check(whole, 1).bound == 1
    given_ab = ms.fubini_check(S, F(7, 10), a=F(1, 4), b=F(1, 4))
    assert given_ab.hypotheses_met and given_ab.bound == F(3, 40) + F(1, 4)
    assert not ms.fubini_check(S, F(7, 10), a=F(1, 2)).hypotheses_met


def test_fubini_random_families():
    rng = random.Random(7)
    for _ in range(100):
        S = ms.random_family(rng, 32)
        q = F(rng.randint(1, 9), 10)
        rep = ms.fubini_check(S, q)
        assert rep.identity_ok and rep.verdict_ok


def test_majority_voting_examples():
    sets = tuple(CylinderSet.of("00") if n % 16 == 0 else CylinderSet.whole() for n in range(64))
    rep = ms.majority_voting_density(ms.FamilyS(sets), F(2, 3), 64, F(7, 8))
    assert rep.density == F(15, 16) and rep.required == F(5, 8)
    assert rep.hypotheses_met and rep.ok
    rep = ms.majority_voting_density(ms.demo_family(64), F(2, 3), 64)
    assert not rep.hypotheses_met


def test_cone_experiment_examples():
    target = [1, 0, 1, 1]
    sure = BoundedUseFunctional.constant(target)
    assert ms.cone_experiment(lambda n: target[n], [sure], 4, 50, 1).fraction == 1
    coin = BoundedUseFunctional(tuple(Node(n, Leaf(0), Leaf(1)) for n in range(4)), "echo")
    stats = ms.cone_experiment(lambda n: target[n], [coin], 4, 400, 3)
    assert stats.per_phi["0:echo"] == F(1, 16)
    assert abs(stats.fraction - F(1, 16)) < F(1, 10)
    assert ms.cone_experiment(lambda n: target[n], [coin], 4, 400, 3) == stats
