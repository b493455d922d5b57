from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given, strategies as st

from densecomp import density as dn
from densecomp import descriptions as ds
from densecomp.descriptions import BOX, BoxMap, PartialTrace, TotalMap
from densecomp.literals import parse_set

bits = st.lists(st.integers(0, 1), min_size=1, max_size=10)


def trace_on(values: TotalMap, domain, stage_of=lambda n: n):
    return PartialTrace.from_axioms((n, values(n), stage_of(n)) for n in domain)


def test_agreement_examples():
    g = TotalMap.of_set(dn.evens())
    assert ds.agreement_density(g, g, 50) == 1
    assert ds.agreement_density(PartialTrace.empty(), g, 10) == 0
    vals = [g(n) for n in range(12)]
    for i in (1, 5, 9):
        vals[i] = 7
    assert ds.agreement_density(TotalMap.from_values(vals), g, 12) == F(9, 12)


def test_stage_limited_agreement():
    g = TotalMap.constant(1)
    f = trace_on(g, range(10), stage_of=lambda n: 10 * n)
    assert ds.agreement_density(f, g, 10, stage=45) == F(5, 10)
    assert ds.agreement_density(f, g, 10) == 1


def test_edc_to_generic_examples():
    assert ds.domain_density(ds.edc_to_generic(BoxMap.from_values([BOX] * 20)), 20) == 0
    vals = TotalMap.of_set(dn.odds())
    full = ds.edc_to_generic(BoxMap.boxed_on(vals, dn.empty()))
    assert ds.agreement_density(full, vals, 40) == 1
    f = BoxMap.boxed_on(vals, dn.multiples(3))
    assert ds.domain_density(ds.edc_to_generic(f), 30) == F(2, 3)


def test_edc_to_coarse_examples():
    vals = TotalMap.of_set(dn.odds())
    assert ds.edc_to_coarse(BoxMap.from_values([BOX] * 8)).window(0, 8).tolist() == [0] * 8
    assert ds.edc_to_coarse(BoxMap.boxed_on(vals, dn.empty())).window(0, 10).tolist() == vals.window(0, 10).tolist()
    c = ds.edc_to_coarse(BoxMap.boxed_on(TotalMap.constant(1), dn.multiples(3)))
    assert ds.agreement_density(c, TotalMap.constant(1), 30) == F(2, 3)


def test_restrict_and_patch_examples():
    g = TotalMap.of_set(dn.squares())
    f = trace_on(g, range(0, 40, 2))
    h = ds.restrict_to_subset(f, dn.evens())
    assert h.window(0, 6).tolist()[1::2] == [ds.BOX_CODE] * 3
    assert ds.restrict_to_subset(f, dn.empty()).window(0, 10).tolist() == [ds.BOX_CODE] * 10
    f2 = trace_on(g, sorted(set(range(0, 40, 2)) | {1, 3}))
    h2 = ds.restrict_to_subset(f2, dn.evens())
    assert ds.domain_density(h2, 20) == F(1, 2)
    p = ds.patch_to_total(f2, dn.evens())
    assert p.window(0, 6).tolist() == [g(0), 0, g(2), 0, g(4), 0]
    assert ds.patch_to_total(f, dn.empty(), default=3).window(0, 4).tolist() == [3] * 4


def test_containment_error_names_index():
    f = trace_on(TotalMap.constant(0), [0, 1, 2, 3, 4])
    with pytest.raises(ds.ContainmentError) as err:
        ds.restrict_to_subset(f, dn.omega()).window(0, 10)
    assert err.value.index == 5


def test_extract_computable_subset_examples():
    omega_now = trace_on(TotalMap.constant(0), range(200))
    assert ds.extract_computable_subset(omega_now, lambda n: n).prefix(200).all()
    delayed = trace_on(TotalMap.constant(0), range(200), stage_of=lambda n: 2 * n)
    assert ds.extract_computable_subset(delayed, lambda n: n).elements_below(200) == [0]
    evens_half = trace_on(TotalMap.constant(0), range(0, 200, 2), stage_of=lambda n: n // 2)
    assert ds.extract_computable_subset(evens_half, lambda n: n).elements_below(200) == list(range(0, 200, 2))


def test_bound_examples():
    g = TotalMap.of_set(dn.evens())
    assert ds.estimate_bound("gamma", g, [g], 64).lower_bound == 1
    assert ds.estimate_bound("alpha", g, [PartialTrace.empty()], 64).lower_bound == 0
    r = TotalMap.of_set(parse_set("R(evens)"))
    est = ds.estimate_bound("gamma", r, [TotalMap.constant(0)], 1024, (512, 1024))
    assert abs(est.lower_bound - F(1, 3)) <= F(1, 512)
    assert est.to_dict()["label"] == "lower bound"
    with pytest.raises(ValueError):
        ds.estimate_bound("gamma", g, [], 64)


def test_alpha_rejects_wrong_candidates():
    g = TotalMap.of_set(dn.evens())
    wrong = ds.total_trace(TotalMap.of_set(dn.odds()))
    assert ds.estimate_bound("alpha", g, [wrong], 64).lower_bound == 0
    assert ds.estimate_bound("delta", g, [wrong], 64).lower_bound == 0


@given(bits, bits, st.integers(1, 120))
def test_edc_to_generic_domain_equals_strong_domain(pre, per, n):
    f = BoxMap.boxed_on(TotalMap.constant(4), dn.periodic_set(pre, per))
    assert ds.domain_density(ds.edc_to_generic(f), n) == F(int(f.strong_domain_bits(n).sum()), n)


@given(bits, bits, bits, bits, st.integers(1, 100))
def test_restriction_loses_at_most_the_complement(dpre, dper, bpre, bper, n):
    g = TotalMap.of_set(dn.periodic_set(dpre, dper))
    b = dn.periodic_set(bpre, bper)
    f = ds.total_trace(TotalMap.of_set(dn.odds()))  # total, so B is always inside its domain
    h = ds.restrict_to_subset(f, b)
    assert ds.agreement_density(h, g, n) >= ds.agreement_density(f, g, n) - ds.complement_density(b, n)


@given(st.lists(st.integers(0, 1), min_size=64, max_size=64), st.integers(1, 4))
def test_computable_subset_recipe(domain_bits, j):
    """Budget rule from stage data yields a subset losing at most 1/2^j of the domain on the window."""
    g = TotalMap.of_set(dn.squares())
    stages = {n: 3 * n + 1 for n in range(256) if n >= 64 or domain_bits[n]}
    f = PartialTrace.from_axioms((n, g(n), s) for n, s in stages.items())
    b = ds.extract_computable_subset(f, lambda n: 3 * n + 1)
    window = (128, 256)
    dom_min = dn.indicator_profile(f.domain_bits(256), window).window_min
    b_min = dn.indicator_profile(b.prefix(256), window).window_min
    assert b_min >= dom_min - F(1, 2 ** j)
    h = ds.restrict_to_subset(f, b)
    assert ds.errors_on_domain(h, g, 256) == []


@given(st.lists(st.integers(0, 1), min_size=32, max_size=32), st.lists(st.integers(0, 1), min_size=32, max_size=32))
def test_bound_monotone_in_candidates(a, b):
    g = TotalMap.from_values([0] * 64)
    c1 = TotalMap.from_values(a + [0] * 32)
    c2 = TotalMap.from_values(b + [1] * 32)
    one = ds.estimate_bound("gamma", g, [c1], 64).lower_bound
    both = ds.estimate_bound("gamma", g, [c1, c2], 64).lower_bound
    assert both >= one


def test_join_descriptions_interleaves():
    a = TotalMap.constant(1)
    b = TotalMap.constant(2)
    assert ds.join_descriptions(a, b).window(0, 6).tolist() == [1, 2, 1, 2, 1, 2]
    with pytest.raises(TypeError):
        ds.join_descriptions(a, PartialTrace.empty())


def test_json_round_trip():
    f = BoxMap.from_values([BOX, 0, 1, BOX, 1, 0])
    rec = ds.to_json(f, 6)
    assert rec["values"] == ["box", 0, 1, "box", 1, 0]
    assert ds.to_json(ds.from_json(rec), 6) == rec
    t = trace_on(TotalMap.constant(3), [1, 4])
    assert ds.to_json(ds.from_json(ds.to_json(t, 8)), 8) == ds.to_json(t, 8)
    rule = ds.from_json({"kind": "box", "rule": "omega", "box_on": "mult:3"})
    assert rule.window(0, 4).tolist() == [ds.BOX_CODE, 1, 1, ds.BOX_CODE]
    assert repr(BOX) == "□"
