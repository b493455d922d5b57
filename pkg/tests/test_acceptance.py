"""Acceptance criteria, one test each; every test prints a single PASS/FAIL line."""

import itertools
import json
import random
import time
from fractions import Fraction as F

import numpy as np
import pytest

from densecomp import cli
from densecomp import coding as c
from densecomp import density as dn
from densecomp import machines as m
from densecomp import measure as ms
from densecomp import oracles as o
from densecomp.descriptions import BOX, BOX_CODE, NEVER, BoxMap, PartialTrace
from densecomp.machines import DIVERGED

from cli_cases import CASES
from reference import all_subsets, finite_bits, periodic_bits, realizable_bruteforce

SEED = 20240611


@pytest.fixture
def verdict(capsys):
    def say(number, ok, detail):
        with capsys.disabled():
            print(f"\nacceptance {number}: {'PASS' if ok else 'FAIL'} ({detail})")
        assert ok, detail

    return say


def _suite(rng, count=200, limit=1 << 16):
    """Half finite-support, half eventually periodic; each paired with its plain bit list."""
    out = []
    for i in range(count):
        if i % 2:
            elems = rng.sample(range(limit), rng.randint(0, 40)) + rng.sample(range(64), rng.randint(0, 20))
            out.append((dn.finite_set(elems), finite_bits(elems, limit + 1)))
        else:
            pre = [rng.randint(0, 1) for _ in range(rng.randint(0, 30))]
            per = [rng.randint(0, 1) for _ in range(rng.randint(1, 40))]
            out.append((dn.periodic_set(pre, per), periodic_bits(pre, per, limit + 1)))
    return out


def test_1_density_oracle_equivalence(verdict):
    suite = _suite(random.Random(SEED))
    limit = 1 << 16
    ns = np.arange(1, limit + 1)
    start = time.perf_counter()
    bad = 0
    for s, bits in suite:
        counts = np.array(list(itertools.accumulate(bits[:limit])), dtype=np.int64)
        ra = dn.density_below(s, ns)
        # num/den == counts/n exactly, by cross-multiplication on reduced pairs
        if not np.array_equal(ra.num * ns, ra.den * counts) or np.any(np.gcd(ra.num, ra.den) != 1):
            bad += 1
    elapsed = time.perf_counter() - start
    spot = all(dn.density_below(s, n) == F(sum(b[:n]), n) for s, b in suite[:20] for n in (1, 7, 1000, limit))
    verdict(1, bad == 0 and spot and elapsed < 10,
            f"{len(suite)} sets, n <= 2^16, mismatches={bad}, {elapsed:.2f}s")


def test_2_block_bounds(verdict):
    suite = _suite(random.Random(SEED))
    K = 14
    violations, independent = 0, 0
    for s, bits in suite:
        rep = dn.check_block_bounds(s, K)
        violations += len(rep.violations)
        for k in range(K + 1):
            lo, hi = (1 << k) - 1, (1 << (k + 1)) - 1
            block = F(sum(bits[lo:hi]), hi - lo)
            rho = F(sum(bits[:hi]), hi)
            if rep.rows[k].block != block or rep.rows[k].rho != rho or rho < block * (hi - lo) / hi:
                independent += 1
    verdict(2, violations == 0 and independent == 0,
            f"{len(suite)} sets, k <= {K}, violations={violations}, reference mismatches={independent}")


def _corrupt_below(g: PartialTrace, cutoff_block: int, rng_seed: int) -> PartialTrace:
    """Flip or drop dense values on blocks J_n with n < cutoff; untouched from 2^cutoff on."""
    bound = 1 << cutoff_block

    def chunk(lo, hi):
        vals, defined = g.window(lo, hi)
        vals = vals.copy()
        stages = np.where(defined, 0, NEVER).astype(np.int64)
        idx = np.arange(lo, hi)
        noise = np.random.default_rng([rng_seed, lo]).integers(0, 3, hi - lo)
        low = idx < bound
        vals[low & (noise == 1)] ^= 1
        stages[low & (noise == 2)] = NEVER
        return vals, stages

    return PartialTrace(chunk, "corrupted")


def test_3_round_trip(verdict):
    rng = random.Random(SEED + 3)
    trials, failures = 100, []
    top = 20
    for t in range(trials):
        pre = [rng.randint(0, 1) for _ in range(rng.randint(0, 8))]
        per = [rng.randint(0, 1) for _ in range(rng.randint(1, 8))]
        A = dn.periodic_set(pre, per)
        cut = rng.randint(0, 16)
        truth = A.prefix(top + 2).tolist()
        # below the cutoff f may be wrong or undefined
        triples = [(n, truth[n] if n >= cut else truth[n] ^ rng.randint(0, 1), 0)
                   for n in range(top + 2) if n >= cut or rng.random() < 0.7]
        f = PartialTrace.from_axioms(triples)
        back = c.dense_to_wcf(c.wcf_to_dense(f))
        noisy = c.dense_to_wcf(_corrupt_below(c.wcf_to_dense(f), cut, t))
        if any(back.value(n) != truth[n] or noisy.value(n) != truth[n] for n in range(cut, top + 1)):
            failures.append(("weak", t))
        # strong pair: below the cutoff f and g only withhold values
        sv = [BOX if n < cut and rng.random() < 0.5 else truth[n] if n <= top else BOX for n in range(top + 2)]
        sf = BoxMap.from_values(sv)
        sg = c.scf_to_strongdense(sf)
        bound = 1 << cut

        def boxed(lo, hi, sg=sg, bound=bound, t=t):
            vals = sg.window(lo, hi).copy()
            drop = np.random.default_rng([t, lo, 7]).integers(0, 2, hi - lo).astype(bool)
            vals[drop & (np.arange(lo, hi) < bound)] = BOX_CODE
            return vals

        for g in (sg, BoxMap(boxed)):
            out = c.strongdense_to_scf(g).window(cut, top + 1).tolist()
            if out != truth[cut:top + 1]:
                failures.append(("strong", t))
    verdict(3, not failures, f"{trials} sets, cutoffs <= 16, recovered on [c, {top}], failures={failures[:3]}")


def _class_mass(phi, n, value):
    return sum((cyl.measure for v, cyl in ms.outcome_classes(phi, n).items() if v == value), F(0))


def test_4_majority_extraction(verdict):
    rng = random.Random(SEED + 4)
    N, trials = 64, 100
    problems = []
    for t in range(trials):
        target = [rng.randint(0, 2) for _ in range(N)]
        use = rng.randint(2, 4)
        g = ms.planted_functional(rng, target, use=use, values=(0, 1, 2), box=True, diverge=True)
        d, _ = ms.majority_extract(g, "generic", N)
        for n in range(N):
            heavy = [v for v, cyl in ms.outcome_classes(g, n).items() if isinstance(v, int) and cyl.measure > F(1, 2)]
            if d.value(n) is not None and d.value(n) != target[n]:
                problems.append(("generic wrong", t, n))
            if heavy and d.value(n) != heavy[0]:
                problems.append(("generic undefined", t, n))
        e, _ = ms.majority_extract_edc(g, N)
        vals = e.window(0, N).tolist()
        for n in range(N):
            if _class_mass(g, n, target[n]) >= F(2, 3) and vals[n] != target[n]:
                problems.append(("edc", t, n))
        h = ms.planted_functional(rng, target, use=use, min_mass=F(3, 4), values=(0, 1, 2), box=True, diverge=True)
        cm, _ = ms.majority_extract_coarse(h, N)
        vals = cm.window(0, N).tolist()
        for n in range(N):
            total = sum((cyl.measure for v, cyl in ms.outcome_classes(h, n).items() if v is not ms.DIVERGE), F(0))
            if total >= F(3, 4) and _class_mass(h, n, target[n]) >= F(3, 4) and vals[n] != target[n]:
                problems.append(("coarse", t, n))
    verdict(4, not problems, f"{trials} planted functionals on [0, {N}), problems={problems[:3]}")


def test_5_fubini(verdict):
    rng = random.Random(SEED + 5)
    N, trials = 64, 100
    identity_fail, violated = 0, 0
    for _ in range(trials):
        S = ms.random_family(rng, N)
        q = F(rng.randint(1, 9), 10)
        rep = ms.fubini_check(S, q)
        identity_fail += not rep.identity_ok
        violated += rep.hypotheses_met and not rep.verdict_ok
        # any a, b strictly below the proxies also satisfies the hypotheses
        a, b = rep.a_proxy * F(rng.randint(0, 9), 10), rep.b_proxy * F(rng.randint(0, 9), 10)
        sub = ms.fubini_check(S, q, a=a, b=b)
        violated += sub.hypotheses_met and not sub.verdict_ok
    demo = ms.fubini_check(ms.demo_family(N), F(3, 5))
    ok = identity_fail == 0 and violated == 0 and demo.bound == F(7, 10) and demo.identity_ok
    verdict(5, ok, f"{trials} families at N={N}, identity failures={identity_fail}, "
                   f"violations={violated}, demo bound={dn.fmt(demo.bound)}")


def test_6_ndc_log_audit(verdict):
    E, M, s = 15, 256, 10 ** 5
    log = m.build_ndc_diagonal(E, M, s)
    problems = m.audit_ndc_diagonal(log)
    elements = log.elements()
    for t in log.triggers:
        prog = m._column_program(t.e, log.params["indices"])
        ks = range(1, t.m, 2)
        zeros = sum(m.run(prog, (1 << t.e) * k, s) == 0 for k in ks)
        if not 2 * zeros >= len(ks) or not all((1 << t.e) * k in elements for k in ks):
            problems.append(f"e={t.e} m={t.m}")
    verdict(6, not problems, f"e < 16, m <= {M}, s = 10^5, {len(log.triggers)} triggers, problems={problems[:3]}")


def test_7_realizability(verdict):
    subsets = all_subsets()
    depth = 1 << 12
    disagree, recipe_bad = 0, 0
    recipes = {}
    for P, Q in itertools.product(subsets, subsets):
        real = m.realizable(P, Q)
        disagree += real != realizable_bruteforce(P, Q)
        r = m.witness_recipe(P, Q)
        if isinstance(r, m.Unrealizable):
            recipe_bad += real
            continue
        recipe_bad += not (real and m.recipe_satisfies(r, P, Q))
        if all(m.BLOCKS[b].constructible for b in r.blocks()):
            recipes.setdefault(r, []).append((P, Q))
    inconsistent = []
    for r, pairs in recipes.items():
        built = m.build_recipe(r, depth)
        props = r.properties()
        cls = m.classify(built, props, depth)
        pair_ok = all(props[m.vertex(p)] for P, _ in pairs for p in P) and \
            not any(props[m.vertex(q)] for _, Q in pairs for q in Q)
        if not (cls.consistent and pair_ok):
            inconsistent.append(r.render())
    pairs = len(subsets) ** 2
    verdict(7, pairs == 4096 and disagree == 0 and recipe_bad == 0 and not inconsistent,
            f"{pairs} pairs, reachability mismatches={disagree}, recipe mismatches={recipe_bad}, "
            f"{len(recipes)} constructible recipes at 2^12, inconsistent={inconsistent[:3]}")


def test_8_ubfb_kernels(verdict):
    pool = o.REDUCTION_POOL
    sets = [dn.evens(), dn.periodic_set([1, 1, 0], [0, 1, 1, 0, 1]), dn.squares()]
    low_query, mismatches, threshold_bad, budget_errors = [], [], [], 0
    cutoff = 12
    for name, phi in pool.items():
        W = o.ubfb_to_enumop(phi, 64)
        for g in sets:
            for k in range(64):
                try:
                    r = o.ubfb_compute(phi, g, k)
                except o.UbfbBudgetError:
                    budget_errors += 1
                    if phi(k, g) is not DIVERGED:
                        mismatches.append((name, "budget", k))
                    continue
                if r.queries and min(r.queries) < r.n:
                    low_query.append((name, k))
            exact = o.eval_enum_op(W, o.graph_pairs(g, 1 << 13)).as_dict()
            for n in range(64):
                direct = phi(n, g)
                expected = None if direct is DIVERGED or direct is BOX else direct
                if exact.get(n) != expected:
                    mismatches.append((name, n))
            weak = {(p, int(g(p)) ^ (p < cutoff)) for p in range(1 << 13)}
            t = o.ubfb_threshold(W, cutoff)
            if t is not None:
                out = o.eval_enum_op(W, weak).as_dict()
                for n in range(t, 64):
                    direct = phi(n, g)
                    if out.get(n) != (None if direct is DIVERGED else direct):
                        threshold_bad.append((name, n))
            elif phi.use_bounded_below:
                threshold_bad.append((name, "no threshold"))
    ok = len(pool) >= 20 and not (low_query or mismatches or threshold_bad)
    verdict(8, ok, f"{len(pool)} reductions, low queries={low_query[:3]}, enumop mismatches={mismatches[:3]}, "
                   f"threshold failures={threshold_bad[:3]}, budget errors={budget_errors}")


def test_9_cli_determinism(verdict, tmp_path):
    differing = []
    for name, argv in sorted(CASES.items()):
        first, again = tmp_path / f"{name}.json", tmp_path / f"{name}.replay.json"
        code = cli.main(argv + ["--out", str(first)])
        rep = json.loads(first.read_text(encoding="utf-8"))
        replay_code = cli.main(["replay", str(first), "--out", str(again)])
        if code not in (0, 2) or replay_code != code or rep["command"] != name \
                or first.read_bytes() != again.read_bytes():
            differing.append(name)
    verdict(9, not differing and set(CASES) == set(cli.COMMANDS),
            f"{len(CASES)} subcommands replayed, differing={differing}")
