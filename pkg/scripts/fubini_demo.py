"""Measure/density trade-off on the demo family, a voting example and random families."""

import argparse
import random
from fractions import Fraction

from densecomp import measure as ms
from densecomp.density import fmt


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--N", type=int, default=64)
    ap.add_argument("--families", type=int, default=200)
    ap.add_argument("--seed", type=int, default=1)
    args = ap.parse_args()

    rep = ms.fubini_check(ms.demo_family(args.N), Fraction(3, 5))
    print(f"demo: a={fmt(rep.a_proxy)} b={fmt(rep.b_proxy)} bound={fmt(rep.bound)} identity={rep.identity_ok}")

    sets = tuple(ms.CylinderSet.of("00") if n % 16 == 0 else ms.CylinderSet.whole() for n in range(args.N))
    vote = ms.majority_voting_density(ms.FamilyS(sets), Fraction(2, 3), args.N, Fraction(7, 8))
    print(f"voting: density={fmt(vote.density)} required={fmt(vote.required)} hypotheses={vote.hypotheses_met}")

    rng = random.Random(args.seed)
    worst = Fraction(0)
    for _ in range(args.families):
        q = Fraction(rng.randint(1, 9), 10)
        r = ms.fubini_check(ms.random_family(rng, args.N), q)
        assert r.identity_ok
        worst = max(worst, r.bound)
    print(f"{args.families} random families: largest (1-q)a + b = {fmt(worst)}")


if __name__ == "__main__":
    main()
