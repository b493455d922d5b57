"""Tabulate realizable (P, Q) pairs, the recipes that witness them, and their classification."""

import argparse
import collections
import itertools

from densecomp import machines as m


def subsets():
    names = list(m.VERTICES)
    return [frozenset(c) for r in range(len(names) + 1) for c in itertools.combinations(names, r)]


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--depth", type=int, default=1 << 12)
    args = ap.parse_args()
    by_recipe = collections.Counter()
    total = realizable = 0
    for P, Q in itertools.product(subsets(), subsets()):
        total += 1
        r = m.witness_recipe(P, Q)
        if isinstance(r, m.Unrealizable):
            continue
        realizable += 1
        by_recipe[r.render()] += 1
    print(f"{realizable} of {total} pairs realizable")
    seen = {}
    for P, Q in itertools.product(subsets(), subsets()):
        r = m.witness_recipe(P, Q)
        if not isinstance(r, m.Unrealizable):
            seen.setdefault(r.render(), r)
    for name, count in by_recipe.most_common():
        r = seen[name]
        if all(m.BLOCKS[b].constructible for b in r.blocks()):
            cls = m.classify(m.build_recipe(r, args.depth), r.properties(), args.depth)
            status = "consistent" if cls.consistent else "; ".join(cls.problems)
        else:
            status = "external block"
        print(f"{count:5d}  {name:55s} {status}")


if __name__ == "__main__":
    main()
