"""Tail-window density profiles for a few coded sets, with block densities alongside."""

import argparse

from densecomp import density as dn
from densecomp.literals import parse_set

DEFAULT = ["evens", "squares", "R(evens)", "Rtilde(evens)", "E(evens)", "join(evens,complement(squares))"]


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("sets", nargs="*", default=DEFAULT, help="set literals")
    ap.add_argument("--depth", type=int, default=1 << 12)
    ap.add_argument("--k", type=int, default=10, help="largest block index to show")
    args = ap.parse_args()
    for lit in args.sets:
        s = parse_set(lit)
        prof = dn.density_profile(s, args.depth, (args.depth // 2, args.depth))
        print(f"{lit}")
        print(f"  rho_{args.depth} = {dn.fmt(prof.rho(args.depth))}")
        print(f"  window [{args.depth // 2}, {args.depth}]: min {dn.fmt(prof.window_min)} at {prof.argmin},"
              f" max {dn.fmt(prof.window_max)} at {prof.argmax}")
        blocks = [dn.fmt(dn.block_density(s, k, dn.BlockConvention.POWER)) for k in range(args.k + 1)]
        print(f"  block densities J_0..J_{args.k}: {' '.join(blocks)}")
        print(f"  block bound check to k={args.k}: {'ok' if dn.check_block_bounds(s, args.k).ok else 'violated'}")


if __name__ == "__main__":
    main()
