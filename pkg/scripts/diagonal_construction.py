"""Build the diagonal c.e. set and the sparse simple set, then audit both logs."""

import argparse
import time

from densecomp import density as dn
from densecomp import machines as m


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--E", type=int, default=15)
    ap.add_argument("--M", type=int, default=256)
    ap.add_argument("--s", type=int, default=100_000)
    ap.add_argument("--simple-E", type=int, default=20)
    # the simple-set search costs up to s steps for each of s inputs, so it gets its own smaller bound
    ap.add_argument("--simple-s", type=int, default=5000)
    args = ap.parse_args()

    t0 = time.perf_counter()
    log = m.build_ndc_diagonal(args.E, args.M, args.s)
    problems = m.audit_ndc_diagonal(log)
    print(f"diagonal: {len(log.triggers)} triggers, {len(log.elements())} elements,"
          f" audit {'clean' if not problems else problems[:3]} ({time.perf_counter() - t0:.2f}s)")
    for e, info in m.column_dichotomy(log).items():
        prog = m._column_program(e, None)
        name = next((k for k, v in m.CATALOG_INDEX.items() if v == prog), f"#{prog}")
        state = "full" if info["cofinal"] else f"finite (last m={info['last_trigger']})"
        print(f"  column {e:2d} [{name}]: {state}")
    depth = 1 << 14
    print(f"  rho_{depth} = {dn.fmt(dn.density_below(log.as_set(), depth))}")

    simple = m.build_simple_density0(args.simple_s, args.simple_E)
    n = 1 << args.simple_E
    print(f"simple set: {len(simple.events)} elements, rho_{n} = {dn.fmt(dn.density_below(simple.as_set(), n))},"
          f" prefix-bound violations: {len(m.density_bound_violations(simple, n))}")


if __name__ == "__main__":
    main()
