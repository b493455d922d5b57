"""Brute-force reference implementations, written without the package's code.

Everything here is plain Python over lists and ints, so tests can compare the
vectorized implementations against an independent definition.
"""

from __future__ import annotations

import itertools
from fractions import Fraction

import networkx as nx


def popcount_density(bits, n):
    return Fraction(sum(bits[:n]), n)


def finite_bits(elements, n):
    s = set(elements)
    return [1 if i in s else 0 for i in range(n)]


def periodic_bits(pre, per, n):
    return [pre[i] if i < len(pre) else per[(i - len(pre)) % len(per)] for i in range(n)]


def two_adic(m):
    e = 0
    while m % 2 == 0:
        m //= 2
        e += 1
    return e


def R_bits(a_bits, n):
    return [0 if m == 0 else a_bits[two_adic(m)] for m in range(n)]


def Rtilde_bits(a_bits, n):
    return [0 if m == 0 else a_bits[m.bit_length() - 1] for m in range(n)]


def join_bits(a, b, n):
    return [a[i // 2] if i % 2 == 0 else b[i // 2] for i in range(n)]


VERTICES = ("edc", "cc", "gc", "dc", "alpha=1", "gamma=1")
EDGES = (("edc", "cc"), ("edc", "gc"), ("cc", "dc"), ("gc", "dc"), ("gc", "alpha=1"),
         ("dc", "gamma=1"), ("alpha=1", "gamma=1"))


def dag():
    g = nx.DiGraph()
    g.add_nodes_from(VERTICES)
    g.add_edges_from(EDGES)
    return g


def realizable_bruteforce(P, Q, g=None):
    g = g or dag()
    return not any(p == q or nx.has_path(g, p, q) for p in P for q in Q)


def all_subsets():
    return [frozenset(c) for r in range(len(VERTICES) + 1) for c in itertools.combinations(VERTICES, r)]


def cylinder_measure(prefixes, length=None):
    """Measure by counting strings of a fixed length that extend some prefix."""
    prefixes = list(prefixes)
    L = max((len(p) for p in prefixes), default=0) if length is None else length
    hits = sum(1 for bits in itertools.product("01", repeat=L)
               if any("".join(bits).startswith(p) for p in prefixes))
    return Fraction(hits, 2 ** L)


def tree_eval(tree, x):
    """Evaluate a JSON decision tree on a bit string."""
    while "pos" in tree:
        tree = tree[x[tree["pos"]]]
    return tree["leaf"]


def tree_use(tree):
    if "pos" not in tree:
        return 0
    return max(tree["pos"] + 1, tree_use(tree["0"]), tree_use(tree["1"]))


def outcome_masses_bruteforce(tree):
    u = tree_use(tree)
    out = {}
    for bits in itertools.product("01", repeat=u):
        v = tree_eval(tree, "".join(bits))
        out[v] = out.get(v, Fraction(0)) + Fraction(1, 2 ** u)
    return out
