"""Exact Lebesgue measure on Cantor space and majority-vote extraction.

Cylinder sets are finite antichains of bit strings; every measure is an
exact dyadic ``Fraction``. Bounded-use functionals are per-input decision
trees over oracle bits, so each outcome class is a cylinder set.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable, Iterable, Mapping, Sequence

import numpy as np

from .descriptions import BOX, BOX_CODE, NEVER, BoxMap, PartialTrace, TotalMap
from .density import fmt

HALF, THIRD, THREE_QUARTERS, TWO_THIRDS = Fraction(1, 2), Fraction(1, 3), Fraction(3, 4), Fraction(2, 3)


# -- cylinder sets ------------------------------------------------------------


def _normalize(strings: Iterable[str]) -> tuple[str, ...]:
    """Minimal antichain with the same union: drop extensions, merge sibling pairs."""
    items = set(strings)
    for s in items:
        if set(s) - {"0", "1"}:
            raise ValueError(f"not a bit string: {s!r}")
    while True:
        ordered = sorted(items, key=lambda s: (len(s), s))
        kept: set[str] = set()
        for s in ordered:
            if not any(s[:i] in kept for i in range(len(s) + 1)):
                kept.add(s)
        merged = set(kept)
        changed = False
        for s in kept:
            if s and s[-1] == "0" and s[:-1] + "1" in merged and s in merged:
                merged -= {s, s[:-1] + "1"}
                merged.add(s[:-1])
                changed = True
        items = merged
        if not changed:
            return tuple(sorted(items, key=lambda s: (len(s), s)))


@dataclass(frozen=True)
class CylinderSet:
    """Union of the basic open sets ``[σ]`` for ``σ`` in ``prefixes`` (kept as a reduced antichain)."""

    prefixes: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "prefixes", _normalize(self.prefixes))

    @classmethod
    def whole(cls) -> "CylinderSet":
        return cls(("",))

    @classmethod
    def empty(cls) -> "CylinderSet":
        return cls(())

    @classmethod
    def of(cls, *prefixes: str) -> "CylinderSet":
        return cls(tuple(prefixes))

    @property
    def measure(self) -> Fraction:
        return sum((Fraction(1, 2 ** len(s)) for s in self.prefixes), Fraction(0))

    @property
    def depth(self) -> int:
        return max((len(s) for s in self.prefixes), default=0)

    def contains(self, x: str | Sequence[int]) -> bool:
        """Membership of any stream extending the finite prefix ``x``; ``x`` must be long enough."""
        xs = "".join(str(int(b)) for b in x)
        if len(xs) < self.depth and not any(xs.startswith(s) for s in self.prefixes):
            if any(s.startswith(xs) for s in self.prefixes):
                raise ValueError("prefix too short to decide membership")
        return any(xs.startswith(s) for s in self.prefixes)

    def complement(self) -> "CylinderSet":
        def comp(strings: list[str], base: str) -> list[str]:
            if "" in strings:
                return []
            if not strings:
                return [base]
            out = []
            for b in "01":
                out += comp([s[1:] for s in strings if s[0] == b], base + b)
            return out

        return CylinderSet(tuple(comp(list(self.prefixes), "")))

    def __and__(self, other: "CylinderSet") -> "CylinderSet":
        out = []
        for a in self.prefixes:
            for b in other.prefixes:
                if b.startswith(a):
                    out.append(b)
                elif a.startswith(b):
                    out.append(a)
        return CylinderSet(tuple(out))

    def __or__(self, other: "CylinderSet") -> "CylinderSet":
        return CylinderSet(self.prefixes + other.prefixes)

    def __sub__(self, other: "CylinderSet") -> "CylinderSet":
        return self & other.complement()

    def to_json(self):
        return list(self.prefixes)

    @classmethod
    def from_json(cls, rec) -> "CylinderSet":
        return cls(tuple(str(s) for s in rec))


def measure(c: CylinderSet) -> Fraction:
    return c.measure


def _constraint_cylinder(constraints: Mapping[int, int]) -> CylinderSet:
    """Cylinder of streams with ``X(p) = b`` for each constraint, expanded into prefixes."""
    if not constraints:
        return CylinderSet.whole()
    length = max(constraints) + 1
    free = [p for p in range(length) if p not in constraints]
    out = []
    for bits in itertools.product("01", repeat=len(free)):
        s = ["0"] * length
        for p, b in constraints.items():
            s[p] = str(b)
        for p, b in zip(free, bits):
            s[p] = b
        out.append("".join(s))
    return CylinderSet(tuple(out))


# -- bounded-use functionals ----------------------------------------------------


class _Diverge:
    def __repr__(self):
        return "DIVERGE"

    def __reduce__(self):
        return "DIVERGE"


DIVERGE = _Diverge()


@dataclass(frozen=True)
class Leaf:
    value: Any  # int, BOX or DIVERGE


@dataclass(frozen=True)
class Node:
    pos: int
    zero: "Tree"
    one: "Tree"


Tree = Leaf | Node


def tree_to_json(t: Tree):
    if isinstance(t, Leaf):
        v = t.value
        return {"leaf": "box" if v is BOX else "diverge" if v is DIVERGE else v}
    return {"pos": t.pos, "0": tree_to_json(t.zero), "1": tree_to_json(t.one)}


def tree_from_json(rec) -> Tree:
    if "leaf" in rec:
        v = rec["leaf"]
        return Leaf(BOX if v == "box" else DIVERGE if v == "diverge" else int(v))
    return Node(int(rec["pos"]), tree_from_json(rec["0"]), tree_from_json(rec["1"]))


def _tree_use(t: Tree) -> int:
    if isinstance(t, Leaf):
        return 0
    return max(t.pos + 1, _tree_use(t.zero), _tree_use(t.one))


@dataclass(frozen=True)
class BoundedUseFunctional:
    """Per input ``n`` a decision tree over oracle bits; ``trees[n]`` for ``n < len(trees)``."""

    trees: tuple[Tree, ...]
    name: str = "phi"

    def use(self, n: int) -> int:
        return _tree_use(self.trees[n])

    def __len__(self):
        return len(self.trees)

    def evaluate(self, n: int, x: Callable[[int], int] | Sequence[int]):
        ask = x if callable(x) else (lambda p: int(x[p]))
        t = self.trees[n]
        while isinstance(t, Node):
            t = t.one if ask(t.pos) else t.zero
        return t.value

    def as_functional(self):
        from .machines import DIVERGED, Functional

        def fn(n, ask):
            v = self.evaluate(n, ask)
            return DIVERGED if v is DIVERGE else v

        return Functional(self.name, fn)

    def to_json(self):
        return {"name": self.name, "trees": [tree_to_json(t) for t in self.trees]}

    @classmethod
    def from_json(cls, rec) -> "BoundedUseFunctional":
        return cls(tuple(tree_from_json(t) for t in rec["trees"]), rec.get("name", "phi"))

    @classmethod
    def constant(cls, values: Sequence) -> "BoundedUseFunctional":
        return cls(tuple(Leaf(v) for v in values), "constant")


def _leaves(t: Tree, assign: dict, depth: int = 0):
    """Yield ``(constraints, value, depth)`` per reachable leaf; repeated positions follow the assignment."""
    if isinstance(t, Leaf):
        yield dict(assign), t.value, depth
        return
    if t.pos in assign:
        yield from _leaves(t.one if assign[t.pos] else t.zero, assign, depth)
        return
    for b, sub in ((0, t.zero), (1, t.one)):
        assign[t.pos] = b
        yield from _leaves(sub, assign, depth + 1)
        del assign[t.pos]


def _key(v):
    # deterministic order: values ascending, then BOX, then DIVERGE
    if v is BOX:
        return (1, 0)
    if v is DIVERGE:
        return (2, 0)
    return (0, v)


def outcome_measures(phi: BoundedUseFunctional, n: int) -> dict:
    """Exact mass of each outcome class at ``n``, by walking the tree."""
    out: dict = {}
    for constraints, v, _ in _leaves(phi.trees[n], {}):
        out[v] = out.get(v, Fraction(0)) + Fraction(1, 2 ** len(constraints))
    return dict(sorted(out.items(), key=lambda kv: _key(kv[0])))


def outcome_classes(phi: BoundedUseFunctional, n: int) -> dict:
    """Outcome classes at ``n`` as cylinder sets (independent of :func:`outcome_measures`)."""
    u = phi.use(n)
    groups: dict = {}
    for bits in itertools.product("01", repeat=u):
        s = "".join(bits)
        groups.setdefault(phi.evaluate(n, lambda p: int(s[p])), []).append(s)
    return {v: CylinderSet(tuple(ss)) for v, ss in sorted(groups.items(), key=lambda kv: _key(kv[0]))}


def render_masses(masses: Mapping) -> dict:
    return {("box" if v is BOX else "diverge" if v is DIVERGE else str(v)): fmt(m) for v, m in masses.items()}


# -- majority-vote extraction ---------------------------------------------------


@dataclass(frozen=True)
class ExtractReport:
    mode: str
    threshold: str
    N: int
    flagged: tuple[int, ...]  # indices where the output contradicts the target, or a stage limit was hit
    note: str = ""

    def to_dict(self):
        return {"mode": self.mode, "threshold": self.threshold, "N": self.N, "flagged": list(self.flagged),
                "note": self.note}


def majority_extract(phi: BoundedUseFunctional, mode: str, N: int, target: Callable[[int], int] | None = None):
    """``d(n) = i`` iff the class ``{X : Φ^X(n) = i}`` has measure greater than 1/2."""
    if mode not in ("generic", "dense"):
        raise ValueError("mode must be generic or dense")
    axioms, flagged = [], []
    for n in range(N):
        for v, m in outcome_measures(phi, n).items():
            if m > HALF and isinstance(v, int):
                axioms.append((n, v, n))
                if target is not None and target(n) != v:
                    flagged.append(n)
    note = "flagged: defined but differs from target"
    return PartialTrace.from_axioms(axioms, f"{mode}-majority"), ExtractReport(mode, "> 1/2", N, tuple(flagged), note)


def majority_extract_edc(phi: BoundedUseFunctional, N: int):
    """First class in the order (values ascending, □ last) with measure greater than 1/3."""
    out, flagged = [], []
    for n in range(N):
        masses = outcome_measures(phi, n)
        pick = BOX
        found = False
        for v, m in masses.items():
            if v is DIVERGE:
                continue
            if m > THIRD:
                pick, found = v, True
                break
        if not found:
            flagged.append(n)
        out.append(pick)
    note = "classes searched by increasing value with box last; flagged: no class above 1/3"
    return BoxMap.from_values(out, "edc-majority"), ExtractReport("edc", "> 1/3", N, tuple(flagged), note)


def majority_extract_coarse(phi: BoundedUseFunctional, N: int):
    """Coarse extraction through a first-found convergence class of measure at least 3/4.

    Convergent leaves are taken by (depth, path) until their union reaches 3/4.
    Inside that class the value with the largest mass wins if that mass is at
    least 1/2 (ties to the smaller value); otherwise ``d(n) = 0``. Inputs
    whose convergence mass stays below 3/4 get 0 and are flagged.
    """
    out, flagged = [], []
    for n in range(N):
        leaves = [(d, tuple(sorted(c.items())), c, v) for c, v, d in _leaves(phi.trees[n], {})]
        leaves.sort(key=lambda x: (x[0], x[1]))
        total, inside = Fraction(0), {}
        for _, _, c, v in leaves:
            if v is DIVERGE:
                continue
            m = Fraction(1, 2 ** len(c))
            total += m
            inside[v] = inside.get(v, Fraction(0)) + m
            if total >= THREE_QUARTERS:
                break
        if total < THREE_QUARTERS:
            flagged.append(n)
            out.append(0)
            continue
        ints = [(m, v) for v, m in inside.items() if isinstance(v, int)]
        best = max(ints, key=lambda mv: (mv[0], -mv[1]), default=None)
        out.append(best[1] if best is not None and best[0] >= HALF else 0)
    note = "flagged: no convergence class of measure 3/4"
    return TotalMap.from_values(out, "coarse-majority"), ExtractReport("coarse", ">= 3/4 class, >= 1/2 value", N,
                                                                        tuple(flagged), note)


# -- families of cylinder sets --------------------------------------------------


@dataclass(frozen=True)
class FamilyS:
    """Cylinder sets ``S_0 .. S_{N-1}``; ``S(A) = {n : A in S_n}``."""

    sets: tuple[CylinderSet, ...]
    name: str = "S"

    def __len__(self):
        return len(self.sets)

    @property
    def depth(self) -> int:
        return max((c.depth for c in self.sets), default=0)

    def trace(self, a: str) -> np.ndarray:
        """Indicator of ``S(A)`` on ``[0, N)`` for a prefix ``a`` of ``A`` at least ``depth`` long."""
        return np.array([c.contains(a) for c in self.sets], dtype=np.uint8)

    def to_json(self):
        return {"name": self.name, "sets": [c.to_json() for c in self.sets]}

    @classmethod
    def from_json(cls, rec) -> "FamilyS":
        sets = rec["sets"] if isinstance(rec, dict) else rec
        return cls(tuple(CylinderSet.from_json(s) for s in sets), rec.get("name", "S") if isinstance(rec, dict) else "S")

    def atoms(self):
        """``(prefix, weight)`` for every string of length ``depth``."""
        L = self.depth
        w = Fraction(1, 2 ** L)
        for bits in itertools.product("01", repeat=L):
            yield "".join(bits), w


def demo_family(N: int = 64) -> FamilyS:
    """``S_n = [0]`` for even ``n`` and the whole space for odd ``n``."""
    return FamilyS(tuple(CylinderSet.of("0") if n % 2 == 0 else CylinderSet.whole() for n in range(N)), "demo")


def _window_dense(trace: np.ndarray, N: int, r: Fraction) -> bool:
    # rho_m(S(A)) >= r for every m in [N/2, N]
    counts = np.concatenate([[0], np.cumsum(trace[:N], dtype=np.int64)])
    lo = max(N // 2, 1)
    return all(Fraction(int(counts[m]), m) >= r for m in range(lo, N + 1))


@dataclass(frozen=True)
class FubiniReport:
    N: int
    q: Fraction
    r: Fraction
    window: tuple[int, int]
    a_proxy: Fraction
    b_proxy: Fraction
    bound: Fraction
    verdict_ok: bool
    average_measure: Fraction
    integrated_density: Fraction
    identity_ok: bool
    hypotheses_met: bool
    a: Fraction | None = None
    b: Fraction | None = None

    def to_dict(self):
        return {
            "N": self.N, "q": fmt(self.q), "r": fmt(self.r), "window": list(self.window),
            "a_proxy": fmt(self.a_proxy), "b_proxy": fmt(self.b_proxy),
            "bound": fmt(self.bound), "verdict": "ok" if self.verdict_ok else "violated",
            "average_measure": fmt(self.average_measure), "integrated_density": fmt(self.integrated_density),
            "identity_ok": self.identity_ok, "hypotheses_met": self.hypotheses_met,
            "a": fmt(self.a) if self.a is not None else None, "b": fmt(self.b) if self.b is not None else None,
            "provenance": {"bound": "(1-q)a + r b <= 1", "a_proxy": "rho_N{n : mu(S_n) < q}",
                           "b_proxy": "mu{A : rho_m(S(A)) >= r on the window}"},
        }


def fubini_check(S: FamilyS, q, N: int | None = None, r=1, a=None, b=None) -> FubiniReport:
    """Finite form of the measure/density trade-off at depth ``N``.

    ``a_proxy`` is the density below ``N`` of ``{n : μ(S_n) < q}``; ``b_proxy``
    is the measure of the streams whose ``S(A)`` has density at least ``r`` at
    every ``m`` in ``[N/2, N]``. The verdict is ``(1 - q) a_proxy + r b_proxy <= 1``.
    With ``a`` and ``b`` given, the hypotheses are ``a_proxy > a`` and
    ``b_proxy > b`` and the bound uses ``a`` and ``b``.
    """
    N = len(S) if N is None else N
    if N < 1 or N > len(S):
        raise ValueError("need 1 <= N <= len(S)")
    q, r = Fraction(q), Fraction(r)
    mus = [c.measure for c in S.sets[:N]]
    a_proxy = Fraction(sum(1 for m in mus if m < q), N)
    average = sum(mus, Fraction(0)) / N
    integrated, b_proxy = Fraction(0), Fraction(0)
    for prefix, w in S.atoms():
        tr = S.trace(prefix)[:N]
        integrated += w * Fraction(int(tr.sum()), N)
        if _window_dense(tr, N, r):
            b_proxy += w
    if a is not None or b is not None:
        a = Fraction(a if a is not None else 0)
        b = Fraction(b if b is not None else 0)
        met = a_proxy > a and b_proxy > b
        bound = (1 - q) * a + r * b
    else:
        met = True
        bound = (1 - q) * a_proxy + r * b_proxy
    return FubiniReport(N, q, r, (max(N // 2, 1), N), a_proxy, b_proxy, bound, bound <= 1, average, integrated,
                        average == integrated, met, a, b)


@dataclass(frozen=True)
class VotingReport:
    N: int
    q: Fraction
    r: Fraction
    b_proxy: Fraction
    density: Fraction
    required: Fraction
    hypotheses_met: bool
    ok: bool

    def to_dict(self):
        return {"N": self.N, "q": fmt(self.q), "r": fmt(self.r), "b_proxy": fmt(self.b_proxy),
                "density": fmt(self.density), "required": fmt(self.required),
                "hypotheses_met": self.hypotheses_met, "ok": self.ok,
                "provenance": {"required": "1 - (1 - r b)/(1 - q)", "hypothesis": "b > q"}}


def majority_voting_density(S: FamilyS, q, N: int | None = None, r=1) -> VotingReport:
    """Density below ``N`` of ``{n : μ(S_n) >= q}`` against the bound the trade-off forces.

    The hypothesis is ``b_proxy > q``. Then ``1 - (1 - r b)/(1 - q)`` (or 1 when
    ``q = 1``) bounds the density from below.
    """
    rep = fubini_check(S, q, N, r)
    q, r = rep.q, rep.r
    density = 1 - rep.a_proxy
    if q == 1:
        required = Fraction(1) if rep.b_proxy * r >= 1 else Fraction(0)
    else:
        required = max(Fraction(0), 1 - (1 - r * rep.b_proxy) / (1 - q))
    met = rep.b_proxy > q
    return VotingReport(rep.N, q, r, rep.b_proxy, density, required, met, density >= required)


# -- random generators ------------------------------------------------------------


def random_family(rng: random.Random, N: int, L: int = 6, max_prefixes: int = 3) -> FamilyS:
    sets = []
    for _ in range(N):
        kind = rng.random()
        if kind < 0.2:
            sets.append(CylinderSet.whole())
        elif kind < 0.3:
            sets.append(CylinderSet.empty())
        else:
            k = rng.randint(1, max_prefixes)
            sets.append(CylinderSet(tuple("".join(rng.choice("01") for _ in range(rng.randint(1, L))) for _ in range(k))))
    return FamilyS(tuple(sets), "random")


def _random_tree(rng: random.Random, positions: list[int], leaf: Callable[[], Any]) -> Tree:
    if not positions:
        return Leaf(leaf())
    p, rest = positions[0], positions[1:]
    return Node(p, _random_tree(rng, rest, leaf), _random_tree(rng, rest, leaf))


def planted_functional(rng: random.Random, target: Sequence[int], use: int = 4, min_mass: Fraction = TWO_THIRDS,
                       values: Sequence[int] = (0, 1), box: bool = False, diverge: bool = False) -> BoundedUseFunctional:
    """Random full trees of depth ``use`` whose leaves carry ``target[n]`` with mass at least ``min_mass``.

    The remaining leaves get random other values (□ and divergence when enabled).
    The query positions are a random subset of ``[0, 2 use)``.
    """
    trees = []
    total = 2 ** use
    good = -(-min_mass.numerator * total // min_mass.denominator)  # ceil(min_mass * total)
    for t in target:
        extra = rng.randint(0, total - good)
        labels = [t] * (good + extra)
        wrong = [v for v in values if v != t] + ([BOX] if box else []) + ([DIVERGE] if diverge else [])
        labels += [rng.choice(wrong) if wrong else t for _ in range(total - len(labels))]
        rng.shuffle(labels)
        positions = rng.sample(range(2 * use), use)
        it = iter(labels)
        trees.append(_random_tree(rng, positions, lambda: next(it)))
    return BoundedUseFunctional(tuple(trees), "planted")


@dataclass(frozen=True)
class ConeStats:
    depth: int
    trials: int
    seed: int
    fraction: Fraction
    per_phi: dict  # name -> exact success measure (None when not bounded-use)

    def to_dict(self):
        return {"depth": self.depth, "trials": self.trials, "seed": self.seed, "fraction": fmt(self.fraction),
                "per_phi": {k: (fmt(v) if v is not None else None) for k, v in self.per_phi.items()}}


def cone_experiment(f: Callable[[int], int], pool: Sequence, depth: int, trials: int, seed: int) -> ConeStats:
    """Sample oracles ``X`` and count those for which some pooled ``Φ^X`` equals ``f`` below ``depth``.

    Pool entries are :class:`BoundedUseFunctional` (exact success measure
    reported: the measure of ``{X : Φ^X(n) = f(n) for all n < depth}``) or
    any object with ``evaluate(n, ask)`` returning an object with ``value``.
    """
    rng = random.Random(seed)
    target = [int(f(n)) for n in range(depth)]
    per_phi = {}
    for i, phi in enumerate(pool):
        name = getattr(phi, "name", f"phi{i}")
        if isinstance(phi, BoundedUseFunctional):
            per_phi[f"{i}:{name}"] = _exact_success(phi, target)
        else:
            per_phi[f"{i}:{name}"] = None
    hits = 0
    for _ in range(trials):
        cache: dict[int, int] = {}

        def x(p: int) -> int:
            if p not in cache:
                cache[p] = rng.getrandbits(1)
            return cache[p]

        for phi in pool:
            if all(_eval(phi, n, x) == target[n] for n in range(depth)):
                hits += 1
                break
    return ConeStats(depth, trials, seed, Fraction(hits, trials) if trials else Fraction(0), per_phi)


def _eval(phi, n, x):
    if isinstance(phi, BoundedUseFunctional):
        return phi.evaluate(n, x)
    return phi.evaluate(n, x).value


def _exact_success(phi: BoundedUseFunctional, target: Sequence[int]) -> Fraction:
    c = CylinderSet.whole()
    for n, t in enumerate(target):
        good = [cons for cons, v, _ in _leaves(phi.trees[n], {}) if v == t]
        cls = CylinderSet(())
        for cons in good:
            cls = cls | _constraint_cylinder(cons)
        c = c & cls
        if not c.prefixes:
            break
    return c.measure
