"""Partial oracles, enumeration operators and the oracle-side extraction kernels."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Any, Callable, Iterable, Mapping, Sequence

from .descriptions import BOX, NEVER, PartialTrace, TotalMap
from .machines import DIVERGED, Functional, NeedsOracle


# -- partial oracles --------------------------------------------------------


@dataclass(frozen=True)
class PartialOracle:
    """Triples ``⟨n, k, s⟩`` asserting ``target(n) = k`` from stage ``s`` on."""

    triples: tuple[tuple[int, int, int], ...]
    exact: bool = False
    target: str | None = None

    def domain(self, stage: int | None = None) -> frozenset[int]:
        return frozenset(n for n, _, s in self.triples if stage is None or s <= stage)

    def lookup(self, n: int, stage: int | None = None):
        for m, k, s in self.triples:
            if m == n and (stage is None or s <= stage):
                return k
        return None

    def verify(self, g: TotalMap) -> list[int]:
        """Arguments whose asserted value disagrees with ``g``."""
        return [n for n, k, _ in self.triples if g(n) != k]

    def to_json(self):
        return [list(t) for t in self.triples]

    @classmethod
    def from_json(cls, rows, exact: bool = False, target: str | None = None) -> "PartialOracle":
        return cls(tuple(tuple(int(x) for x in r) for r in rows), exact, target)


def oracle_from_description(f: PartialTrace, depth: int, exact: bool = False, target: str | None = None) -> PartialOracle:
    return PartialOracle(tuple(f.axioms(depth)), exact, target)


# -- enumeration operators --------------------------------------------------


@dataclass(frozen=True)
class Axiom:
    premise: frozenset  # of (position, value) pairs
    out: tuple[int, int]
    stage: int = 0

    def to_json(self):
        return [sorted([list(p) for p in self.premise]), list(self.out), self.stage]

    @classmethod
    def from_json(cls, row) -> "Axiom":
        premise, out, *rest = row
        return cls(frozenset(tuple(p) for p in premise), tuple(out), rest[0] if rest else 0)


@dataclass(frozen=True)
class EnumOp:
    axioms: tuple[Axiom, ...]
    label: str = "W"
    meta: dict = field(default_factory=dict, compare=False)

    def to_json(self):
        return [a.to_json() for a in self.axioms]

    @classmethod
    def from_json(cls, rows, label: str = "W") -> "EnumOp":
        return cls(tuple(Axiom.from_json(r) for r in rows), label)


@dataclass(frozen=True)
class EnumResult:
    outputs: tuple[tuple[int, int], ...]
    single_valued: bool
    witness: tuple[tuple[int, int], tuple[int, int]] | None
    stage: int | None

    def as_trace(self) -> PartialTrace:
        if not self.single_valued:
            raise ValueError(f"output is not single-valued: {self.witness}")
        return PartialTrace.from_axioms((n, v, 0) for n, v in self.outputs)

    def as_dict(self) -> dict:
        return dict(self.outputs)

    def to_json(self):
        return {"outputs": [list(p) for p in self.outputs], "single_valued": self.single_valued,
                "witness": [list(p) for p in self.witness] if self.witness else None, "stage": self.stage}


def _staged(X) -> dict:
    if isinstance(X, Mapping):
        return {tuple(k): v for k, v in X.items()}
    return {tuple(p): 0 for p in X}


def eval_enum_op(W: EnumOp, X: Iterable | Mapping, stage: int | None = None) -> EnumResult:
    """``W^X`` as visible at ``stage``.

    ``X`` is a set of pairs, or a mapping from pairs to the stage at which they
    appear. An axiom fires once its own stage and all its premises are visible.
    """
    seen = _staged(X)
    visible = {p for p, s in seen.items() if stage is None or s <= stage}
    out = set()
    for ax in W.axioms:
        if stage is not None and ax.stage > stage:
            continue
        if ax.premise <= visible:
            out.add(tuple(ax.out))
    outputs = tuple(sorted(out))
    witness = None
    for a, b in zip(outputs, outputs[1:]):
        if a[0] == b[0]:
            witness = (a, b)
            break
    return EnumResult(outputs, witness is None, witness, stage)


def graph_pairs(g: TotalMap | Callable[[int], int], depth: int) -> frozenset:
    return frozenset((n, int(g(n))) for n in range(depth))


# -- simulating functionals over all oracle answers ---------------------------


def functional_tree(phi: Functional, n: int, budget: int = 10_000, alphabet: Sequence | None = None,
                    fixed: Mapping[int, Any] | None = None) -> list[tuple[tuple[tuple[int, Any], ...], Any]]:
    """All computation paths of ``phi`` on ``n`` as ``(answers, value)`` leaves.

    ``answers`` lists the queried positions with the answers given, in query
    order. Positions in ``fixed`` are answered from it and not branched on.
    ``value`` is ``None`` when the path diverges or exceeds ``budget`` queries.
    Leaves come out in lexicographic order of answer sequences.
    """
    alphabet = tuple(phi.alphabet if alphabet is None else alphabet)
    fixed = dict(fixed or {})
    leaves = []

    def walk(assign: dict):
        order: list[tuple[int, Any]] = []

        def ask(m: int):
            if m in fixed:
                return fixed[m]
            if m not in assign:
                raise NeedsOracle(m)
            if all(p != m for p, _ in order):
                order.append((m, assign[m]))
            return assign[m]

        try:
            ev = phi.evaluate(n, ask, max_queries=budget)
        except NeedsOracle as need:
            for a in alphabet:
                walk({**assign, need.position: a})
            return
        value = None if ev.value is DIVERGED else ev.value
        # keep only answers that were actually used on this path, in query order
        leaves.append((tuple(order), value))

    walk({})
    return leaves


# -- use-bounded-from-below kernels -------------------------------------------


class UbfbBudgetError(RuntimeError):
    def __init__(self, k: int, msg: str = ""):
        super().__init__(f"no blanking level n <= {k} converged to a proper value on input {k}{msg}")
        self.k = k


@dataclass(frozen=True)
class UbfbAttempt:
    n: int
    value: Any
    queries: tuple[int, ...]


@dataclass(frozen=True)
class UbfbResult:
    k: int
    n: int
    value: int
    queries: tuple[int, ...]
    attempts: tuple[UbfbAttempt, ...]

    def to_json(self):
        return {"k": self.k, "n": self.n, "value": self.value, "queries": list(self.queries),
                "attempts": [{"n": a.n, "value": "box" if a.value is BOX else
                              ("diverged" if a.value is DIVERGED else a.value), "queries": list(a.queries)}
                             for a in self.attempts]}


def blanked(g: Callable[[int], Any], n: int) -> Callable[[int], Any]:
    """``g_n``: answers □ below ``n`` and ``g`` elsewhere."""
    return lambda m: BOX if m < n else g(m)


def ubfb_compute(phi: Functional, g: Callable[[int], Any], k: int, max_queries: int = 10_000) -> UbfbResult:
    """``Φ^{g_n}(k)`` for the largest ``n <= k`` where it converges to a proper value."""
    attempts = []
    for n in range(k, -1, -1):
        ev = phi.evaluate(k, blanked(g, n), max_queries=max_queries)
        attempts.append(UbfbAttempt(n, ev.value, ev.queries))
        if ev.value is not DIVERGED and ev.value is not BOX:
            return UbfbResult(k, n, int(ev.value), ev.queries, tuple(attempts))
    raise UbfbBudgetError(k)


def ubfb_to_enumop(phi: Functional, max_n: int, budget: int = 10_000) -> EnumOp:
    """Axioms ``(F, (n, i))`` from simulating ``Φ`` on ``n`` with answers read from ``F``.

    Every halting path contributes its answer set as ``F``. Paths are grown
    adaptively, so each ``F`` fixes one value per queried position.
    """
    axioms = []
    min_use = {}
    for n in range(max_n):
        leaves = functional_tree(phi, n, budget)
        uses = [p for answers, _ in leaves for p, _ in answers]
        min_use[n] = min(uses) if uses else None
        for answers, value in leaves:
            if value is None or value is BOX:
                continue
            axioms.append(Axiom(frozenset(answers), (n, int(value)), stage=n))
    return EnumOp(tuple(axioms), f"ubfb({phi.name})", {"max_n": max_n, "min_use": min_use})


def ubfb_threshold(W: EnumOp, c: int) -> int | None:
    """Least ``n0`` such that every tested ``n >= n0`` has minimum use ``>= c``.

    ``None`` if the last tested input still queries below ``c``.
    """
    min_use, max_n = W.meta["min_use"], W.meta["max_n"]
    n0 = max_n
    while n0 > 0 and (min_use[n0 - 1] is None or min_use[n0 - 1] >= c):
        n0 -= 1
    if n0 == max_n and max_n > 0:
        return None
    return n0


# -- safe-cone extraction -----------------------------------------------------


class UnsafePrefix(ValueError):
    def __init__(self, sigma: str, n: int, value, expected):
        super().__init__(f"extension {sigma!r} computes {value} at {n}, target is {expected}")
        self.sigma, self.n, self.value, self.expected = sigma, n, value, expected


def run_on_string(phi: Functional, n: int, sigma: str, max_queries: int = 10_000):
    """``Φ^σ(n)`` when every query stays below ``|σ|``; ``None`` otherwise."""

    def ask(m: int):
        if m >= len(sigma):
            raise NeedsOracle(m)
        return int(sigma[m])

    try:
        ev = phi.evaluate(n, ask, max_queries=max_queries)
    except NeedsOracle:
        return None
    return None if ev.value is DIVERGED else ev.value


def _extensions(tau: str, depth: int):
    for length in range(len(tau), depth + 1):
        for tail in itertools.product("01", repeat=length - len(tau)):
            yield tau + "".join(tail)


def check_safe(phi: Functional, tau: str, depth: int, N: int, target: Callable[[int], int], max_queries: int = 10_000):
    """Raise :class:`UnsafePrefix` unless no ``σ ≻ τ`` of length ``<= depth`` errs below ``N``."""
    for sigma in _extensions(tau, depth):
        for n in range(N):
            v = run_on_string(phi, n, sigma, max_queries)
            if v is not None and v != target(n):
                raise UnsafePrefix(sigma, n, v, target(n))


def safe_cone_extract(phi: Functional, tau: str, depth: int, N: int, target: Callable[[int], int] | None = None,
                      max_queries: int = 10_000) -> PartialTrace:
    """``d(n) = Φ^σ(n)`` for the first ``σ ≻ τ`` (by length, then lexicographic) converging on ``n``.

    With a ``target`` the safety of ``τ`` is verified exhaustively first. The
    stage of ``d(n)`` is the rank of the first converging ``σ`` in the search.
    """
    if target is not None:
        check_safe(phi, tau, depth, N, target, max_queries)
    axioms, pending = [], set(range(N))
    for rank, sigma in enumerate(_extensions(tau, depth)):
        for n in sorted(pending):
            v = run_on_string(phi, n, sigma, max_queries)
            if v is not None:
                axioms.append((n, int(v), rank))
                pending.discard(n)
        if not pending:
            break
    return PartialTrace.from_axioms(axioms, f"safe({phi.name},{tau!r})")


# -- a pool of reductions with designed use patterns ----------------------------


def _proper(*answers) -> bool:
    return all(a is not BOX for a in answers)


def _reader(offsets: Callable[[int], Sequence[int]], combine: Callable[[list], int]):
    """Read positions ``offsets(n)``; □ anywhere makes the output □."""

    def fn(n, ask):
        answers = [ask(p) for p in offsets(n)]
        if not _proper(*answers):
            return BOX
        return combine(answers)

    return fn


def _xor(bits):
    out = 0
    for b in bits:
        out ^= b
    return out


def _majority(bits):
    return int(2 * sum(bits) > len(bits))


def _adaptive(n, ask):
    a = ask(n)
    if a is BOX:
        return BOX
    b = ask(n + 1 + a)
    return BOX if b is BOX else a ^ b


def _search_first_one(n, ask):
    # reads n, n+1, ... up to n+3 looking for a 1
    for j in range(4):
        a = ask(n + j)
        if a is BOX:
            return BOX
        if a == 1:
            return j
    return 4


def _reads_zero(n, ask):
    a, b = ask(0), ask(n)
    return BOX if not _proper(a, b) else a ^ b


def _lower_half(n, ask):
    a = ask(n // 2)
    return BOX if a is BOX else a


def _diverge_on_odd(n, ask):
    a = ask(n)
    if a is BOX:
        return BOX
    return DIVERGED if n % 2 and a == 1 else a


REDUCTION_POOL: dict[str, Functional] = {f.name: f for f in [
    Functional("constant0", lambda n, ask: 0, note="no queries"),
    Functional("constant1", lambda n, ask: 1, note="no queries"),
    Functional("parity_of_input", lambda n, ask: n % 2, note="no queries"),
    Functional("echo", _reader(lambda n: [n], lambda a: a[0]), note="reads n"),
    Functional("negate", _reader(lambda n: [n], lambda a: 1 - a[0]), note="reads n"),
    Functional("next", _reader(lambda n: [n + 1], lambda a: a[0]), note="reads n+1"),
    Functional("double", _reader(lambda n: [2 * n], lambda a: a[0]), note="reads 2n"),
    Functional("double_plus1", _reader(lambda n: [2 * n + 1], lambda a: a[0]), note="reads 2n+1"),
    Functional("pair_and", _reader(lambda n: [n, n + 1], lambda a: a[0] & a[1]), note="reads n, n+1"),
    Functional("pair_or", _reader(lambda n: [n, n + 1], lambda a: a[0] | a[1]), note="reads n, n+1"),
    Functional("pair_xor", _reader(lambda n: [n, n + 2], _xor), note="reads n, n+2"),
    Functional("window3_majority", _reader(lambda n: [n, n + 1, n + 2], _majority), note="reads n..n+2"),
    Functional("window4_sum", _reader(lambda n: [n, n + 1, n + 2, n + 3], sum), note="reads n..n+3"),
    Functional("square_index", _reader(lambda n: [n * n], lambda a: a[0]), note="reads n^2"),
    Functional("lag2", _reader(lambda n: [max(n - 2, 0)], lambda a: a[0]), note="reads n-2"),
    Functional("lag_sqrt", _reader(lambda n: [n - int(n ** 0.5)], lambda a: a[0]), note="reads n - sqrt n"),
    Functional("half_and_self", _reader(lambda n: [n // 2, n], lambda a: a[0] & a[1]), note="reads n/2 and n"),
    Functional("lower_half", _lower_half, note="reads n/2"),
    Functional("adaptive", _adaptive, note="reads n, then n+1 or n+2 by the first answer"),
    Functional("search_first_one", _search_first_one, note="reads n.. until a 1, at most 4"),
    Functional("diverge_on_odd", _diverge_on_odd, note="reads n; diverges on odd n when the bit is 1"),
    Functional("reads_zero", _reads_zero, use_bounded_below=False, note="reads 0 and n"),
    Functional("parity_prefix", _reader(lambda n: sorted(set(range(min(n, 5) + 1)) | {n}), _xor),
               use_bounded_below=False, note="reads 0..min(n, 5) and n"),
]}
