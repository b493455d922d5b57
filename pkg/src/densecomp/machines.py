"""Step-bounded register machines, c.e. set constructions and the realizability engine.

Program space
-------------
Every natural number ``e`` names a program. Indices below ``len(CATALOG)`` are
hand-written programs with fixed names; larger indices decode through a
Cantor-pairing enumeration of instruction lists, so decoding is total.

A program runs on registers ``r0..r7`` (input in ``r0``, output read from
``r0`` when the program halts or jumps out of range). Instructions::

    HALT | SET r c | INC r | DEC r | ADD r a b | SUB r a b | MUL r a b
    DIV r a b | MOD r a b | JZ r t | JMP t | JLT a b t | QUERY r a

``QUERY r a`` stores the oracle's answer at position ``r[a]`` into ``r``.
Without an oracle every query answers 0.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from functools import lru_cache
from math import isqrt
from typing import Any, Callable, Iterable, Sequence

import numpy as np

from . import density as dn
from .descriptions import BOX, BoxMap, PartialTrace, TotalMap, defined_values, errors_on_domain, join_descriptions, total_trace
from .density import fmt, indicator_profile

N_REGS = 8

HALT, SET, INC, DEC, ADD, SUB, MUL, DIV, MOD, JZ, JMP, JLT, QUERY = range(13)
_ARITY = {HALT: 0, SET: 2, INC: 1, DEC: 1, ADD: 3, SUB: 3, MUL: 3, DIV: 3, MOD: 3, JZ: 2, JMP: 1, JLT: 3, QUERY: 2}
_NAMES = ["HALT", "SET", "INC", "DEC", "ADD", "SUB", "MUL", "DIV", "MOD", "JZ", "JMP", "JLT", "QUERY"]
# which operand slots are registers (reduced mod N_REGS); others are constants/targets
_REG_SLOTS = {SET: (0,), INC: (0,), DEC: (0,), ADD: (0, 1, 2), SUB: (0, 1, 2), MUL: (0, 1, 2), DIV: (0, 1, 2),
              MOD: (0, 1, 2), JZ: (0,), JLT: (0, 1), QUERY: (0, 1)}


class _Diverged:
    def __repr__(self):
        return "DIVERGED"

    def __reduce__(self):
        return "DIVERGED"


DIVERGED = _Diverged()


class NeedsOracle(Exception):
    """Signal from an oracle that it cannot answer the queried position."""

    def __init__(self, position: int):
        super().__init__(position)
        self.position = position


Program = tuple[tuple[int, ...], ...]


# -- pairing and decoding ---------------------------------------------------


def pair(x: int, y: int) -> int:
    return (x + y) * (x + y + 1) // 2 + y


def unpair(z: int) -> tuple[int, int]:
    w = (isqrt(8 * z + 1) - 1) // 2
    y = z - w * (w + 1) // 2
    return w - y, y


def _decode_instruction(h: int) -> tuple[int, ...]:
    op, rest = h % 13, h // 13
    args = []
    for _ in range(_ARITY[op]):
        a, rest = unpair(rest)
        args.append(a)
    for slot in _REG_SLOTS.get(op, ()):
        args[slot] %= N_REGS
    return (op, *args)


def decode_list(x: int) -> Program:
    """``0`` is the empty list; ``1 + pair(head, tail)`` is ``[head, *tail]``."""
    out = []
    while x > 0:
        h, x = unpair(x - 1)
        out.append(_decode_instruction(h))
    return tuple(out)


def encode_list(program: Sequence[Sequence[int]]) -> int:
    """Inverse of :func:`decode_list` for programs in canonical form."""
    x = 0
    for ins in reversed(program):
        op, *args = ins
        rest = 0
        for a in reversed(args):
            rest = pair(a, rest)
        x = 1 + pair(13 * rest + op, x)
    return x


# -- assembler and catalog --------------------------------------------------


def assemble(lines: Sequence[tuple]) -> Program:
    """Assemble ``(mnemonic, *args)`` lines; ``("label", name)`` marks a jump target."""
    labels, code = {}, []
    for line in lines:
        if line[0] == "label":
            labels[line[1]] = len(code)
        else:
            code.append(line)
    out = []
    for mnemonic, *args in code:
        op = _NAMES.index(mnemonic)
        if op in (JZ, JLT, JMP):
            args[-1] = labels[args[-1]]
        out.append((op, *args))
    return tuple(out)


def _odd_part_lt(bound: int) -> Program:
    # 0 when the odd part of the input is below ``bound``, 1 otherwise (input 0 -> 1)
    return assemble([
        ("JZ", 0, "big"), ("SET", 1, 2),
        ("label", "loop"), ("MOD", 2, 0, 1), ("JZ", 2, "halve"), ("JMP", "test"),
        ("label", "halve"), ("DIV", 0, 0, 1), ("JMP", "loop"),
        ("label", "test"), ("SET", 3, bound), ("JLT", 0, 3, "small"),
        ("label", "big"), ("SET", 0, 1), ("HALT",),
        ("label", "small"), ("SET", 0, 0), ("HALT",),
    ])


def _odd_part_mod4_is(residue: int) -> Program:
    return assemble([
        ("JZ", 0, "no"), ("SET", 1, 2),
        ("label", "loop"), ("MOD", 2, 0, 1), ("JZ", 2, "halve"), ("JMP", "test"),
        ("label", "halve"), ("DIV", 0, 0, 1), ("JMP", "loop"),
        ("label", "test"), ("SET", 1, 4), ("MOD", 0, 0, 1), ("SET", 1, residue), ("SUB", 2, 0, 1),
        ("SUB", 3, 1, 0), ("ADD", 2, 2, 3), ("JZ", 2, "yes"),
        ("label", "no"), ("SET", 0, 1), ("HALT",),
        ("label", "yes"), ("SET", 0, 0), ("HALT",),
    ])


CATALOG: dict[str, Program] = {
    "zero": assemble([("SET", 0, 0), ("HALT",)]),
    "loop": assemble([("label", "l"), ("JMP", "l")]),
    "succ": assemble([("INC", 0), ("HALT",)]),
    "identity": assemble([("HALT",)]),
    "one": assemble([("SET", 0, 1), ("HALT",)]),
    "parity": assemble([("SET", 1, 2), ("MOD", 0, 0, 1), ("HALT",)]),
    "oddpart_lt_10": _odd_part_lt(10),
    "zero_if_oddpart_1mod4": _odd_part_mod4_is(1),
    "zero_if_oddpart_3mod4": _odd_part_mod4_is(3),
    "zero_below_100": assemble([("SET", 1, 100), ("JLT", 0, 1, "z"), ("SET", 0, 1), ("HALT",),
                                ("label", "z"), ("SET", 0, 0), ("HALT",)]),
    "loop_if_odd": assemble([("SET", 1, 2), ("MOD", 2, 0, 1), ("label", "l"), ("JZ", 2, "z"), ("JMP", "l"),
                             ("label", "z"), ("SET", 0, 0), ("HALT",)]),
    "square": assemble([("MUL", 0, 0, 0), ("HALT",)]),
    "two": assemble([("SET", 0, 2), ("HALT",)]),
    "even_indicator": assemble([("SET", 1, 2), ("MOD", 0, 0, 1), ("SET", 1, 1), ("SUB", 0, 1, 0), ("HALT",)]),
    "half": assemble([("SET", 1, 2), ("DIV", 0, 0, 1), ("HALT",)]),
    "zero_if_mult3": assemble([("SET", 1, 3), ("MOD", 0, 0, 1), ("JZ", 0, "z"), ("SET", 0, 1), ("HALT",),
                               ("label", "z"), ("HALT",)]),
    # index 16 onwards: slow or oracle-reading programs
    "count_up": assemble([("label", "l"), ("INC", 1), ("JMP", "l")]),
    "query_echo": assemble([("QUERY", 0, 0), ("HALT",)]),
    "query_zero": assemble([("SET", 1, 0), ("QUERY", 0, 1), ("HALT",)]),
    "query_next": assemble([("INC", 0), ("QUERY", 0, 0), ("HALT",)]),
}
CATALOG_NAMES: tuple[str, ...] = tuple(CATALOG)
CATALOG_INDEX: dict[str, int] = {name: i for i, name in enumerate(CATALOG_NAMES)}


@lru_cache(maxsize=4096)
def decode(e: int) -> Program:
    """The program with index ``e``; total on all naturals."""
    if e < 0:
        raise ValueError("program indices are natural numbers")
    if e < len(CATALOG_NAMES):
        return CATALOG[CATALOG_NAMES[e]]
    return decode_list(e - len(CATALOG_NAMES))


def index_of(name: str) -> int:
    return CATALOG_INDEX[name]


def catalog_json() -> str:
    """The program catalog file: names mapped to indices and listings."""
    return json.dumps({name: {"index": i, "code": [list(ins) for ins in CATALOG[name]]}
                       for i, name in enumerate(CATALOG_NAMES)}, indent=2, sort_keys=True)


# -- interpreter ------------------------------------------------------------


def execute(program: Program, n: int, steps: int, oracle: Callable[[int], Any] | None = None) -> tuple[Any, int]:
    """Run ``program`` on input ``n`` for at most ``steps`` instructions.

    Returns ``(value, steps_used)``; value is ``DIVERGED`` if the budget ran
    out or a repeated machine state proves the run never halts.
    """
    regs = [0] * N_REGS
    regs[0] = n
    pc, used, size = 0, 0, len(program)
    # Brent-style cycle check: compare against a snapshot refreshed at powers of two.
    snap_pc, snap_regs, next_snap = -1, None, 1
    while used < steps:
        if pc >= size:
            return regs[0], used
        ins = program[pc]
        op = ins[0]
        used += 1
        pc += 1
        if op == HALT:
            return regs[0], used
        elif op == SET:
            regs[ins[1]] = ins[2]
        elif op == INC:
            regs[ins[1]] += 1
        elif op == DEC:
            if regs[ins[1]]:
                regs[ins[1]] -= 1
        elif op == ADD:
            regs[ins[1]] = regs[ins[2]] + regs[ins[3]]
        elif op == SUB:
            regs[ins[1]] = max(regs[ins[2]] - regs[ins[3]], 0)
        elif op == MUL:
            regs[ins[1]] = regs[ins[2]] * regs[ins[3]]
        elif op == DIV:
            b = regs[ins[3]]
            regs[ins[1]] = regs[ins[2]] // b if b else 0
        elif op == MOD:
            b = regs[ins[3]]
            regs[ins[1]] = regs[ins[2]] % b if b else 0
        elif op == JZ:
            if regs[ins[1]] == 0:
                pc = ins[2]
        elif op == JMP:
            pc = ins[1]
        elif op == JLT:
            if regs[ins[1]] < regs[ins[2]]:
                pc = ins[3]
        elif op == QUERY:
            ans = 0 if oracle is None else oracle(regs[ins[2]])
            regs[ins[1]] = ans if isinstance(ans, int) else 0
        if pc == snap_pc and regs == snap_regs:
            return DIVERGED, used
        if used == next_snap:
            snap_pc, snap_regs, next_snap = pc, regs.copy(), 2 * next_snap
    return DIVERGED, used


def run(e: int, n: int, s: int, oracle: Callable[[int], Any] | None = None):
    """Value of program ``e`` on ``n`` within ``s`` steps, or ``DIVERGED`` (so far)."""
    return execute(decode(e), n, s, oracle)[0]


@lru_cache(maxsize=1 << 16)
def _run_cached(e: int, n: int, s: int):
    return execute(decode(e), n, s)


def halting_steps(e: int, n: int, s: int) -> int | None:
    """Steps program ``e`` needs to halt on ``n``, if it halts within ``s``."""
    v, used = _run_cached(e, n, s)
    return None if v is DIVERGED else used


# -- oracle functionals -----------------------------------------------------


@dataclass(frozen=True)
class Evaluation:
    value: Any
    queries: tuple[int, ...]


@dataclass(frozen=True, eq=False)
class Functional:
    """A Turing functional ``fn(n, ask) -> value``.

    ``ask(m)`` returns the oracle's answer at position ``m``. ``fn`` may return
    ``DIVERGED``. ``alphabet`` lists the oracle answers worth branching on
    when the functional is simulated without a fixed oracle.
    """

    name: str
    fn: Callable[[int, Callable[[int], Any]], Any]
    alphabet: tuple = (0, 1)
    use_bounded_below: bool = True
    note: str = ""

    def evaluate(self, n: int, oracle: Callable[[int], Any], max_queries: int = 10_000) -> Evaluation:
        log: list[int] = []

        def ask(m: int):
            if len(log) >= max_queries:
                raise _Budget
            log.append(m)
            return oracle(m)

        try:
            value = self.fn(n, ask)
        except _Budget:
            value = DIVERGED
        return Evaluation(value, tuple(log))

    def __call__(self, n: int, oracle: Callable[[int], Any]):
        return self.evaluate(n, oracle).value


class _Budget(Exception):
    pass


def machine_functional(e: int, steps: int = 10_000, name: str | None = None) -> Functional:
    """Register program ``e`` used as an oracle functional via its QUERY instruction."""
    return Functional(name or f"program:{e}", lambda n, ask: run(e, n, steps, ask))


# -- c.e. construction logs -------------------------------------------------


@dataclass(frozen=True)
class Event:
    element: int
    stage: int
    reason: str


@dataclass(frozen=True)
class Trigger:
    e: int
    m: int
    stage: int
    zeros: int
    odd_count: int


@dataclass(frozen=True)
class CeSetLog:
    """Enumeration events of a c.e. set built in stages."""

    construction: str
    params: dict
    events: tuple[Event, ...]
    triggers: tuple[Trigger, ...] = ()

    def elements(self) -> frozenset[int]:
        return frozenset(ev.element for ev in self.events)

    def as_set(self) -> dn.SetStream:
        return dn.finite_set(self.elements(), label=f"log:{self.construction}")

    def to_json(self) -> dict:
        return {
            "construction": self.construction,
            "params": self.params,
            "events": [[ev.element, ev.stage, ev.reason] for ev in self.events],
            "triggers": [[t.e, t.m, t.stage, t.zeros, t.odd_count] for t in self.triggers],
        }

    @classmethod
    def from_json(cls, rec: dict) -> "CeSetLog":
        return cls(rec["construction"], rec["params"],
                   tuple(Event(*ev) for ev in rec["events"]),
                   tuple(Trigger(*t) for t in rec.get("triggers", [])))

    def check(self) -> None:
        stages = [ev.stage for ev in self.events]
        if stages != sorted(stages):
            raise AssertionError("stages must be nondecreasing")
        seen = [ev.element for ev in self.events]
        if len(seen) != len(set(seen)):
            raise AssertionError("an element was enumerated twice")


def _column_program(e: int, indices: Sequence[int] | None) -> int:
    return e if indices is None else indices[e]


def build_ndc_diagonal(E: int, M: int, s: int, indices: Sequence[int] | None = None) -> CeSetLog:
    """Diagonal c.e. set with every column ``{2^e k : k odd}`` full or finite.

    For ``e <= E`` and ``2 <= m <= M`` (handled at stage ``e + m``): if program
    ``e`` outputs 0 within ``s`` steps on ``2^e k`` for at least half of the odd
    ``k < m``, every ``2^e k`` with ``k`` odd and ``k < m`` is enumerated.
    ``indices[e]`` optionally replaces the program used for column ``e``.
    """
    if E < 0 or M < 1:
        raise ValueError("need E >= 0 and M >= 1")
    zero_at: dict[int, list[int]] = {}
    for e in range(E + 1):
        prog = _column_program(e, indices)
        # prefix counts of zeros over odd k, indexed by m
        flags = [0] * (M + 1)
        for k in range(1, M, 2):
            flags[k] = 1 if _run_cached(prog, (1 << e) * k, s)[0] == 0 else 0
        zero_at[e] = list(itertools.accumulate(flags))
    events, triggers, done = [], [], set()
    for t in range(2, E + M + 1):
        for e in range(0, min(t, E) + 1):
            m = t - e
            if not 2 <= m <= M:
                continue
            odd_count = m // 2
            zeros = zero_at[e][m - 1]
            if 2 * zeros >= odd_count:
                triggers.append(Trigger(e, m, t, zeros, odd_count))
                for k in range(1, m, 2):
                    x = (1 << e) * k
                    if x not in done:
                        done.add(x)
                        events.append(Event(x, t, f"e={e},m={m}"))
    return CeSetLog("ndc_diagonal", {"E": E, "M": M, "s": s, "indices": list(indices) if indices else None},
                    tuple(events), tuple(triggers))


def audit_ndc_diagonal(log: CeSetLog) -> list[str]:
    """Independent audit of a diagonal log; returns a list of problems."""
    p = log.params
    s, indices = p["s"], p["indices"]
    problems = []
    elements = log.elements()
    for t in log.triggers:
        prog = _column_program(t.e, indices)
        ks = list(range(1, t.m, 2))
        zeros = sum(1 for k in ks if run(prog, (1 << t.e) * k, s) == 0)
        if zeros != t.zeros or len(ks) != t.odd_count or 2 * zeros < len(ks):
            problems.append(f"trigger e={t.e} m={t.m} fails the half-zeros condition")
        missing = [k for k in ks if (1 << t.e) * k not in elements]
        if missing:
            problems.append(f"trigger e={t.e} m={t.m} left column entries k={missing[:5]} out")
    allowed = {(1 << t.e) * k for t in log.triggers for k in range(1, t.m, 2)}
    if not elements <= allowed:
        problems.append("elements enumerated without a trigger")
    return problems


def column_dichotomy(log: CeSetLog) -> dict[int, dict]:
    """Per column: last trigger and whether triggers reach ``M`` (cofinal at this scale)."""
    M = log.params["M"]
    out = {}
    for e in range(log.params["E"] + 1):
        ms = [t.m for t in log.triggers if t.e == e]
        out[e] = {"last_trigger": max(ms) if ms else None, "cofinal": bool(ms) and max(ms) >= M - 1}
    return out


def build_simple_density0(s: int, E: int, indices: Sequence[int] | None = None) -> CeSetLog:
    """Simple-set construction admitting only elements ``>= 2^e`` for requirement ``e``.

    ``W_e`` is the halting domain of program ``e`` (or ``indices[e]``). For each
    ``e <= E`` the first element ``n >= 2^e`` seen in ``W_e`` is enumerated,
    where ``n`` is seen at stage ``max(n, steps)``; ties go to the smaller ``n``.
    """
    found = []
    for e in range(E + 1):
        prog = _column_program(e, indices)
        lo = 1 << e
        best = None  # (stage, n)
        n = lo
        while n <= s and (best is None or n < best[0]):
            used = halting_steps(prog, n, s if best is None else min(s, best[0]))
            if used is not None:
                cand = (max(n, used), n)
                if best is None or cand < best:
                    best = cand
            n += 1
        if best is not None:
            found.append((best[0], e, best[1]))
    found.sort()
    events, taken = [], set()
    for stage, e, n in found:
        if n not in taken:
            taken.add(n)
            events.append(Event(n, stage, f"e={e}"))
    return CeSetLog("simple_density0", {"s": s, "E": E, "indices": list(indices) if indices else None},
                    tuple(events))


def density_bound_violations(log: CeSetLog, N: int) -> list[int]:
    """Prefixes ``n <= N`` where ``|A ↾ n| > floor(log2 n) + 1``."""
    counts = log.as_set().counts(N)
    ns = np.arange(1, N + 1, dtype=np.int64)
    bound = np.floor(np.log2(ns)).astype(np.int64) + 1
    # float log2 is exact at powers of two; recheck the few indices just below them
    bad = np.flatnonzero(counts[1:] > bound) + 1
    return [int(n) for n in bad if counts[n] > int(n).bit_length()]


# -- implication graph and realizability ------------------------------------

VERTICES = ("edc", "cc", "gc", "dc", "alpha=1", "gamma=1")
EDGES = (("edc", "cc"), ("edc", "gc"), ("cc", "dc"), ("gc", "dc"), ("gc", "alpha=1"), ("dc", "gamma=1"),
         ("alpha=1", "gamma=1"))
_ALIASES = {"α=1": "alpha=1", "alpha1": "alpha=1", "a=1": "alpha=1", "alpha": "alpha=1",
            "γ=1": "gamma=1", "gamma1": "gamma=1", "g=1": "gamma=1", "gamma": "gamma=1"}


class UnknownVertex(ValueError):
    pass


def vertex(name: str) -> str:
    v = _ALIASES.get(name.strip(), name.strip())
    if v not in VERTICES:
        raise UnknownVertex(f"unknown property {name!r}; expected one of {', '.join(VERTICES)}")
    return v


def _vertices(names: Iterable[str]) -> frozenset[str]:
    return frozenset(vertex(x) for x in names)


@lru_cache(maxsize=None)
def _below_table() -> dict[str, frozenset[str]]:
    succ = {v: [b for a, b in EDGES if a == v] for v in VERTICES}
    table = {}
    for v in VERTICES:
        seen, stack = {v}, [v]
        while stack:
            for w in succ[stack.pop()]:
                if w not in seen:
                    seen.add(w)
                    stack.append(w)
        table[v] = frozenset(seen)
    return table


def implied_by(p: str) -> frozenset[str]:
    """All ``q`` with ``q <= p`` (``p`` itself included)."""
    return _below_table()[vertex(p)]


def leq(q: str, p: str) -> bool:
    return vertex(q) in implied_by(p)


def violation(P: Iterable[str], Q: Iterable[str]) -> tuple[str, str] | None:
    P, Q = _vertices(P), _vertices(Q)
    for p in sorted(P, key=VERTICES.index):
        for q in sorted(Q, key=VERTICES.index):
            if leq(q, p):
                return p, q
    return None


def realizable(P: Iterable[str], Q: Iterable[str]) -> bool:
    """True iff no ``p`` in ``P`` and ``q`` in ``Q`` have ``q <= p``."""
    return violation(P, Q) is None


def maximal_elements(P: Iterable[str]) -> frozenset[str]:
    P = _vertices(P)
    return frozenset(p for p in P if not any(p != r and leq(p, r) for r in P))


# -- building blocks and recipes --------------------------------------------


@dataclass(frozen=True)
class Block:
    name: str
    constructible: bool
    properties: dict
    note: str = ""

    def holds(self, v: str) -> bool:
        return self.properties[vertex(v)]


def _props(true: Iterable[str]) -> dict:
    true = set(true)
    return {v: v in true for v in VERTICES}


BLOCKS: dict[str, Block] = {b.name: b for b in [
    Block("computable", True, _props(VERTICES), "the empty set"),
    Block("simple_density0", True, _props({"cc", "dc", "gamma=1"}),
          "simple set of density 0: coarsely computable, alpha = 0"),
    Block("ndc_diagonal", True, _props({"alpha=1", "gamma=1"}),
          "diagonal set with alpha = 1 that is not densely computable"),
    Block("coded_ce", True, _props({"cc", "dc", "alpha=1", "gamma=1"}),
          "{2^n k : n in B, k odd} for a noncomputable c.e. B (B approximated by a halting set)"),
    Block("dense1_no_computable_subset", False, _props({"cc", "gc", "dc", "alpha=1", "gamma=1"}),
          "c.e. set of density 1 with no computable subset of density 1 (cited construction)"),
    Block("gc_not_cc", False, _props({"gc", "dc", "alpha=1", "gamma=1"}),
          "c.e. set generically but not coarsely computable (cited construction)"),
    Block("gamma_below_1", False, _props(()),
          "c.e. set with coarse computability bound below 1 (cited construction)"),
]}


@dataclass(frozen=True)
class BlockTerm:
    block: str

    def properties(self) -> dict:
        return dict(BLOCKS[self.block].properties)

    def blocks(self) -> list[str]:
        return [self.block]

    def to_json(self):
        return {"block": self.block, "constructible": BLOCKS[self.block].constructible}

    def render(self) -> str:
        return self.block


@dataclass(frozen=True)
class JoinTerm:
    left: "Recipe"
    right: "Recipe"

    def properties(self) -> dict:
        # a property holds of a join iff it holds of both halves
        a, b = self.left.properties(), self.right.properties()
        return {v: a[v] and b[v] for v in VERTICES}

    def blocks(self) -> list[str]:
        return self.left.blocks() + self.right.blocks()

    def to_json(self):
        return {"join": [self.left.to_json(), self.right.to_json()]}

    def render(self) -> str:
        return f"({self.left.render()} ⊕ {self.right.render()})"


Recipe = BlockTerm | JoinTerm


@dataclass(frozen=True)
class Unrealizable:
    p: str
    q: str

    def to_json(self):
        return {"unrealizable": True, "violating_pair": [self.p, self.q]}


def join_all(parts: Sequence[Recipe]) -> Recipe:
    if not parts:
        raise ValueError("empty join")
    out = parts[-1]
    for part in reversed(parts[:-1]):
        out = JoinTerm(part, out)
    return out


def recipe_from_json(rec: dict) -> Recipe:
    if "join" in rec:
        left, right = rec["join"]
        return JoinTerm(recipe_from_json(left), recipe_from_json(right))
    return BlockTerm(rec["block"])


def _first_block(want: Iterable[str], avoid: str) -> str:
    want = list(want)
    for b in BLOCKS.values():
        if all(b.holds(p) for p in want) and not b.holds(avoid):
            return b.name
    raise LookupError(f"no registered block satisfies {want} and fails {avoid}")


def witness_recipe(P: Iterable[str], Q: Iterable[str]) -> Recipe | Unrealizable:
    """Join of building blocks satisfying every property in ``P`` and none in ``Q``.

    Follows the case analysis: reduce ``P`` to its maximal elements; one
    block per ``q`` (satisfying ``p``, failing ``q``) when one property is
    required; dedicated blocks for the three two-element antichains.
    """
    P, Q = _vertices(P), _vertices(Q)
    bad = violation(P, Q)
    if bad is not None:
        return Unrealizable(*bad)
    if not Q:
        return BlockTerm("computable")
    M = maximal_elements(P)
    order = sorted(Q, key=VERTICES.index)
    if len(M) <= 1:
        parts = [BlockTerm(_first_block(M, q)) for q in order]
        return join_all(parts)
    if M == {"cc", "gc"}:
        return BlockTerm("dense1_no_computable_subset")
    if M == {"cc", "alpha=1"}:
        return BlockTerm("coded_ce")
    if M == {"dc", "alpha=1"}:
        return JoinTerm(BlockTerm("coded_ce"), BlockTerm("gc_not_cc"))
    raise AssertionError(f"unexpected antichain {sorted(M)}")


def recipe_satisfies(recipe: Recipe, P: Iterable[str], Q: Iterable[str]) -> bool:
    props = recipe.properties()
    return all(props[vertex(p)] for p in P) and not any(props[vertex(q)] for q in Q)


# -- building constructible blocks ------------------------------------------


@dataclass(frozen=True)
class BuiltBlock:
    """A constructed block: its set and finite witness descriptions.

    ``witnesses`` maps each property asserted true to a description of the
    set's characteristic function: TotalMap for cc and gamma=1, PartialTrace
    for gc, dc and alpha=1, BoxMap for edc.
    """

    name: str
    stream: dn.SetStream
    witnesses: dict


def _exact_witnesses(s: dn.SetStream, props: dict) -> dict:
    f = TotalMap.of_set(s)
    kinds = {"cc": f, "gamma=1": f, "gc": total_trace(f), "dc": total_trace(f), "alpha=1": total_trace(f),
             "edc": BoxMap(lambda lo, hi: f.window(lo, hi), f.label)}
    return {v: kinds[v] for v in VERTICES if props[v]}


def _columns_trace(values: Callable[[int, int], np.ndarray], known: int, label: str):
    """Trace defined on 0 and on the columns ``{2^e k : k odd}`` with ``e < known``."""
    from .coding import two_adic

    def chunk(lo, hi):
        e = two_adic(np.arange(lo, hi, dtype=np.int64))
        return values(lo, hi), np.where(e < known, 0, np.iinfo(np.int64).max)

    return PartialTrace(chunk, label)


@lru_cache(maxsize=64)
def build_block(name: str, depth: int, s: int = 2000, columns: int = 8) -> BuiltBlock:
    """Construct a constructible block at truncation ``depth``.

    ``s`` is the step budget for the c.e. approximations; ``columns`` is how
    many coding columns the nonuniform witnesses of ``coded_ce`` know.
    """
    block = BLOCKS[name]
    if not block.constructible:
        raise ValueError(f"block {name} is external (asserted, not built)")
    if name == "computable":
        st = dn.empty()
        return BuiltBlock(name, st, _exact_witnesses(st, block.properties))
    if name == "simple_density0":
        log = build_simple_density0(s, max(depth.bit_length(), 1))
        st = log.as_set()
        zero = TotalMap.constant(0)
        return BuiltBlock(name, st, {"cc": zero, "gamma=1": zero, "dc": total_trace(zero)})
    if name == "ndc_diagonal":
        E = max(depth.bit_length() - 1, 0)
        log = build_ndc_diagonal(E, depth, s)
        st = log.as_set()
        table = column_dichotomy(log)
        # full columns predicted 1 beyond the log, finite ones 0 beyond their last element
        full = {e for e, row in table.items() if row["cofinal"]}

        def values(lo, hi):
            from .coding import two_adic
            idx = np.arange(lo, hi, dtype=np.int64)
            e = two_adic(idx)
            pred = np.isin(e, list(full)).astype(np.int64)
            return np.where(idx < depth, st.window(lo, hi).astype(np.int64), pred)

        trace = _columns_trace(values, E + 1, "alpha-witness")
        total = TotalMap(lambda lo, hi: np.where(trace.window(lo, hi)[1], trace.window(lo, hi)[0], 0), "gamma-witness")
        return BuiltBlock(name, st, {"alpha=1": trace, "gamma=1": total})
    if name == "coded_ce":
        from .coding import code_R
        B = dn.finite_set([e for e in range(max(columns, 16)) if run(e, e, s) is not DIVERGED], "K_s")
        st = code_R(B)

        def values(lo, hi):
            return st.window(lo, hi).astype(np.int64)

        trace = _columns_trace(values, columns, "column-witness")
        total = TotalMap(lambda lo, hi: np.where(trace.window(lo, hi)[1], trace.window(lo, hi)[0], 0), "column-coarse")
        return BuiltBlock(name, st, {"cc": total, "gamma=1": total, "dc": trace, "alpha=1": trace})
    raise AssertionError(name)


def build_recipe(recipe: Recipe, depth: int, **kw) -> BuiltBlock:
    """Assemble the set of a recipe whose blocks are all constructible."""
    if isinstance(recipe, BlockTerm):
        return build_block(recipe.block, depth, **kw)
    a = build_recipe(recipe.left, (depth + 1) // 2 + 1, **kw)
    b = build_recipe(recipe.right, (depth + 1) // 2 + 1, **kw)
    witnesses = {v: join_descriptions(a.witnesses[v], b.witnesses[v])
                 for v in VERTICES if v in a.witnesses and v in b.witnesses}
    return BuiltBlock(recipe.render(), dn.join(a.stream, b.stream), witnesses)


# Witness density a property needs on the tail window to count as supported.
EVIDENCE_FLOOR = dn.Fraction(7, 8)


@dataclass(frozen=True)
class Classification:
    depth: int
    window: tuple[int, int]
    evidence: dict  # vertex -> lower bound (Fraction) or None when not asserted
    correct: dict  # vertex -> witness correct where its kind demands
    asserted: dict
    consistent: bool
    problems: tuple[str, ...] = ()

    def to_dict(self):
        return {
            "depth": self.depth,
            "window": list(self.window),
            "evidence_floor": fmt(EVIDENCE_FLOOR),
            "evidence": {v: (fmt(x) if x is not None else None) for v, x in self.evidence.items()},
            "correct": self.correct,
            "asserted": self.asserted,
            "refutations": "failing properties are asserted by construction; not refutable at finite scale",
            "consistent": self.consistent,
            "problems": list(self.problems),
        }


def classify(built: BuiltBlock, asserted: dict, depth: int, P: Iterable[str] = (), Q: Iterable[str] = ()) -> Classification:
    """Truncation-scale classification of a built set against asserted properties.

    Every property asserted true needs a witness of the right kind that is
    correct where its kind demands and whose density lower bound on the tail
    window reaches ``EVIDENCE_FLOOR``.
    """
    g = TotalMap.of_set(built.stream)
    window = (depth // 2, depth)
    evidence, correct, problems = {}, {}, []
    for v in VERTICES:
        if not asserted[v]:
            evidence[v], correct[v] = None, None
            continue
        w = built.witnesses.get(v)
        if w is None:
            problems.append(f"no witness for {v}")
            evidence[v], correct[v] = None, False
            continue
        if v in ("gc", "alpha=1", "edc"):
            correct[v] = not errors_on_domain(w, g, depth)
            bits = defined_values(w, 0, depth)[1].astype(np.uint8)
        else:
            correct[v] = True
            bits = (defined_values(w, 0, depth)[1] & (defined_values(w, 0, depth)[0] == g.window(0, depth))).astype(np.uint8)
        evidence[v] = indicator_profile(bits, window).window_min
        if not correct[v]:
            problems.append(f"{v} witness errs on its domain")
        if evidence[v] < EVIDENCE_FLOOR:
            problems.append(f"{v} evidence {fmt(evidence[v])} below floor")
    for p in P:
        if not asserted[vertex(p)]:
            problems.append(f"required {p} not asserted")
    for q in Q:
        if asserted[vertex(q)]:
            problems.append(f"excluded {q} asserted")
    return Classification(depth, window, evidence, correct, dict(asserted), not problems, tuple(problems))
