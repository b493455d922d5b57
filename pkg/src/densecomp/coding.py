"""The coding maps R, R̃ and E, and description translators across R̃.

``R(A) = {2^n k : n in A, k odd}`` places ``A(n)`` on a column of density
``2^-(n+1)``. ``R̃(A)`` is the union of the POWER blocks ``J_n = [2^n, 2^(n+1))``
for ``n in A``. ``E = R̃ ∘ R``.
"""

from __future__ import annotations

import enum

import numpy as np

from . import density as dn
from .descriptions import BOX_CODE, NEVER, BoxMap, PartialTrace
from .density import SetStream


class CodingMap(enum.Enum):
    R = "R"
    RTILDE = "Rtilde"
    E = "E"

    @classmethod
    def parse(cls, name: str) -> "CodingMap":
        for m in cls:
            if m.value.lower() == name.strip().lower() or m.name.lower() == name.strip().lower():
                return m
        raise ValueError(f"unknown coding map {name!r}; expected R, Rtilde or E")


class ConsistencyError(ValueError):
    """Two distinct proper values inside one block."""

    def __init__(self, block: int, values: tuple[int, int]):
        super().__init__(f"block J_{block} carries conflicting values {values[0]} and {values[1]}")
        self.block = block
        self.values = values


def two_adic(idx: np.ndarray) -> np.ndarray:
    """Exponent of 2 in each positive entry; -1 at 0."""
    idx = np.asarray(idx, dtype=np.int64)
    low = idx & -idx
    out = np.full(idx.shape, -1, dtype=np.int64)
    pos = idx > 0
    out[pos] = np.log2(low[pos]).astype(np.int64)
    return out


def block_index(idx: np.ndarray) -> np.ndarray:
    """``floor(log2 m)`` for positive ``m`` (exact via bit length); -1 at 0."""
    idx = np.asarray(idx, dtype=np.int64)
    out = np.full(idx.shape, -1, dtype=np.int64)
    pos = idx > 0
    # frexp gives m = f * 2^e with 1/2 <= f < 1, exact for m < 2^53
    out[pos] = np.frexp(idx[pos].astype(np.float64))[1] - 1
    return out


def range_block_index(lo: int, hi: int) -> np.ndarray:
    """:func:`block_index` of ``arange(lo, hi)``, built by repeating each block's index."""
    if hi <= lo:
        return np.zeros(0, dtype=np.int64)
    first, last = lo.bit_length() - 1, (hi - 1).bit_length() - 1
    ks = np.arange(first, last + 1, dtype=np.int64)
    starts = [max(lo, 1 << k) if k >= 0 else 0 for k in range(first, last + 1)]
    ends = [min(hi, 1 << (k + 1)) if k >= 0 else 1 for k in range(first, last + 1)]
    return np.repeat(ks, np.subtract(ends, starts))


def _lookup(a: SetStream, keys: np.ndarray) -> np.ndarray:
    """``A(key)`` for each key (keys >= 0), 0 for negative keys."""
    out = np.zeros(keys.shape, dtype=np.uint8)
    ok = keys >= 0
    if ok.any():
        top = int(keys[ok].max()) + 1
        out[ok] = a.prefix(top)[keys[ok]]
    return out


def code_R(a: SetStream) -> SetStream:
    def bits(lo, hi):
        return _lookup(a, two_adic(np.arange(lo, hi, dtype=np.int64)))

    return dn.from_vector_rule(bits, f"R({a.label})")


def code_Rtilde(a: SetStream) -> SetStream:
    def bits(lo, hi):
        return _lookup(a, range_block_index(lo, hi))

    return dn.from_vector_rule(bits, f"Rtilde({a.label})")


def code_E(a: SetStream) -> SetStream:
    return code_Rtilde(code_R(a))


def apply(name: str | CodingMap, a: SetStream) -> SetStream:
    m = name if isinstance(name, CodingMap) else CodingMap.parse(name)
    return {CodingMap.R: code_R, CodingMap.RTILDE: code_Rtilde, CodingMap.E: code_E}[m](a)


def _broadcast(f_window, lo: int, hi: int):
    # f evaluated on the block index of each m in [lo, hi); m = 0 has no block
    k = range_block_index(lo, hi)
    top = int(k.max()) + 1 if hi > lo else 0
    return k, f_window(0, max(top, 1))


def wcf_to_dense(f: PartialTrace) -> PartialTrace:
    """``g(m) = f(n)`` for ``m`` in ``J_n``, inheriting the stage; ``g(0) = 0`` at stage 0."""

    def chunk(lo, hi):
        k, (vals, stages) = _broadcast(f._pair.window, lo, hi)
        kk = np.maximum(k, 0)
        v = np.where(k >= 0, vals[kk], 0)
        s = np.where(k >= 0, stages[kk], 0)
        return v, s

    return PartialTrace(chunk, f"dense({f.label})")


def dense_to_wcf(g: PartialTrace, stage: int | None = None) -> PartialTrace:
    """Strict block majority: ``f(n) = i`` once more than ``2^(n-1)`` of ``J_n`` carry ``i``.

    Only values of ``g`` visible at ``stage`` count. The trigger stage of
    ``f(n)`` is the stage at which the majority first appears.
    """

    def one(n: int) -> tuple[int, int]:
        lo, hi = 1 << n, 1 << (n + 1)
        v, d = g.window(lo, hi, stage)
        s = g._stages.window(lo, hi)
        if not d.any():
            return 0, NEVER
        need = (1 << n) // 2 + 1  # strictly more than half of 2^n
        vals, counts = np.unique(v[d], return_counts=True)
        winners = vals[counts >= need]
        assert len(winners) <= 1, "strict majority admits one winner"
        if not len(winners):
            return 0, NEVER
        i = int(winners[0])
        # stage at which the need-th vote for i arrives
        t = int(np.sort(s[d & (v == i)])[need - 1])
        return i, t

    def chunk(lo, hi):
        pairs = [one(n) for n in range(lo, hi)]
        return (np.array([p[0] for p in pairs], dtype=np.int64).reshape(-1),
                np.array([p[1] for p in pairs], dtype=np.int64).reshape(-1))

    return PartialTrace(chunk, f"wcf({g.label})", grow=False)


def scf_to_strongdense(f: BoxMap) -> BoxMap:
    """Block broadcast of values and □; ``g(0) = 0``."""

    def chunk(lo, hi):
        k, vals = _broadcast(f.window, lo, hi)
        return np.where(k >= 0, vals[np.maximum(k, 0)], 0)

    return BoxMap(chunk, f"strongdense({f.label})")


def strongdense_to_scf(g: BoxMap) -> BoxMap:
    """First proper value in ``J_n``, or □; conflicting proper values raise."""

    def chunk(lo, hi):
        out = np.full(hi - lo, BOX_CODE, dtype=np.int64)
        for n in range(lo, hi):
            v = g.window(1 << n, 1 << (n + 1))
            proper = v[v != BOX_CODE]
            if proper.size:
                distinct = np.unique(proper)
                if distinct.size > 1:
                    first = int(proper[0])
                    other = int(proper[proper != first][0])
                    raise ConsistencyError(n, (first, other))
                out[n - lo] = proper[0]
        return out

    return BoxMap(chunk, f"scf({g.label})", grow=False)


# -- the column-reading enumeration operator ---------------------------------


def _position(n: int, k: int) -> int:
    return (1 << n) * (2 * k + 1)


def mf_image_operator(phi, max_n: int, max_k: int, budget: int = 10_000):
    """Enumeration operator carrying a reduction ``Φ`` across the R-coding.

    For each output position ``2^n (2k + 1)`` with ``n < max_n, k < max_k``
    and each oracle string ``σ`` of length ``u`` (the use of ``Φ`` on ``n``),
    the axiom premise is ``{(2^m (2(n+k) + 1), σ(m)) : m < u}``, i.e. the
    oracle bits read off a single late entry of each column, and the output
    is ``(2^n (2k + 1), Φ^σ(n))``.

    ``phi`` is a :class:`machines.Functional` with alphabet ``(0, 1)``.
    Each output position ``(n, k)`` reads column entries at height ``n + k``,
    so an input whose column errors all lie below a cutoff ``c`` produces
    correct output once ``2^m (2(n+k) + 1) >= c`` for every used ``m``;
    ``n + k >= (c - 1) / 2`` suffices and is recorded as the threshold.
    """
    from .oracles import Axiom, EnumOp, functional_tree

    axioms = []
    diverged = []
    for n in range(max_n):
        leaves = functional_tree(phi, n, budget=budget)
        for sigma, value in leaves:
            if value is None:
                diverged.append(n)
                continue
            for k in range(max_k):
                premise = frozenset((_position(m, n + k), bit) for m, bit in sigma)
                axioms.append(Axiom(premise, (_position(n, k), int(value)), stage=n + k))
    return EnumOp(tuple(axioms), label=f"mf({phi.name})",
                  meta={"max_n": max_n, "max_k": max_k, "diverged_inputs": sorted(set(diverged)),
                        "threshold_rule": "n + k >= (c - 1) / 2"})


def mf_threshold(c: int) -> int:
    """Least ``n + k`` guaranteeing every premise position is at least ``c``."""
    return max(c // 2, 0)
