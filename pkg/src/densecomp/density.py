"""Exact density analytics over truncated prefixes of subsets of the naturals.

Sets are modelled as :class:`SetStream` objects: total characteristic
functions that materialize prefixes on demand. All densities are exact
:class:`fractions.Fraction` values; nothing here claims a limit, only values
on stated prefixes and windows.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Sequence

import numpy as np

BitsFn = Callable[[int, int], np.ndarray]

# Direct evaluation is used instead of growing the cache past this length.
_CACHE_LIMIT = 1 << 24


def fmt(q: Fraction | int) -> str:
    """Render an exact rational as ``"p/q"`` (always with a denominator)."""
    q = Fraction(q)
    return f"{q.numerator}/{q.denominator}"


def parse_fraction(text: str | int | Fraction) -> Fraction:
    return Fraction(text) if not isinstance(text, str) else Fraction(text.strip())


class _Prefix:
    """Grow-only cache of a materialized prefix, doubling on demand.

    Arrays are indexed along their last axis, so a chunk rule may return
    several aligned rows at once.
    """

    def __init__(self, fn: Callable[[int, int], np.ndarray], dtype, rows: int | None = None, grow: bool = True):
        self._fn = fn
        self._grow = grow
        self._dtype = dtype
        self._data = np.zeros((0,) if rows is None else (rows, 0), dtype=dtype)

    def get(self, n: int) -> np.ndarray:
        data = self._data
        have = data.shape[-1]
        if n > have:
            size = max(n, 2 * have, 64) if self._grow else n
            try:
                extra = np.asarray(self._fn(have, size), dtype=self._dtype)
            except IndexError:
                # finite-data rules can't serve the speculative growth; fetch exactly
                if size == n:
                    raise
                size = n
                extra = np.asarray(self._fn(have, size), dtype=self._dtype)
            if extra.shape[-1] != size - have:
                raise ValueError("chunk rule returned the wrong number of entries")
            data = np.concatenate([data, extra], axis=-1)
            data.setflags(write=False)
            self._data = data
        return data[..., :n]

    def window(self, lo: int, hi: int) -> np.ndarray:
        if hi <= self._data.shape[-1] or hi <= _CACHE_LIMIT:
            return self.get(hi)[..., lo:hi]
        return np.asarray(self._fn(lo, hi), dtype=self._dtype)


def _vectorize(rule: Callable[[int], int]) -> BitsFn:
    def bits(lo: int, hi: int) -> np.ndarray:
        return np.fromiter((1 if rule(i) else 0 for i in range(lo, hi)), dtype=np.uint8, count=hi - lo)

    return bits


@dataclass(frozen=True, eq=False)
class SetStream:
    """A total characteristic function on the naturals.

    ``bits(lo, hi)`` must return the membership bits on ``[lo, hi)`` and be
    deterministic. ``kind`` is one of ``finite``, ``periodic`` or
    ``programmatic``.
    """

    bits: BitsFn
    kind: str = "programmatic"
    label: str = "?"
    _cache: _Prefix = field(init=False, repr=False, compare=False)
    _counts: dict = field(init=False, repr=False, compare=False, default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "_cache", _Prefix(self.bits, np.uint8))

    def prefix(self, n: int) -> np.ndarray:
        """Read-only array of the first ``n`` membership bits."""
        return self._cache.get(n)

    def window(self, lo: int, hi: int) -> np.ndarray:
        return self._cache.window(lo, hi)

    def __call__(self, n: int) -> int:
        if n < 0:
            raise ValueError("negative index")
        return int(self._cache.window(n, n + 1)[0])

    def __contains__(self, n: int) -> bool:
        return self(n) == 1

    def counts(self, n: int) -> np.ndarray:
        """Cumulative popcounts: ``counts(n)[i] == |S ↾ i|`` for ``i <= n``."""
        cached = self._counts.get("c")
        if cached is None or len(cached) <= n:
            size = max(n, 2 * (len(cached) - 1) if cached is not None else 0)
            c = np.zeros(size + 1, dtype=np.int64)
            np.cumsum(self.prefix(size), out=c[1:])
            c.setflags(write=False)
            self._counts["c"] = cached = c
        return cached[: n + 1]

    def popcount(self, n: int) -> int:
        return int(self.counts(n)[n])

    def elements_below(self, n: int) -> list[int]:
        return np.flatnonzero(self.prefix(n)).tolist()

    def __repr__(self):
        return f"SetStream({self.label})"


# -- constructors -----------------------------------------------------------


def finite_set(elements: Iterable[int], label: str | None = None) -> SetStream:
    support = np.array(sorted(set(int(x) for x in elements)), dtype=np.int64)
    if len(support) and support[0] < 0:
        raise ValueError("set elements must be natural numbers")

    def bits(lo: int, hi: int) -> np.ndarray:
        out = np.zeros(hi - lo, dtype=np.uint8)
        inside = support[(support >= lo) & (support < hi)]
        out[inside - lo] = 1
        return out

    if label is None:
        label = "{" + ",".join(str(x) for x in support.tolist()) + "}"
    return SetStream(bits, "finite", label)


def periodic_set(preperiod: Sequence[int] | str, period: Sequence[int] | str, label: str | None = None) -> SetStream:
    """Eventually periodic set: ``preperiod`` bits, then ``period`` repeated forever."""
    pre = np.array([int(b) for b in preperiod], dtype=np.uint8)
    per = np.array([int(b) for b in period], dtype=np.uint8)
    if len(per) == 0:
        raise ValueError("period must be nonempty")
    if np.any(pre > 1) or np.any(per > 1):
        raise ValueError("bits must be 0 or 1")

    def bits(lo: int, hi: int) -> np.ndarray:
        idx = np.arange(lo, hi, dtype=np.int64)
        out = per[(np.maximum(idx - len(pre), 0)) % len(per)]
        head = idx < len(pre)
        out[head] = pre[idx[head]]
        return out

    if label is None:
        label = "periodic:" + "".join(map(str, pre.tolist())) + "/" + "".join(map(str, per.tolist()))
    return SetStream(bits, "periodic", label)


def from_rule(rule: Callable[[int], bool], label: str) -> SetStream:
    """Programmatic set from a scalar membership rule."""
    return SetStream(_vectorize(rule), "programmatic", label)


def from_vector_rule(bits: BitsFn, label: str) -> SetStream:
    return SetStream(bits, "programmatic", label)


def empty() -> SetStream:
    return periodic_set("", "0", label="empty")


def omega() -> SetStream:
    return periodic_set("", "1", label="omega")


def evens() -> SetStream:
    return periodic_set("", "10", label="evens")


def odds() -> SetStream:
    return periodic_set("", "01", label="odds")


def multiples(k: int) -> SetStream:
    if k < 1:
        raise ValueError("k must be positive")
    return periodic_set("", "1" + "0" * (k - 1), label=f"mult:{k}")


def squares() -> SetStream:
    def bits(lo, hi):
        idx = np.arange(lo, hi, dtype=np.int64)
        r = np.floor(np.sqrt(idx.astype(np.float64))).astype(np.int64)
        r -= (r * r > idx).astype(np.int64)
        r += ((r + 1) * (r + 1) <= idx).astype(np.int64)
        return (r * r == idx).astype(np.uint8)

    return from_vector_rule(bits, "squares")


def powers_of_two() -> SetStream:
    def bits(lo, hi):
        idx = np.arange(lo, hi, dtype=np.int64)
        return ((idx > 0) & ((idx & (idx - 1)) == 0)).astype(np.uint8)

    return from_vector_rule(bits, "powers2")


def complement(s: SetStream) -> SetStream:
    return SetStream(lambda lo, hi: 1 - s.window(lo, hi), s.kind, f"complement({s.label})")


def join(a: SetStream, b: SetStream) -> SetStream:
    """Interleave: even positions carry ``a``, odd positions carry ``b``."""

    def bits(lo: int, hi: int) -> np.ndarray:
        if hi <= lo:
            return np.zeros(0, dtype=np.uint8)
        idx = np.arange(lo, hi, dtype=np.int64)
        h_lo, h_hi = lo // 2, (hi - 1) // 2 + 1
        j = idx // 2 - h_lo
        out = np.where(idx % 2 == 0, a.window(h_lo, h_hi)[j], b.window(h_lo, h_hi)[j])
        return out.astype(np.uint8)

    kind = "finite" if a.kind == b.kind == "finite" else "programmatic"
    if a.kind == b.kind == "periodic":
        kind = "periodic"
    return SetStream(bits, kind, f"join({a.label},{b.label})")


def from_bits(bits: Sequence[int] | np.ndarray, label: str = "bits") -> SetStream:
    """Finite-support set whose first ``len(bits)`` bits are given."""
    arr = np.asarray(bits, dtype=np.uint8)
    return finite_set(np.flatnonzero(arr).tolist(), label)


# -- exact rational arrays --------------------------------------------------


@dataclass(frozen=True, eq=False)
class RationalArray:
    """Exact reduced rationals ``num[i] / den[i]`` stored as integer arrays."""

    num: np.ndarray
    den: np.ndarray

    @classmethod
    def reduced(cls, num, den) -> "RationalArray":
        num = np.asarray(num, dtype=np.int64)
        den = np.asarray(den, dtype=np.int64)
        if np.any(den <= 0):
            raise ZeroDivisionError("nonpositive denominator")
        g = np.gcd(num, den)
        return cls(num // g, den // g)

    def __len__(self):
        return len(self.num)

    def __getitem__(self, i: int) -> Fraction:
        return Fraction(int(self.num[i]), int(self.den[i]))

    def equals(self, other: "RationalArray") -> bool:
        return bool(np.array_equal(self.num, other.num) and np.array_equal(self.den, other.den))


# -- densities --------------------------------------------------------------


def density_below(s: SetStream, n):
    """``|S ↾ n| / n`` exactly.

    ``n`` may be an int (returns a Fraction) or an integer array (returns a
    :class:`RationalArray` evaluated at every entry).
    """
    if isinstance(n, (int, np.integer)):
        n = int(n)
        if n <= 0:
            raise ZeroDivisionError("density below n needs n >= 1")
        return Fraction(s.popcount(n), n)
    ns = np.asarray(n, dtype=np.int64)
    if ns.size and ns.min() <= 0:
        raise ZeroDivisionError("density below n needs n >= 1")
    c = s.counts(int(ns.max()) if ns.size else 0)
    return RationalArray.reduced(c[ns], ns)


@dataclass(frozen=True)
class DensityProfile:
    """All ``rho_n`` for ``1 <= n <= depth`` plus extremes over a tail window.

    ``counts[n]`` is the popcount below ``n``; ``rho(n) = counts[n] / n``.
    """

    depth: int
    counts: np.ndarray = field(repr=False)
    window: tuple[int, int]
    window_min: Fraction
    window_max: Fraction
    argmin: int
    argmax: int

    def rho(self, n: int) -> Fraction:
        if not 1 <= n <= self.depth:
            raise IndexError(n)
        return Fraction(int(self.counts[n]), n)

    def to_dict(self) -> dict:
        return {
            "depth": self.depth,
            "window": list(self.window),
            "window_min": fmt(self.window_min),
            "window_max": fmt(self.window_max),
            "argmin": self.argmin,
            "argmax": self.argmax,
        }


def _window_extremes(counts: np.ndarray, lo: int, hi: int):
    ns = np.arange(lo, hi + 1, dtype=np.int64)
    # With denominators <= 2**26 distinct ratios differ by more than double
    # rounding error, so float ordering is exact; the values come from ints.
    if hi > 1 << 26:
        vals = [Fraction(int(counts[n]), int(n)) for n in ns]
        i_min = min(range(len(vals)), key=vals.__getitem__)
        i_max = max(range(len(vals)), key=vals.__getitem__)
    else:
        ratio = counts[lo: hi + 1] / ns
        i_min = int(np.argmin(ratio))
        i_max = int(np.argmax(ratio))
    n_min, n_max = int(ns[i_min]), int(ns[i_max])
    return Fraction(int(counts[n_min]), n_min), Fraction(int(counts[n_max]), n_max), n_min, n_max


def indicator_profile(bits: np.ndarray, window: tuple[int, int] | None = None) -> DensityProfile:
    """Density profile of a 0/1 array taken as a prefix of length ``len(bits)``."""
    bits = np.asarray(bits)
    depth = len(bits)
    if depth < 1:
        raise ValueError("empty prefix")
    lo, hi = window if window is not None else (1, depth)
    if lo < 1 or hi > depth or lo > hi:
        raise ValueError(f"window [{lo},{hi}] is not a nonempty subrange of [1,{depth}]")
    counts = np.zeros(depth + 1, dtype=np.int64)
    np.cumsum(bits.astype(np.int64), out=counts[1:])
    counts.setflags(write=False)
    wmin, wmax, amin, amax = _window_extremes(counts, lo, hi)
    return DensityProfile(depth, counts, (lo, hi), wmin, wmax, amin, amax)


def density_profile(s: SetStream, depth: int, window: tuple[int, int] | None = None) -> DensityProfile:
    """Exact profile of ``s`` up to ``depth``; window defaults to ``[1, depth]``."""
    return indicator_profile(s.prefix(depth), window)


# -- block conventions ------------------------------------------------------


class BlockConvention(enum.Enum):
    POWER = "power"  # J_k = [2^k, 2^(k+1)); index 0 lies in no block
    SHIFTED = "shifted"  # J_k = [2^k - 1, 2^(k+1) - 1)

    def block(self, k: int) -> tuple[int, int]:
        if k < 0:
            raise ValueError("block index must be >= 0")
        if self is BlockConvention.POWER:
            return 1 << k, 1 << (k + 1)
        return (1 << k) - 1, (1 << (k + 1)) - 1

    def index_of(self, m: int) -> int | None:
        """Block containing ``m``; ``None`` for 0 under POWER."""
        if self is BlockConvention.POWER:
            return None if m == 0 else m.bit_length() - 1
        return (m + 1).bit_length() - 1


def block_density(s: SetStream, k: int, conv: BlockConvention = BlockConvention.SHIFTED) -> Fraction:
    lo, hi = conv.block(k)
    return Fraction(int(s.window(lo, hi).sum()), hi - lo)


@dataclass(frozen=True)
class BlockBoundRow:
    k: int
    rho: Fraction  # rho at 2^(k+1) - 1
    block: Fraction  # d_k on the SHIFTED block
    floor: Fraction  # d_k * 2^k / (2^(k+1) - 1)


@dataclass(frozen=True)
class BlockBoundReport:
    depth: int
    rows: tuple[BlockBoundRow, ...]
    violations: tuple[int, ...]

    @property
    def ok(self) -> bool:
        return not self.violations

    def to_dict(self) -> dict:
        return {
            "K": self.depth,
            "ok": self.ok,
            "violations": list(self.violations),
            "rows": [
                {"k": r.k, "rho": fmt(r.rho), "block_density": fmt(r.block), "floor": fmt(r.floor)}
                for r in self.rows
            ],
        }


def check_block_bounds(s: SetStream, K: int) -> BlockBoundReport:
    """Check ``rho_{2^(k+1)-1}(S) >= d_k(S) * 2^k / (2^(k+1)-1)`` for all ``k <= K``.

    This is the counting step that bounds block densities by prefix densities
    (each SHIFTED block ends exactly at ``2^(k+1) - 1``).
    """
    if K < 0:
        raise ValueError("K must be >= 0")
    rows, bad = [], []
    for k in range(K + 1):
        end = (1 << (k + 1)) - 1
        rho = density_below(s, end)
        d = block_density(s, k, BlockConvention.SHIFTED)
        floor = d * (1 << k) / end
        rows.append(BlockBoundRow(k, rho, d, floor))
        if rho < floor:
            bad.append(k)
    return BlockBoundReport(K, tuple(rows), tuple(bad))
