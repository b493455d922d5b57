"""Asymptotic descriptions of total functions and the transformers between them.

Three representations, all lazily materialized in numpy chunks:

* :class:`PartialTrace`: a partial function with convergence stages. An
  argument converges at some stage ``s`` (visible at every stage ``>= s``) or
  never.
* :class:`TotalMap`: a total function into the naturals.
* :class:`BoxMap`: a total function into the naturals plus the refusal
  symbol ``BOX``.

Values are natural numbers. Inside arrays ``BOX`` is encoded as ``-1`` and an
undefined argument of a trace carries stage ``NEVER``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Sequence, Union

import numpy as np

from .density import SetStream, _Prefix, complement, density_below, fmt, indicator_profile

NEVER = np.iinfo(np.int64).max
BOX_CODE = -1


class _Box:
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "□"

    def __reduce__(self):
        return (_Box, ())


BOX = _Box()


class ContainmentError(ValueError):
    """Raised when a set that should lie inside a domain does not."""

    def __init__(self, index: int):
        super().__init__(f"index {index} is in the subset but outside the domain")
        self.index = index


def _encode(v) -> int:
    return BOX_CODE if v is BOX else int(v)


def _decode(code: int):
    return BOX if code == BOX_CODE else int(code)


class _Row:
    """One row of a two-row cached prefix."""

    def __init__(self, prefix: _Prefix, row: int):
        self._p, self._r = prefix, row

    def window(self, lo: int, hi: int) -> np.ndarray:
        return self._p.window(lo, hi)[self._r]


@dataclass(frozen=True, eq=False)
class PartialTrace:
    """Partial function given by ``chunk(lo, hi) -> (values, stages)``."""

    chunk: Callable[[int, int], tuple[np.ndarray, np.ndarray]]
    label: str = "trace"
    grow: bool = field(default=True, repr=False)
    _pair: _Prefix = field(init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "_pair", _Prefix(lambda lo, hi: np.stack(self.chunk(lo, hi)), np.int64, rows=2, grow=self.grow))

    @property
    def _vals(self):
        return _Row(self._pair, 0)

    @property
    def _stages(self):
        return _Row(self._pair, 1)

    def window(self, lo: int, hi: int, stage: int | None = None) -> tuple[np.ndarray, np.ndarray]:
        """Values and a defined-mask on ``[lo, hi)`` as visible at ``stage``."""
        s = self._stages.window(lo, hi)
        v = self._vals.window(lo, hi)
        defined = s != NEVER if stage is None else s <= stage
        return v, defined

    def value(self, n: int, stage: int | None = None):
        v, d = self.window(n, n + 1, stage)
        return int(v[0]) if d[0] else None

    def stage_of(self, n: int) -> int | None:
        s = int(self._stages.window(n, n + 1)[0])
        return None if s == NEVER else s

    def domain_bits(self, depth: int, stage: int | None = None) -> np.ndarray:
        return self.window(0, depth, stage)[1].astype(np.uint8)

    def axioms(self, depth: int, stage: int | None = None) -> list[tuple[int, int, int]]:
        """Triples ``(n, value, stage)`` for ``n < depth``, in enumeration order."""
        v, d = self.window(0, depth, stage)
        s = self._stages.window(0, depth)
        idx = np.flatnonzero(d)
        order = np.lexsort((idx, s[idx]))
        return [(int(idx[i]), int(v[idx[i]]), int(s[idx[i]])) for i in order]

    def graph(self, depth: int, stage: int | None = None) -> frozenset[tuple[int, int]]:
        return frozenset((n, v) for n, v, _ in self.axioms(depth, stage))

    @classmethod
    def from_axioms(cls, axioms: Iterable[Sequence[int]], label: str = "trace") -> "PartialTrace":
        """Build a trace from ``(n, v, s)`` triples; repeated equal axioms keep the earliest stage."""
        table: dict[int, tuple[int, int]] = {}
        for n, v, s in axioms:
            n, v, s = int(n), int(v), int(s)
            if n < 0 or v < 0 or s < 0:
                raise ValueError("axioms must be natural-number triples")
            if n in table:
                if table[n][0] != v:
                    raise ValueError(f"not single-valued at {n}: {table[n][0]} vs {v}")
                s = min(s, table[n][1])
            table[n] = (v, s)
        keys = np.array(sorted(table), dtype=np.int64)
        vals = np.array([table[k][0] for k in keys.tolist()], dtype=np.int64)
        stages = np.array([table[k][1] for k in keys.tolist()], dtype=np.int64)

        def chunk(lo, hi):
            v = np.zeros(hi - lo, dtype=np.int64)
            s = np.full(hi - lo, NEVER, dtype=np.int64)
            sel = (keys >= lo) & (keys < hi)
            v[keys[sel] - lo] = vals[sel]
            s[keys[sel] - lo] = stages[sel]
            return v, s

        return cls(chunk, label)

    @classmethod
    def empty(cls) -> "PartialTrace":
        return cls(lambda lo, hi: (np.zeros(hi - lo, np.int64), np.full(hi - lo, NEVER, np.int64)), "empty")


@dataclass(frozen=True, eq=False)
class TotalMap:
    """Total function given by ``chunk(lo, hi) -> values``."""

    chunk: Callable[[int, int], np.ndarray]
    label: str = "map"
    grow: bool = field(default=True, repr=False)
    _vals: _Prefix = field(init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "_vals", _Prefix(self.chunk, np.int64, grow=self.grow))

    def window(self, lo: int, hi: int) -> np.ndarray:
        return self._vals.window(lo, hi)

    def __call__(self, n: int) -> int:
        return int(self.window(n, n + 1)[0])

    @classmethod
    def constant(cls, c: int) -> "TotalMap":
        return cls(lambda lo, hi: np.full(hi - lo, c, dtype=np.int64), f"const:{c}")

    @classmethod
    def of_set(cls, s: SetStream) -> "TotalMap":
        """Characteristic function of ``s``."""
        return cls(lambda lo, hi: s.window(lo, hi).astype(np.int64), s.label)

    @classmethod
    def from_values(cls, values: Sequence[int], label: str = "values") -> "TotalMap":
        arr = np.asarray(values, dtype=np.int64)

        def chunk(lo, hi):
            if hi > len(arr):
                raise IndexError(f"map is only materialized below {len(arr)}")
            return arr[lo:hi]

        return cls(chunk, label)


@dataclass(frozen=True, eq=False)
class BoxMap:
    """Total map into naturals plus ``BOX``; ``chunk`` returns codes (``-1`` for ``BOX``)."""

    chunk: Callable[[int, int], np.ndarray]
    label: str = "boxmap"
    grow: bool = field(default=True, repr=False)
    _vals: _Prefix = field(init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "_vals", _Prefix(self.chunk, np.int64, grow=self.grow))

    def window(self, lo: int, hi: int) -> np.ndarray:
        return self._vals.window(lo, hi)

    def __call__(self, n: int):
        return _decode(int(self.window(n, n + 1)[0]))

    def strong_domain_bits(self, depth: int) -> np.ndarray:
        return (self.window(0, depth) != BOX_CODE).astype(np.uint8)

    @classmethod
    def from_values(cls, values: Sequence, label: str = "values") -> "BoxMap":
        arr = np.array([_encode(v) for v in values], dtype=np.int64)

        def chunk(lo, hi):
            if hi > len(arr):
                raise IndexError(f"map is only materialized below {len(arr)}")
            return arr[lo:hi]

        return cls(chunk, label)

    @classmethod
    def boxed_on(cls, values: TotalMap, boxes: SetStream) -> "BoxMap":
        """``values`` off ``boxes``, ``BOX`` on it."""
        return cls(lambda lo, hi: np.where(boxes.window(lo, hi) == 1, BOX_CODE, values.window(lo, hi)),
                   f"box({values.label}|{boxes.label})")


Description = Union[PartialTrace, TotalMap, BoxMap]


def total_trace(f: TotalMap, stage: int = 0) -> PartialTrace:
    """A total map seen as a trace converging everywhere at ``stage``."""
    return PartialTrace(lambda lo, hi: (f.window(lo, hi), np.full(hi - lo, stage, np.int64)), f.label)


def defined_values(f: Description, lo: int, hi: int, stage: int | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Values and defined-mask of any description on ``[lo, hi)``.

    For a BoxMap "defined" means non-BOX; for a TotalMap everything is defined.
    """
    if isinstance(f, PartialTrace):
        return f.window(lo, hi, stage)
    if isinstance(f, BoxMap):
        v = f.window(lo, hi)
        return v, v != BOX_CODE
    if isinstance(f, TotalMap):
        v = f.window(lo, hi)
        return v, np.ones(hi - lo, dtype=bool)
    raise TypeError(f"not a description: {type(f).__name__}")


# -- agreement metrics ------------------------------------------------------


def agreement_bits(f: Description, g: TotalMap, n: int, stage: int | None = None) -> np.ndarray:
    v, d = defined_values(f, 0, n, stage)
    return (d & (v == g.window(0, n))).astype(np.uint8)


def agreement_density(f: Description, g: TotalMap, n: int, stage: int | None = None) -> Fraction:
    """Density below ``n`` of the arguments where ``f`` is defined and equals ``g``.

    For a trace only values converged by ``stage`` count (all, if ``None``).
    """
    if n < 1:
        raise ZeroDivisionError("agreement density needs n >= 1")
    return Fraction(int(agreement_bits(f, g, n, stage).sum()), n)


def domain_density(f: Description, n: int, stage: int | None = None) -> Fraction:
    if n < 1:
        raise ZeroDivisionError("domain density needs n >= 1")
    return Fraction(int(defined_values(f, 0, n, stage)[1].sum()), n)


def errors_on_domain(f: Description, g: TotalMap, n: int, stage: int | None = None) -> list[int]:
    """Arguments below ``n`` where ``f`` is defined but differs from ``g``."""
    v, d = defined_values(f, 0, n, stage)
    return np.flatnonzero(d & (v != g.window(0, n))).tolist()


# -- transformers -----------------------------------------------------------


def edc_to_generic(f: BoxMap) -> PartialTrace:
    """Drop the refusals: defined exactly on the strong domain, converging at stage ``n``."""

    def chunk(lo, hi):
        v = f.window(lo, hi)
        s = np.where(v == BOX_CODE, NEVER, np.arange(lo, hi, dtype=np.int64))
        return np.where(v == BOX_CODE, 0, v), s

    return PartialTrace(chunk, f"generic({f.label})")


def edc_to_coarse(f: BoxMap) -> TotalMap:
    """Replace every refusal by 0."""
    return TotalMap(lambda lo, hi: np.maximum(f.window(lo, hi), 0), f"coarse({f.label})")


def _checked_on_subset(f: PartialTrace, b: SetStream, lo: int, hi: int, stage):
    v, d = f.window(lo, hi, stage)
    inside = b.window(lo, hi) == 1
    missing = np.flatnonzero(inside & ~d)
    if len(missing):
        raise ContainmentError(lo + int(missing[0]))
    return v, inside


def restrict_to_subset(f: PartialTrace, b: SetStream, stage: int | None = None) -> BoxMap:
    """``f`` on ``b`` and ``BOX`` elsewhere.

    ``b`` must lie inside the domain of ``f`` (at ``stage``); this is checked
    lazily on every materialized window and raises :class:`ContainmentError`.
    """

    def chunk(lo, hi):
        v, inside = _checked_on_subset(f, b, lo, hi, stage)
        return np.where(inside, v, BOX_CODE)

    # exact growth: only requested indices are checked for containment
    return BoxMap(chunk, f"restrict({f.label}|{b.label})", grow=False)


def patch_to_total(f: PartialTrace, b: SetStream, default: int = 0, stage: int | None = None) -> TotalMap:
    """``f`` on ``b`` and ``default`` elsewhere (same containment check)."""

    def chunk(lo, hi):
        v, inside = _checked_on_subset(f, b, lo, hi, stage)
        return np.where(inside, v, default)

    return TotalMap(chunk, f"patch({f.label}|{b.label})", grow=False)


def extract_computable_subset(dom: PartialTrace, budget: Callable[[int], int]) -> SetStream:
    """``{n : n enters the domain enumeration by stage budget(n)}``.

    Membership of ``n`` needs only a finite look at the enumeration, so the
    result is decidable, and it is contained in the domain by construction.
    """

    def bits(lo, hi):
        s = dom._stages.window(lo, hi)
        limits = np.fromiter((budget(i) for i in range(lo, hi)), dtype=np.int64, count=hi - lo)
        return ((s != NEVER) & (s <= limits)).astype(np.uint8)

    return SetStream(bits, "programmatic", f"budgeted({dom.label})")


def join_descriptions(a: Description, b: Description) -> Description:
    """Interleave two descriptions of the same kind (``a`` on evens, ``b`` on odds)."""
    if type(a) is not type(b):
        raise TypeError("can only join descriptions of the same kind")

    def spread(lo, hi, get):
        idx = np.arange(lo, hi, dtype=np.int64)
        h_lo, h_hi = lo // 2, (hi - 1) // 2 + 1
        j = idx // 2 - h_lo
        even = idx % 2 == 0
        ra, rb = get(a, h_lo, h_hi), get(b, h_lo, h_hi)
        if isinstance(ra, tuple):
            return tuple(np.where(even, xa[j], xb[j]) for xa, xb in zip(ra, rb))
        return np.where(even, ra[j], rb[j])

    label = f"join({a.label},{b.label})"
    if isinstance(a, PartialTrace):
        return PartialTrace(
            lambda lo, hi: spread(lo, hi, lambda t, l, h: (t._vals.window(l, h), t._stages.window(l, h))), label
        )
    return type(a)(lambda lo, hi: spread(lo, hi, lambda t, l, h: t.window(l, h)), label)


# -- bound estimates --------------------------------------------------------

BOUND_KINDS = ("alpha", "beta", "gamma", "delta")


@dataclass(frozen=True)
class BoundEstimate:
    """Lower-bound proxy for one of the computability bounds.

    ``lower_bound`` is the window minimum of the relevant density for the best
    candidate; it is never a claim about the true supremum.
    """

    kind: str
    candidate: int | None
    candidate_label: str | None
    depth: int
    window: tuple[int, int]
    lower_bound: Fraction
    stage: int | None = None

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "label": "lower bound",
            "candidate": self.candidate,
            "candidate_label": self.candidate_label,
            "depth": self.depth,
            "window": list(self.window),
            "stage": self.stage,
            "lower_bound": fmt(self.lower_bound),
        }


def _candidate_bits(kind: str, f: Description, g: TotalMap, depth: int, stage) -> np.ndarray:
    if kind in ("gamma", "delta"):
        if kind == "gamma" and not isinstance(f, TotalMap):
            raise TypeError("gamma candidates must be total maps")
        return agreement_bits(f, g, depth, stage)
    if kind == "alpha" and not isinstance(f, PartialTrace):
        raise TypeError("alpha candidates must be partial traces")
    if kind == "beta" and not isinstance(f, BoxMap):
        raise TypeError("beta candidates must be box maps")
    v, d = defined_values(f, 0, depth, stage)
    if np.any(d & (v != g.window(0, depth))):
        # not a partial description of g on this prefix
        return np.zeros(depth, dtype=np.uint8)
    return d.astype(np.uint8)


def estimate_bound(kind: str, g: TotalMap, candidates: Sequence[Description], depth: int,
                   window: tuple[int, int] | None = None, stage: int | None = None) -> BoundEstimate:
    """Best window-min over ``candidates`` of agreement (gamma, delta) or of domain
    density for candidates that are correct on their whole domain (alpha, beta)."""
    if kind not in BOUND_KINDS:
        raise ValueError(f"unknown bound kind {kind!r}")
    if not candidates:
        raise ValueError("need at least one candidate")
    window = window or (max(1, depth // 2), depth)
    best, best_i = None, None
    for i, f in enumerate(candidates):
        lb = indicator_profile(_candidate_bits(kind, f, g, depth, stage), window).window_min
        if best is None or lb > best:
            best, best_i = lb, i
    return BoundEstimate(kind, best_i, candidates[best_i].label, depth, window, best, stage)


# -- serialization ----------------------------------------------------------


def to_json(f: Description, depth: int, stage: int | None = None) -> dict:
    """JSON record ``{kind, axioms|values, stage, depth}``; BOX renders as ``"box"``."""
    if isinstance(f, PartialTrace):
        return {"kind": "partial", "depth": depth, "stage": stage,
                "axioms": [list(a) for a in f.axioms(depth, stage)]}
    if isinstance(f, BoxMap):
        return {"kind": "box", "depth": depth, "stage": stage,
                "values": ["box" if c == BOX_CODE else int(c) for c in f.window(0, depth).tolist()]}
    if isinstance(f, TotalMap):
        return {"kind": "total", "depth": depth, "stage": stage, "values": f.window(0, depth).tolist()}
    raise TypeError(type(f).__name__)


def from_json(rec: dict, parse_set: Callable[[str], SetStream] | None = None) -> Description:
    """Inverse of :func:`to_json`; also accepts ``rule`` records naming set literals.

    Rule records: ``{"kind": "total", "rule": LIT}`` is the characteristic
    function of LIT; ``{"kind": "box", "rule": LIT, "box_on": LIT2}`` boxes it
    on LIT2; ``{"kind": "partial", "rule": LIT, "domain": LIT2}`` restricts it
    to LIT2 (converging at stage ``n``).
    """
    kind = rec.get("kind")
    if "rule" in rec:
        if parse_set is None:
            from .literals import parse_set
        base = TotalMap.of_set(parse_set(rec["rule"]))
        if kind == "total":
            return base
        if kind == "box":
            return BoxMap.boxed_on(base, parse_set(rec.get("box_on", "empty")))
        if kind == "partial":
            dom = parse_set(rec.get("domain", "omega"))
            return PartialTrace(
                lambda lo, hi: (base.window(lo, hi),
                                np.where(dom.window(lo, hi) == 1, np.arange(lo, hi, dtype=np.int64), NEVER)),
                f"{base.label}|{dom.label}")
        raise ValueError(f"unknown description kind {kind!r}")
    if kind == "partial":
        return PartialTrace.from_axioms(rec.get("axioms", []))
    if kind == "total":
        return TotalMap.from_values(rec["values"])
    if kind == "box":
        return BoxMap.from_values([BOX if v == "box" else v for v in rec["values"]])
    raise ValueError(f"unknown description kind {kind!r}")


def complement_density(b: SetStream, n: int) -> Fraction:
    return density_below(complement(b), n)
