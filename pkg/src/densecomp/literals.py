"""Text literals for sets.

Grammar::

    set   := name | "{" ints "}" | "finite:" ints | "periodic:" bits "/" bits
           | "mult:" int | "bits:" bits | op "(" set ["," set] ")"
    name  := evens | odds | empty | omega | squares | powers2
    op    := R | Rtilde | E | join | complement

``periodic:PRE/PER`` takes a preperiod and a nonempty period as bit strings.
"""

from __future__ import annotations

import re

from . import density as dn
from .density import SetStream

_NAMED = {
    "evens": dn.evens,
    "odds": dn.odds,
    "empty": dn.empty,
    "omega": dn.omega,
    "squares": dn.squares,
    "powers2": dn.powers_of_two,
}
_TOKEN = re.compile(r"\s*(finite:\d+(?:[,;]\d+)*|[A-Za-z_][A-Za-z0-9_]*:[^(),{}\s]*|[A-Za-z_][A-Za-z0-9_]*|\{[^}]*\}|[(),])")


class LiteralError(ValueError):
    pass


def _tokens(text: str) -> list[str]:
    pos, out = 0, []
    text = text.strip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise LiteralError(f"cannot parse set literal at {text[pos:]!r}")
        out.append(m.group(1))
        pos = m.end()
    return out


def _ints(body: str) -> list[int]:
    body = body.strip()
    if not body:
        return []
    try:
        return [int(x) for x in body.split(",")]
    except ValueError:
        raise LiteralError(f"bad integer list {body!r}") from None


def _atom(tok: str) -> SetStream:
    if tok.startswith("{"):
        return dn.finite_set(_ints(tok[1:-1]), label=tok)
    if ":" in tok:
        head, body = tok.split(":", 1)
        if head == "finite":
            return dn.finite_set(_ints(body.replace(";", ",")), label=tok)
        if head == "periodic":
            if "/" not in body:
                raise LiteralError("periodic literal needs PRE/PER")
            pre, per = body.split("/", 1)
            if not per or set(pre + per) - {"0", "1"}:
                raise LiteralError(f"bad periodic literal {tok!r}")
            return dn.periodic_set(pre, per, label=tok)
        if head == "mult":
            k = int(body)
            if k < 1:
                raise LiteralError("mult:k needs k >= 1")
            return dn.multiples(k)
        if head == "bits":
            if set(body) - {"0", "1"}:
                raise LiteralError(f"bad bit string {body!r}")
            return dn.from_bits([int(c) for c in body], label=tok)
        raise LiteralError(f"unknown literal kind {head!r}")
    if tok in _NAMED:
        return _NAMED[tok]()
    raise LiteralError(f"unknown set name {tok!r}")


def parse_set(text: str) -> SetStream:
    """Parse a set literal into a :class:`SetStream`."""
    from . import coding

    toks = _tokens(text)
    pos = 0

    def expr() -> SetStream:
        nonlocal pos
        if pos >= len(toks):
            raise LiteralError("unexpected end of set literal")
        tok = toks[pos]
        pos += 1
        if pos < len(toks) and toks[pos] == "(":
            pos += 1
            args = [expr()]
            while toks[pos] == ",":
                pos += 1
                args.append(expr())
            if toks[pos] != ")":
                raise LiteralError("expected ')'")
            pos += 1
            return _apply(tok, args)
        return _atom(tok)

    def _apply(op: str, args: list[SetStream]) -> SetStream:
        unary = {"R": coding.code_R, "Rtilde": coding.code_Rtilde, "E": coding.code_E, "complement": dn.complement}
        if op in unary:
            if len(args) != 1:
                raise LiteralError(f"{op} takes one argument")
            return unary[op](args[0])
        if op == "join":
            if len(args) != 2:
                raise LiteralError("join takes two arguments")
            return dn.join(*args)
        raise LiteralError(f"unknown operator {op!r}")

    try:
        out = expr()
    except IndexError:
        raise LiteralError(f"unbalanced set literal {text!r}") from None
    if pos != len(toks):
        raise LiteralError(f"trailing input in set literal {text!r}")
    return out
