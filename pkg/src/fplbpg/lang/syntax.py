"""Concrete syntax for priority formulas: lexer, parser, formatter.

Grammar (precedence ^ > ! > & > |, parentheses for grouping):

    formula  := or
    or       := and ("|" "{" num "}" and)*
    and      := unary ("&" "{" num "}" unary)*
    unary    := "!" unary | postfix
    postfix  := primary ("^" num)*
    primary  := IDENT | "(" formula ")" | "[" formula "@" num "]"

Identifiers are [A-Za-z_][A-Za-z0-9_]*.  Infix chains of identical kind and
identical exponent collapse into one n-ary node; mixing exponents in a chain
without parentheses is a syntax error.  "#" starts a line comment.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field

__all__ = [
    "And",
    "Formula",
    "FplSyntaxError",
    "Leaf",
    "Not",
    "Offset",
    "Or",
    "Power",
    "format_formula",
    "free_variables",
    "parse",
]


class FplSyntaxError(Exception):
    """Lexical or syntactic error with a 1-based source position."""

    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"line {line}, column {col}: {message}")
        self.message = message
        self.line = line
        self.col = col


@dataclass(frozen=True)
class Formula:
    pass


@dataclass(frozen=True)
class Leaf(Formula):
    name: str
    pos: tuple[int, int] | None = field(default=None, compare=False)


@dataclass(frozen=True)
class And(Formula):
    p: float
    children: tuple[Formula, ...]
    pos: tuple[int, int] | None = field(default=None, compare=False)


@dataclass(frozen=True)
class Or(Formula):
    p: float
    children: tuple[Formula, ...]
    pos: tuple[int, int] | None = field(default=None, compare=False)


@dataclass(frozen=True)
class Not(Formula):
    child: Formula
    pos: tuple[int, int] | None = field(default=None, compare=False)


@dataclass(frozen=True)
class Offset(Formula):
    child: Formula
    delta: float
    pos: tuple[int, int] | None = field(default=None, compare=False)


@dataclass(frozen=True)
class Power(Formula):
    child: Formula
    k: float
    pos: tuple[int, int] | None = field(default=None, compare=False)


@dataclass(frozen=True)
class _Token:
    kind: str  # IDENT NUMBER & | ! ^ { } [ ] ( ) @ - EOF
    text: str
    line: int
    col: int


_IDENT_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")
_NUMBER_RE = re.compile(r"(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][+-]?\d+)?")
_PUNCT = set("&|!^{}[]()@-")


def _lex(text: str) -> list[_Token]:
    tokens = []
    line, col = 1, 1
    i = 0
    while i < len(text):
        c = text[i]
        if c == "\n":
            line += 1
            col = 1
            i += 1
            continue
        if c in " \t\r":
            i += 1
            col += 1
            continue
        if c == "#":
            while i < len(text) and text[i] != "\n":
                i += 1
            continue
        if m := _IDENT_RE.match(text, i):
            tokens.append(_Token("IDENT", m.group(), line, col))
        elif m := _NUMBER_RE.match(text, i):
            tokens.append(_Token("NUMBER", m.group(), line, col))
        elif c in _PUNCT:
            tokens.append(_Token(c, c, line, col))
            i += 1
            col += 1
            continue
        else:
            raise FplSyntaxError(f"unexpected character {c!r}", line, col)
        i = m.end()
        col += len(m.group())
    tokens.append(_Token("EOF", "", line, col))
    return tokens


class _Parser:
    def __init__(self, tokens: list[_Token]):
        self.tokens = tokens
        self.i = 0

    @property
    def cur(self) -> _Token:
        return self.tokens[self.i]

    def _advance(self) -> _Token:
        tok = self.cur
        self.i += 1
        return tok

    def _expect(self, kind: str) -> _Token:
        if self.cur.kind != kind:
            got = self.cur.text or "end of input"
            raise FplSyntaxError(
                f"expected {kind!r}, got {got!r}", self.cur.line, self.cur.col
            )
        return self._advance()

    def _number(self) -> float:
        # numbers in operator position may be signed, and p accepts inf
        sign = 1.0
        if self.cur.kind == "-":
            self._advance()
            sign = -1.0
        if self.cur.kind == "IDENT" and self.cur.text == "inf":
            self._advance()
            return sign * math.inf
        tok = self._expect("NUMBER")
        return sign * float(tok.text)

    def _exponent(self) -> float:
        self._expect("{")
        p = self._number()
        self._expect("}")
        return p

    def parse(self) -> Formula:
        node = self._or()
        if self.cur.kind != "EOF":
            raise FplSyntaxError(
                f"unexpected trailing input {self.cur.text!r}",
                self.cur.line,
                self.cur.col,
            )
        return node

    def _chain(self, next_level, op_kind: str, node_cls) -> Formula:
        first = next_level()
        if self.cur.kind != op_kind:
            return first
        tok = self.cur
        children = [first]
        chain_p = None
        while self.cur.kind == op_kind:
            op_tok = self._advance()
            p = self._exponent()
            if chain_p is None:
                chain_p = p
            elif p != chain_p:
                raise FplSyntaxError(
                    "mixed-p chain requires parentheses",
                    op_tok.line,
                    op_tok.col,
                )
            children.append(next_level())
        return node_cls(chain_p, tuple(children), pos=(tok.line, tok.col))

    def _or(self) -> Formula:
        return self._chain(self._and, "|", Or)

    def _and(self) -> Formula:
        return self._chain(self._unary, "&", And)

    def _unary(self) -> Formula:
        if self.cur.kind == "!":
            tok = self._advance()
            return Not(self._unary(), pos=(tok.line, tok.col))
        return self._postfix()

    def _postfix(self) -> Formula:
        node = self._primary()
        while self.cur.kind == "^":
            tok = self._advance()
            node = Power(node, self._number(), pos=(tok.line, tok.col))
        return node

    def _primary(self) -> Formula:
        tok = self.cur
        if tok.kind == "IDENT":
            self._advance()
            return Leaf(tok.text, pos=(tok.line, tok.col))
        if tok.kind == "(":
            self._advance()
            node = self._or()
            self._expect(")")
            return node
        if tok.kind == "[":
            self._advance()
            child = self._or()
            self._expect("@")
            delta = self._number()
            self._expect("]")
            return Offset(child, delta, pos=(tok.line, tok.col))
        got = tok.text or "end of input"
        raise FplSyntaxError(
            f"expected an identifier, '(' or '[', got {got!r}", tok.line, tok.col
        )


def parse(text: str) -> Formula:
    """Parse concrete syntax into a formula tree."""
    return _Parser(_lex(text)).parse()


def _fmt_num(v: float) -> str:
    if v == math.inf:
        return "inf"
    if v == -math.inf:
        return "-inf"
    s = repr(float(v))
    return s[:-2] if s.endswith(".0") else s


def format_formula(node: Formula) -> str:
    """Canonical text; parse(format_formula(x)) is structurally equal to x."""
    if isinstance(node, Leaf):
        return node.name
    if isinstance(node, Not):
        inner = format_formula(node.child)
        if isinstance(node.child, (And, Or)):
            inner = f"({inner})"
        return f"!{inner}"
    if isinstance(node, Power):
        inner = format_formula(node.child)
        if not isinstance(node.child, (Leaf, Offset, Power)):
            inner = f"({inner})"
        return f"{inner}^{_fmt_num(node.k)}"
    if isinstance(node, Offset):
        return f"[{format_formula(node.child)} @ {_fmt_num(node.delta)}]"
    if isinstance(node, (And, Or)):
        op = "&" if isinstance(node, And) else "|"
        parts = []
        for child in node.children:
            text = format_formula(child)
            # nested n-ary nodes must stay parenthesized or they would
            # collapse into (or clash with) the surrounding chain
            if isinstance(child, Or) or (isinstance(child, And) and op == "&"):
                text = f"({text})"
            parts.append(text)
        return f" {op}{{{_fmt_num(node.p)}}} ".join(parts)
    raise TypeError(f"not a formula node: {node!r}")


def free_variables(node: Formula) -> tuple[str, ...]:
    """Leaf names in first-appearance order of a left-to-right traversal."""
    seen: dict[str, None] = {}

    def walk(n: Formula) -> None:
        if isinstance(n, Leaf):
            seen.setdefault(n.name)
        elif isinstance(n, (And, Or)):
            for c in n.children:
                walk(c)
        elif isinstance(n, (Not, Offset, Power)):
            walk(n.child)

    walk(node)
    return tuple(seen)
