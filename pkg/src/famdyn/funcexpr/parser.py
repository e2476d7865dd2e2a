"""Recursive-descent parser for the member-expression grammar.

    expr   := term (("+" | "-") term)*
    term   := unary (("*" | "/") unary)*
    unary  := ("-" | "+") unary | power
    power  := atom ("^" exponent)?          right-associative
    atom   := number | "z" | "n" | "i" | "pi" | name | "exp" "(" expr ")" | "(" expr ")"

Exponents must be integer-valued (integer literals and the index n).
Implicit multiplication is rejected.
"""
from __future__ import annotations

import math
import re

from .nodes import (
    Add, Const, Div, Exp, Expr, Index, Mul, Neg, Param, Pow, Sub, Var,
    children, simplify,
)

RESERVED = {"z", "n", "i", "pi", "exp"}

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?)|(?P<name>[A-Za-z_][A-Za-z_0-9]*)|(?P<op>[-+*/^()]))"
)


class ParseError(ValueError):
    """Syntax error; ``offset`` is the UTF-8 byte offset of the failure."""

    def __init__(self, message: str, text: str, index: int):
        self.offset = len(text[:index].encode("utf-8"))
        self.message = message
        super().__init__(f"{message} at byte {self.offset}")


class _Tokens:
    def __init__(self, text: str):
        self.text = text
        self.toks = []
        pos = 0
        while pos < len(text):
            if text[pos:].strip() == "":
                break
            m = _TOKEN.match(text, pos)
            if not m or m.end() == pos:
                bad = pos + (len(text[pos:]) - len(text[pos:].lstrip()))
                raise ParseError(f"unexpected character {text[bad]!r}", text, bad)
            kind = m.lastgroup
            start = m.start(kind)
            self.toks.append((kind, m.group(kind), start))
            pos = m.end()
        self.i = 0

    def peek(self):
        return self.toks[self.i] if self.i < len(self.toks) else (None, None, len(self.text))

    def next(self):
        tok = self.peek()
        self.i += 1
        return tok

    def expect(self, value):
        kind, val, at = self.next()
        if val != value:
            got = "end of input" if kind is None else repr(val)
            raise ParseError(f"expected {value!r}, got {got}", self.text, at)


def parse(text: str) -> Expr:
    """Parse ``text`` into a canonical (simplified) expression tree."""
    return simplify(parse_raw(text))


def parse_raw(text: str) -> Expr:
    if not text or not text.strip():
        raise ParseError("empty expression", text or "", 0)
    toks = _Tokens(text)
    e = _expr(toks)
    kind, val, at = toks.peek()
    if kind is not None:
        raise ParseError(f"unexpected token {val!r} (implicit multiplication is not allowed)", text, at)
    return e


def _expr(t: _Tokens) -> Expr:
    e = _term(t)
    while t.peek()[1] in ("+", "-"):
        _, op, _ = t.next()
        rhs = _term(t)
        e = Add(e, rhs) if op == "+" else Sub(e, rhs)
    return e


def _term(t: _Tokens) -> Expr:
    e = _unary(t)
    while t.peek()[1] in ("*", "/"):
        _, op, _ = t.next()
        rhs = _unary(t)
        e = Mul(e, rhs) if op == "*" else Div(e, rhs)
    return e


def _unary(t: _Tokens) -> Expr:
    if t.peek()[1] == "-":
        t.next()
        return Neg(_unary(t))
    if t.peek()[1] == "+":
        t.next()
        return _unary(t)
    return _power(t)


def _power(t: _Tokens) -> Expr:
    base = _atom(t)
    if t.peek()[1] != "^":
        return base
    t.next()
    at = t.peek()[2]
    if t.peek()[1] in ("-", "+"):
        sign = t.next()[1]
        k = _power(t)
        k = Neg(k) if sign == "-" else k
    else:
        k = _power(t)
    return Pow(base, _integer_exponent(k, t.text, at))


def _integer_exponent(k: Expr, text: str, at: int) -> Expr:
    def ok(e):
        if isinstance(e, Const):
            return e.value.imag == 0 and float(e.value.real).is_integer()
        if isinstance(e, Index):
            return True
        if isinstance(e, (Add, Sub, Mul, Neg, Pow)):
            return all(ok(c) for c in children(e))
        return False

    k = simplify(k)
    if not ok(k):
        raise ParseError("non-integer exponent", text, at)
    return k


def _atom(t: _Tokens) -> Expr:
    kind, val, at = t.next()
    if kind == "num":
        return Const(float(val))
    if kind == "name":
        if val == "z":
            return Var()
        if val == "n":
            return Index()
        if val == "i":
            return Const(1j)
        if val == "pi":
            return Const(math.pi)
        if val == "exp":
            t.expect("(")
            inner = _expr(t)
            t.expect(")")
            return Exp(inner)
        if t.peek()[1] == "(":
            raise ParseError(f"unknown function {val!r}", t.text, at)
        return Param(val)
    if val == "(":
        e = _expr(t)
        t.expect(")")
        return e
    got = "end of input" if kind is None else repr(val)
    raise ParseError(f"unexpected {got}", t.text, at)
