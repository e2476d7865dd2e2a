"""Expression tree for family members.

Nodes are frozen dataclasses so they hash, compare structurally and can be
cached.  ``simplify`` produces the canonical form; ``to_text`` prints it in
the grammar accepted by :func:`famdyn.funcexpr.parser.parse`.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Mapping

from .errors import UnboundSymbol


class Expr:
    __slots__ = ()

    def __add__(self, other):
        return Add(self, lift(other))

    def __radd__(self, other):
        return Add(lift(other), self)

    def __sub__(self, other):
        return Sub(self, lift(other))

    def __rsub__(self, other):
        return Sub(lift(other), self)

    def __mul__(self, other):
        return Mul(self, lift(other))

    def __rmul__(self, other):
        return Mul(lift(other), self)

    def __truediv__(self, other):
        return Div(self, lift(other))

    def __rtruediv__(self, other):
        return Div(lift(other), self)

    def __neg__(self):
        return Neg(self)

    def __pow__(self, k):
        return Pow(self, lift(k))

    def __str__(self):
        return to_text(self)


@dataclass(frozen=True, eq=True)
class Var(Expr):
    """The variable z."""


@dataclass(frozen=True, eq=True)
class Index(Expr):
    """The family index n."""


@dataclass(frozen=True, eq=True)
class Const(Expr):
    value: complex

    def __post_init__(self):
        object.__setattr__(self, "value", complex(self.value) + 0j)


@dataclass(frozen=True, eq=True)
class Param(Expr):
    name: str


@dataclass(frozen=True, eq=True)
class Add(Expr):
    a: Expr
    b: Expr


@dataclass(frozen=True, eq=True)
class Sub(Expr):
    a: Expr
    b: Expr


@dataclass(frozen=True, eq=True)
class Mul(Expr):
    a: Expr
    b: Expr


@dataclass(frozen=True, eq=True)
class Div(Expr):
    a: Expr
    b: Expr


@dataclass(frozen=True, eq=True)
class Neg(Expr):
    a: Expr


@dataclass(frozen=True, eq=True)
class Pow(Expr):
    """``base ** exponent``; the exponent is an integer-valued expression
    over integer literals and the index n."""

    base: Expr
    exponent: Expr


@dataclass(frozen=True, eq=True)
class Exp(Expr):
    a: Expr


@dataclass(frozen=True, eq=True)
class Compose(Expr):
    """``parts[0] ∘ parts[1] ∘ ...``; the last part is applied first."""

    parts: tuple

    def __post_init__(self):
        flat = []
        for p in self.parts:
            flat.extend(p.parts if isinstance(p, Compose) else (p,))
        if len(flat) < 2:
            raise ValueError("composition needs at least two parts")
        object.__setattr__(self, "parts", tuple(flat))


Z = Var()
N = Index()
ZERO = Const(0)
ONE = Const(1)

BINARY = (Add, Sub, Mul, Div)


def lift(x) -> Expr:
    if isinstance(x, Expr):
        return x
    return Const(complex(x))


def compose(*fs: Expr) -> Expr:
    """``fs[0] ∘ fs[1] ∘ ...`` (single argument returned unchanged)."""
    if len(fs) == 1:
        return fs[0]
    return Compose(tuple(fs))


def children(e: Expr) -> tuple:
    if isinstance(e, BINARY):
        return (e.a, e.b)
    if isinstance(e, (Neg, Exp)):
        return (e.a,)
    if isinstance(e, Pow):
        return (e.base, e.exponent)
    if isinstance(e, Compose):
        return e.parts
    return ()


@lru_cache(maxsize=None)
def contains(e: Expr, kind: type) -> bool:
    if isinstance(e, kind):
        return True
    return any(contains(c, kind) for c in children(e))


def uses_index(e: Expr) -> bool:
    return contains(e, Index)


def free_params(e: Expr) -> set:
    if isinstance(e, Param):
        return {e.name}
    out = set()
    for c in children(e):
        out |= free_params(c)
    return out


@lru_cache(maxsize=None)
def is_rational(e: Expr) -> bool:
    """True unless some exp() argument depends on z (exp of a constant is a constant)."""
    if isinstance(e, Exp):
        return not contains(e.a, Var) and is_rational(e.a)
    return all(is_rational(c) for c in children(e))


def depends_on_z(e: Expr) -> bool:
    return contains(e, Var)


@lru_cache(maxsize=None)
def has_poles(e: Expr) -> bool:
    """Conservative structural test: False guarantees the expression is entire."""
    if isinstance(e, Div):
        return depends_on_z(e.b) or has_poles(e.a)
    if isinstance(e, Pow):
        k = e.exponent
        negative = not (isinstance(k, Const) and k.value.real >= 0)
        return has_poles(e.base) or (negative and depends_on_z(e.base))
    return any(has_poles(c) for c in children(e))


# ---------------------------------------------------------------- binding


def bind(e: Expr, bindings: Mapping | None = None) -> Expr:
    """Substitute the index and parameters, returning a simplified closed tree."""
    bindings = dict(bindings or {})
    return simplify(_bind(e, tuple(sorted((k, complex(v)) for k, v in bindings.items()))))


def _bind(e: Expr, items: tuple) -> Expr:
    table = dict(items)
    return _bind_rec(e, table)


def _bind_rec(e, table):
    if isinstance(e, Index):
        if "n" not in table:
            raise UnboundSymbol("index n is unbound")
        return Const(table["n"])
    if isinstance(e, Param):
        if e.name not in table:
            raise UnboundSymbol(f"parameter {e.name!r} is unbound")
        return Const(table[e.name])
    if isinstance(e, BINARY):
        return type(e)(_bind_rec(e.a, table), _bind_rec(e.b, table))
    if isinstance(e, Neg):
        return Neg(_bind_rec(e.a, table))
    if isinstance(e, Exp):
        return Exp(_bind_rec(e.a, table))
    if isinstance(e, Pow):
        return Pow(_bind_rec(e.base, table), _bind_rec(e.exponent, table))
    if isinstance(e, Compose):
        return Compose(tuple(_bind_rec(p, table) for p in e.parts))
    return e


def substitute(outer: Expr, inner: Expr) -> Expr:
    """Replace z in ``outer`` by ``inner`` (composition expanded in place)."""
    if isinstance(outer, Var):
        return inner
    if isinstance(outer, BINARY):
        return type(outer)(substitute(outer.a, inner), substitute(outer.b, inner))
    if isinstance(outer, Neg):
        return Neg(substitute(outer.a, inner))
    if isinstance(outer, Exp):
        return Exp(substitute(outer.a, inner))
    if isinstance(outer, Pow):
        return Pow(substitute(outer.base, inner), outer.exponent)
    if isinstance(outer, Compose):
        return substitute(expand_compose(outer), inner)
    return outer


def expand_compose(e: Expr) -> Expr:
    if isinstance(e, Compose):
        acc = expand_compose(e.parts[-1])
        for p in reversed(e.parts[:-1]):
            acc = substitute(expand_compose(p), acc)
        return acc
    if isinstance(e, BINARY):
        return type(e)(expand_compose(e.a), expand_compose(e.b))
    if isinstance(e, Neg):
        return Neg(expand_compose(e.a))
    if isinstance(e, Exp):
        return Exp(expand_compose(e.a))
    if isinstance(e, Pow):
        return Pow(expand_compose(e.base), e.exponent)
    return e


def canonical(e: Expr) -> Expr:
    """Canonical form: compositions substituted out, then simplified."""
    return simplify(expand_compose(e))


# ---------------------------------------------------------------- simplify


def _is_const(e, value=None) -> bool:
    return isinstance(e, Const) and (value is None or e.value == value)


def _int_value(e: Expr):
    if isinstance(e, Const) and e.value.imag == 0 and float(e.value.real).is_integer():
        return int(e.value.real)
    return None


def _fold(e: Expr):
    """Constant-fold a node whose children are constants; None if not foldable."""
    try:
        if isinstance(e, Add):
            return e.a.value + e.b.value
        if isinstance(e, Sub):
            return e.a.value - e.b.value
        if isinstance(e, Mul):
            return e.a.value * e.b.value
        if isinstance(e, Div):
            if e.b.value == 0:
                return None
            return e.a.value / e.b.value
        if isinstance(e, Neg):
            return -e.a.value
        if isinstance(e, Exp):
            return cmath.exp(e.a.value)
        if isinstance(e, Pow):
            k = _int_value(e.exponent)
            if k is None or (k < 0 and e.base.value == 0):
                return None
            return e.base.value**k
    except OverflowError:
        return None
    return None


@lru_cache(maxsize=65536)
def simplify(e: Expr) -> Expr:
    """Bottom-up rewriting to a canonical form (idempotent)."""
    if isinstance(e, Compose):
        parts = tuple(simplify(p) for p in e.parts)
        parts = tuple(p for p in parts if not isinstance(p, Var)) or (Z,)
        if len(parts) == 1:
            return parts[0]
        if isinstance(parts[-1], Const) or any(not depends_on_z(p) for p in parts):
            # a constant stage makes everything to its left constant
            return simplify(expand_compose(Compose(parts)))
        return Compose(parts)
    if isinstance(e, BINARY):
        a, b = simplify(e.a), simplify(e.b)
        node = type(e)(a, b)
    elif isinstance(e, Neg):
        node = Neg(simplify(e.a))
    elif isinstance(e, Exp):
        node = Exp(simplify(e.a))
    elif isinstance(e, Pow):
        node = Pow(simplify(e.base), simplify(e.exponent))
    else:
        return e

    kids = children(node)
    if kids and all(isinstance(c, Const) for c in kids):
        v = _fold(node)
        if v is not None and math.isfinite(v.real) and math.isfinite(v.imag):
            return Const(v)
    return _rewrite(node)


def _rewrite(e: Expr) -> Expr:
    if isinstance(e, Add):
        a, b = e.a, e.b
        if _is_const(a, 0):
            return b
        if _is_const(b, 0):
            return a
        if isinstance(b, Neg):
            return simplify(Sub(a, b.a))
        if isinstance(b, Const) and b.value.imag == 0 and b.value.real < 0:
            return Sub(a, Const(-b.value))
        return e
    if isinstance(e, Sub):
        a, b = e.a, e.b
        if _is_const(b, 0):
            return a
        if _is_const(a, 0):
            return simplify(Neg(b))
        if a == b:
            return ZERO
        if isinstance(b, Neg):
            return simplify(Add(a, b.a))
        if isinstance(b, Const) and b.value.imag == 0 and b.value.real < 0:
            return Add(a, Const(-b.value))
        return e
    if isinstance(e, Mul):
        a, b = e.a, e.b
        if _is_const(a, 0) or _is_const(b, 0):
            return ZERO
        if _is_const(a, 1):
            return b
        if _is_const(b, 1):
            return a
        if _is_const(a, -1):
            return simplify(Neg(b))
        if _is_const(b, -1):
            return simplify(Neg(a))
        if isinstance(b, Const) and not isinstance(a, Const):
            a, b = b, a
        if isinstance(a, Const) and isinstance(b, Mul) and isinstance(b.a, Const):
            return simplify(Mul(Const(a.value * b.a.value), b.b))
        if isinstance(a, Neg):
            return simplify(Neg(Mul(a.a, b)))
        if isinstance(b, Neg):
            return simplify(Neg(Mul(a, b.a)))
        return Mul(a, b)
    if isinstance(e, Div):
        a, b = e.a, e.b
        if _is_const(a, 0) and not _is_const(b, 0):
            return ZERO
        if _is_const(b, 1):
            return a
        if isinstance(b, Const) and b.value != 0:
            return simplify(Mul(Const(1 / b.value), a))
        if a == b and not _is_const(a, 0):
            return ONE
        return e
    if isinstance(e, Neg):
        a = e.a
        if isinstance(a, Neg):
            return a.a
        if isinstance(a, Const):
            return Const(-a.value)
        if isinstance(a, Mul) and isinstance(a.a, Const):
            return simplify(Mul(Const(-a.a.value), a.b))
        if isinstance(a, Sub):
            return simplify(Sub(a.b, a.a))
        return e
    if isinstance(e, Pow):
        k = _int_value(e.exponent)
        if k == 0:
            return ONE
        if k == 1:
            return e.base
        if isinstance(e.base, Pow) and k is not None and _int_value(e.base.exponent) is not None:
            return simplify(Pow(e.base.base, Const(k * _int_value(e.base.exponent))))
        if _is_const(e.base, 1):
            return ONE
        return e
    return e


# ---------------------------------------------------------------- printing

_PREC = {Add: 1, Sub: 1, Mul: 2, Div: 2, Neg: 3, Pow: 4}
_ATOM = 5


def _fmt_real(x: float) -> str:
    x = float(x) + 0.0
    if x.is_integer() and abs(x) < 1e16:
        return str(int(x))
    return repr(x)


def _const_text(c: complex) -> tuple[str, int]:
    re_, im = c.real + 0.0, c.imag + 0.0
    if im == 0:
        s = _fmt_real(re_)
        return s, (_ATOM if re_ >= 0 else 0)
    if re_ == 0:
        if im == 1:
            return "i", _ATOM
        s = f"{_fmt_real(im)}*i"
        return s, (2 if im > 0 else 0)
    sign = "+" if im > 0 else "-"
    mag = abs(im)
    im_s = "i" if mag == 1 else f"{_fmt_real(mag)}*i"
    return f"{_fmt_real(re_)} {sign} {im_s}", 0


def _prec(e: Expr) -> int:
    if isinstance(e, Const):
        return _const_text(e.value)[1]
    return _PREC.get(type(e), _ATOM)


def to_text(e: Expr) -> str:
    """Print ``e`` in the parser's grammar; compositions are substituted."""
    if isinstance(e, Compose):
        return to_text(expand_compose(e))
    if isinstance(e, Var):
        return "z"
    if isinstance(e, Index):
        return "n"
    if isinstance(e, Param):
        return e.name
    if isinstance(e, Const):
        return _const_text(e.value)[0]
    if isinstance(e, Exp):
        return f"exp({to_text(e.a)})"
    if isinstance(e, Neg):
        return "-" + _wrap(e.a, _PREC[Neg], strict=False)
    if isinstance(e, Pow):
        base = _wrap(e.base, _PREC[Pow], strict=True)
        k = _int_value(e.exponent)
        if k is not None and k >= 0:
            exp_s = str(k)
        elif isinstance(e.exponent, Index):
            exp_s = "n"
        else:
            exp_s = f"({to_text(e.exponent)})"
        return f"{base}^{exp_s}"
    op = {Add: " + ", Sub: " - ", Mul: "*", Div: "/"}[type(e)]
    p = _PREC[type(e)]
    left = _wrap(e.a, p, strict=False)
    right = _wrap(e.b, p, strict=True)
    return f"{left}{op}{right}"


def _wrap(e: Expr, parent: int, strict: bool) -> str:
    s = to_text(e)
    q = _prec(e)
    if q < parent or (strict and q == parent):
        return f"({s})"
    return s
