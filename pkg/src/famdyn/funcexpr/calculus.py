"""Symbolic d/dz."""
from __future__ import annotations

from functools import lru_cache

from .nodes import (
    Add, Compose, Const, Div, Exp, Expr, Index, Mul, Neg, Param, Pow, Sub, Var,
    ONE, ZERO, compose, simplify,
)


def differentiate(f: Expr) -> Expr:
    """Derivative of ``f`` with respect to z, in canonical form."""
    return simplify(_d(f))


@lru_cache(maxsize=65536)
def _d(e: Expr) -> Expr:
    if isinstance(e, Var):
        return ONE
    if isinstance(e, (Const, Index, Param)):
        return ZERO
    if isinstance(e, Add):
        return Add(_d(e.a), _d(e.b))
    if isinstance(e, Sub):
        return Sub(_d(e.a), _d(e.b))
    if isinstance(e, Neg):
        return Neg(_d(e.a))
    if isinstance(e, Mul):
        return Add(Mul(_d(e.a), e.b), Mul(e.a, _d(e.b)))
    if isinstance(e, Div):
        return Div(Sub(Mul(_d(e.a), e.b), Mul(e.a, _d(e.b))), Pow(e.b, Const(2)))
    if isinstance(e, Pow):
        k = e.exponent
        return Mul(Mul(k, Pow(e.base, simplify(Sub(k, ONE)))), _d(e.base))
    if isinstance(e, Exp):
        return Mul(e, _d(e.a))
    if isinstance(e, Compose):
        # (f∘g∘h)' = (f'∘g∘h)·(g'∘h)·h'
        parts = e.parts
        factors = []
        for i, p in enumerate(parts):
            dp = simplify(_d(p))
            rest = parts[i + 1:]
            factors.append(compose(dp, *rest) if rest else dp)
        acc = factors[0]
        for fct in factors[1:]:
            acc = Mul(acc, fct)
        return acc
    raise TypeError(f"cannot differentiate {e!r}")
