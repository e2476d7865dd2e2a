"""Numerical evaluation of expression trees on the extended plane.

Array evaluation follows extended arithmetic: poles give ``INF``,
indeterminate forms give NaN.  Scalar evaluation resolves NaN entries
through the rational form (one L'Hopital step) and raises on failure.
"""
from __future__ import annotations

from functools import lru_cache

import numpy as np
from numpy.polynomial import polynomial as P

from ..sphere import INF, OVERFLOW, as_point, inf_mask, is_inf, normalize
from .calculus import differentiate
from .errors import (
    DegreeError, EssentialSingularityError, IndeterminateError, NotRationalError,
)
from .nodes import (
    Add, Compose, Const, Div, Exp, Expr, Index, Mul, Neg, Param, Pow, Sub, Var,
    bind, contains, is_rational, _int_value,
)
from .parser import parse

MAX_RATIONAL_DEGREE = 4096
NAN = complex(np.nan, np.nan)


def as_expr(f) -> Expr:
    return parse(f) if isinstance(f, str) else f


# ---------------------------------------------------------------- arrays


def _add(a, b, sign=1):
    with np.errstate(all="ignore"):
        out = a + b if sign > 0 else a - b
    nan = np.isnan(a) | np.isnan(b)
    ia, ib = inf_mask(a), inf_mask(b)
    out[~nan & (ia ^ ib)] = INF
    out[~nan & ia & ib] = NAN
    return normalize(out)


def _mul(a, b):
    with np.errstate(all="ignore"):
        out = a * b
    nan = np.isnan(a) | np.isnan(b)
    ia, ib = inf_mask(a), inf_mask(b)
    hit = ~nan & (ia | ib)
    zero = (a == 0) | (b == 0)
    out[hit & ~zero] = INF
    out[hit & zero] = NAN
    return normalize(out)


def _div(a, b):
    with np.errstate(all="ignore"):
        out = a / b
    nan = np.isnan(a) | np.isnan(b)
    ia, ib = inf_mask(a), inf_mask(b)
    bz = (b == 0) & ~nan
    az = a == 0
    out[bz & ~az] = INF
    out[bz & az] = NAN
    out[~nan & ib & ~ia] = 0
    out[~nan & ib & ia] = NAN
    out[~nan & ia & ~ib & ~bz] = INF
    return normalize(out)


def _pow(a, k: int):
    if k == 0:
        out = np.ones_like(a)
        out[np.isnan(a)] = NAN
        return out
    ia = inf_mask(a)
    safe = np.where(ia, 0, a)
    with np.errstate(all="ignore"):
        out = _ipow(safe, abs(k))
    out = normalize(out)
    out[ia] = INF
    if k < 0:
        return _div(np.ones_like(out), out)
    return out


def _ipow(a, k: int):
    # binary exponentiation; entries whose power would overflow go to INF
    mod = np.abs(a)
    with np.errstate(divide="ignore"):
        big = k * np.log(np.where(mod > 0, mod, 1.0)) > np.log(OVERFLOW)
    base = np.where(big, 0, a)
    result = np.ones_like(a)
    while k:
        if k & 1:
            result = result * base
        k >>= 1
        if k:
            base = base * base
    result[big] = INF
    return result


def _exp(a):
    ia = inf_mask(a)
    with np.errstate(all="ignore"):
        out = np.exp(np.where(ia, 0, a))
    out = normalize(out)
    out[ia] = NAN
    return out


def values(f: Expr, zs) -> np.ndarray:
    """Evaluate a closed expression at an array of points (``INF``/NaN aware)."""
    z = normalize(zs)
    shape = np.shape(zs)
    return _values(f, z.reshape(-1)).reshape(shape if shape else (1,))


def _values(e: Expr, z: np.ndarray) -> np.ndarray:
    if isinstance(e, Var):
        return z.copy()
    if isinstance(e, Const):
        return np.full(z.shape, e.value, dtype=complex)
    if isinstance(e, Compose):
        v = z
        for part in reversed(e.parts):
            v = _values(part, v)
        return v
    if isinstance(e, Add):
        return _add(_values(e.a, z), _values(e.b, z))
    if isinstance(e, Sub):
        return _add(_values(e.a, z), _values(e.b, z), sign=-1)
    if isinstance(e, Mul):
        return _mul(_values(e.a, z), _values(e.b, z))
    if isinstance(e, Div):
        return _div(_values(e.a, z), _values(e.b, z))
    if isinstance(e, Neg):
        return -_values(e.a, z)
    if isinstance(e, Pow):
        k = _int_value(e.exponent)
        if k is None:
            raise IndeterminateError(f"exponent {e.exponent} is not a bound integer")
        return _pow(_values(e.base, z), k)
    if isinstance(e, Exp):
        return _exp(_values(e.a, z))
    if isinstance(e, (Index, Param)):
        from .errors import UnboundSymbol

        raise UnboundSymbol(f"unbound symbol {e}")
    raise TypeError(f"unknown node {e!r}")


@lru_cache(maxsize=4096)
def derivative_of(f: Expr) -> Expr:
    return differentiate(f)


def values_and_derivative(f: Expr, zs):
    """Forward-mode (f(z), f'(z)); compositions are chained stage by stage."""
    z = normalize(zs).reshape(-1)
    if isinstance(f, Compose):
        v = z
        d = np.ones_like(z)
        for part in reversed(f.parts):
            dp = _values(derivative_of(part), v)
            v = _values(part, v)
            d = _mul(d, dp)
    else:
        v = _values(f, z)
        d = _values(derivative_of(f), z)
    shape = np.shape(zs)
    shape = shape if shape else (1,)
    return v.reshape(shape), d.reshape(shape)


# ---------------------------------------------------------------- rational form


def _trim(c: np.ndarray) -> np.ndarray:
    c = np.asarray(c, dtype=complex)
    if c.size == 0:
        return np.zeros(1, dtype=complex)
    scale = np.max(np.abs(c))
    if scale == 0:
        return np.zeros(1, dtype=complex)
    nz = np.nonzero(np.abs(c) > 1e-14 * scale)[0]
    return c[: nz[-1] + 1].copy()


def degree(c: np.ndarray) -> int:
    c = _trim(c)
    if c.size == 1 and c[0] == 0:
        return -1
    return c.size - 1


@lru_cache(maxsize=4096)
def rational_form(f: Expr):
    """(numerator, denominator) coefficient arrays, lowest power first.

    Not cancelled; see :func:`normalized_rational`.
    """
    p, q = _rat(f)
    return _trim(p), _trim(q)


def _rat(e: Expr):
    one = np.array([1 + 0j])
    if isinstance(e, Var):
        return np.array([0j, 1 + 0j]), one
    if isinstance(e, Const):
        return np.array([e.value]), one
    if isinstance(e, Exp):
        if contains(e.a, Var):
            raise NotRationalError("exp is not rational")
        p, q = _rat(e.a)
        return np.array([np.exp(p[0] / q[0])]), one
    if isinstance(e, (Index, Param)):
        from .errors import UnboundSymbol

        raise UnboundSymbol(f"unbound symbol {e}")
    if isinstance(e, Neg):
        p, q = _rat(e.a)
        return -p, q
    if isinstance(e, (Add, Sub)):
        p1, q1 = _rat(e.a)
        p2, q2 = _rat(e.b)
        if q1.size == 1 and q2.size == 1 and q1[0] == q2[0]:
            num = P.polyadd(p1, p2) if isinstance(e, Add) else P.polysub(p1, p2)
            return _trim(num), q1
        a, b = P.polymul(p1, q2), P.polymul(p2, q1)
        num = P.polyadd(a, b) if isinstance(e, Add) else P.polysub(a, b)
        return _trim(num), _trim(P.polymul(q1, q2))
    if isinstance(e, Mul):
        p1, q1 = _rat(e.a)
        p2, q2 = _rat(e.b)
        return _trim(P.polymul(p1, p2)), _trim(P.polymul(q1, q2))
    if isinstance(e, Div):
        p1, q1 = _rat(e.a)
        p2, q2 = _rat(e.b)
        return _trim(P.polymul(p1, q2)), _trim(P.polymul(q1, p2))
    if isinstance(e, Pow):
        k = _int_value(e.exponent)
        if k is None:
            raise IndeterminateError("exponent is not a bound integer")
        p, q = _rat(e.base)
        if abs(k) * max(p.size, q.size) > MAX_RATIONAL_DEGREE:
            raise DegreeError("rational form too large")
        pk, qk = P.polypow(p, abs(k)), P.polypow(q, abs(k))
        return (pk, qk) if k >= 0 else (qk, pk)
    if isinstance(e, Compose):
        p, q = _rat(e.parts[-1])
        for part in reversed(e.parts[:-1]):
            p, q = _substitute_rational(_rat(part), p, q)
        return p, q
    raise TypeError(f"unknown node {e!r}")


def _substitute_rational(outer, p, q):
    """outer(p/q) as a single fraction."""
    po, qo = _trim(outer[0]), _trim(outer[1])
    d = max(po.size, qo.size) - 1
    if d * max(p.size, q.size) > MAX_RATIONAL_DEGREE:
        raise DegreeError("rational form too large")

    def homog(c):
        acc = np.zeros(1, dtype=complex)
        for k, ck in enumerate(c):
            if ck == 0:
                continue
            term = ck * P.polymul(P.polypow(p, k), P.polypow(q, d - k))
            acc = P.polyadd(acc, term)
        return acc

    return _trim(homog(po)), _trim(homog(qo))


@lru_cache(maxsize=4096)
def normalized_rational(f: Expr):
    """Rational form with common roots of numerator and denominator cancelled.

    Scaled so the denominator's leading coefficient is 1.
    """
    from .roots import poly_roots

    p, q = rational_form(f)
    if degree(q) >= 1 and degree(p) >= 1 and degree(q) <= 256:
        for r in poly_roots(q):
            if degree(q) < 1 or degree(p) < 1:
                break
            scale = np.polyval(np.abs(p)[::-1], max(1.0, abs(r)))
            if abs(P.polyval(r, p)) <= 1e-9 * scale:
                p2, _ = P.polydiv(p, np.array([-r, 1]))
                q2, _ = P.polydiv(q, np.array([-r, 1]))
                p, q = _trim(p2), _trim(q2)
    lead = q[-1]
    return _trim(p / lead), _trim(q / lead)


def rational_degree(f: Expr) -> int:
    p, q = normalized_rational(f)
    return max(degree(p), degree(q), 0)


def _rational_value(f: Expr, z: complex) -> complex:
    try:
        p, q = normalized_rational(f)
    except DegreeError:
        p, q = rational_form(f)
    if is_inf(z):
        dp, dq = degree(p), degree(q)
        if dp > dq:
            return INF
        if dp < dq:
            return 0j
        return complex(normalize(p[dp] / q[dq])[0])
    return _ratio_lhopital(p, q, z)


def _ratio_lhopital(p, q, z):
    tol_p = 1e-13 * max(1.0, P.polyval(abs(z), np.abs(p)))
    tol_q = 1e-13 * max(1.0, P.polyval(abs(z), np.abs(q)))
    pv, qv = P.polyval(z, p), P.polyval(z, q)
    if abs(qv) > tol_q:
        return complex(normalize(pv / qv)[0])
    if abs(pv) > tol_p:
        return INF
    dpv, dqv = P.polyval(z, P.polyder(p)), P.polyval(z, P.polyder(q))
    if abs(dqv) > tol_q:
        return complex(normalize(dpv / dqv)[0])
    if abs(dpv) > tol_p:
        return INF
    raise IndeterminateError(f"0/0 at z={z} not resolved by one L'Hopital step")


# ---------------------------------------------------------------- scalar


def evaluate(f, z, bindings=None) -> complex:
    """f(z) on the extended plane (``INF`` for infinity).

    Raises UnboundSymbol, IndeterminateError or EssentialSingularityError.
    """
    closed = bind(as_expr(f), bindings)
    return _scalar(closed, as_point(z))


def _scalar(e: Expr, z: complex) -> complex:
    if isinstance(e, Compose):
        v = z
        for part in reversed(e.parts):
            v = _scalar(part, v)
        return v
    if not is_inf(z):
        v = _values(e, np.array([z]))[0]
        if not np.isnan(v):
            return complex(v)
    if is_rational(e) and not contains(e, Compose):
        return _rational_value(e, z)
    return _structural(e, z)


def _structural(e: Expr, z: complex) -> complex:
    if isinstance(e, Var):
        return z
    if isinstance(e, Const):
        return e.value
    if isinstance(e, Compose):
        return _scalar(e, z)
    if isinstance(e, Exp):
        a = _scalar(e.a, z)
        if is_inf(a):
            raise EssentialSingularityError("exp evaluated at infinity")
        return complex(_exp(np.array([a]))[0])
    if isinstance(e, Neg):
        return complex(-np.array([_scalar(e.a, z)])[0])
    if isinstance(e, Pow):
        return complex(_pow(np.array([_scalar(e.base, z)]), _int_value(e.exponent))[0])
    a = np.array([_scalar(e.a, z)])
    b = np.array([_scalar(e.b, z)])
    if isinstance(e, Add):
        out = _add(a, b)
    elif isinstance(e, Sub):
        out = _add(a, b, sign=-1)
    elif isinstance(e, Mul):
        out = _mul(a, b)
    else:
        out = _div(a, b)
        if np.isnan(out[0]) and a[0] == 0 and b[0] == 0 and not is_inf(z):
            da = _scalar(derivative_of(e.a), z)
            db = _scalar(derivative_of(e.b), z)
            out = _div(np.array([da]), np.array([db]))
    v = complex(out[0])
    if np.isnan(v):
        raise IndeterminateError(f"indeterminate value of {e} at z={z}")
    return v


# ---------------------------------------------------------------- spherical derivative


def spherical_derivative_values(f: Expr, zs, bindings=None) -> np.ndarray:
    """|f'| / (1 + |f|^2) at finite points; poles use the reciprocal rule."""
    f = bind(f, bindings) if bindings else f
    zs = normalize(zs).reshape(-1)
    if inf_mask(zs).any():
        raise ValueError("spherical derivative is only evaluated at finite points")
    v, d = values_and_derivative(f, zs)
    with np.errstate(all="ignore"):
        out = np.abs(d) / (1.0 + np.abs(v) ** 2)
    bad = ~np.isfinite(out) | inf_mask(v)
    for i in np.nonzero(bad)[0]:
        out[i] = _sph_at_pole(f, complex(zs[i]), complex(v[i]))
    return out


def _sph_at_pole(f: Expr, z: complex, fz: complex) -> float:
    if not is_inf(fz):
        # derivative overflowed at a finite value: spherical derivative is huge
        return float("inf") if not np.isnan(fz) else float("nan")
    if is_rational(f):
        try:
            p, q = normalized_rational(f)
            # 1/f = q/p; at a pole q(z)=0 so (q/p)' = q'(z)/p(z)
            pv = P.polyval(z, p)
            if pv != 0:
                return float(abs(P.polyval(z, P.polyder(q)) / pv))
        except DegreeError:
            pass
    h = 1e-6 * max(1.0, abs(z))
    lo = _scalar(f, z - h)
    hi = _scalar(f, z + h)
    rl = 0j if is_inf(lo) else 1 / lo
    rh = 0j if is_inf(hi) else 1 / hi
    return float(abs((rh - rl) / (2 * h)))
