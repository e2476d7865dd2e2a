"""Points of the Riemann sphere and its chordal geometry.

Finite points are carried around as ordinary Python/numpy complex numbers;
the point at infinity is the single value ``INF`` (``complex(inf, 0)``).
``ExtendedComplex`` is the value type used at API boundaries (parsing,
printing, reports).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

# Any evaluated modulus above this is the point at infinity.
OVERFLOW = 1e150

INF = complex(math.inf, 0.0)


@dataclass(frozen=True)
class ExtendedComplex:
    """A point of the extended plane: finite ``re + im*i`` or infinity."""

    re: float = 0.0
    im: float = 0.0
    infinite: bool = False

    def __post_init__(self):
        if self.infinite:
            object.__setattr__(self, "re", 0.0)
            object.__setattr__(self, "im", 0.0)
            return
        if math.isnan(self.re) or math.isnan(self.im):
            raise ValueError("finite extended-complex value has a NaN component")
        if math.isinf(self.re) or math.isinf(self.im) or math.hypot(self.re, self.im) > OVERFLOW:
            object.__setattr__(self, "infinite", True)
            object.__setattr__(self, "re", 0.0)
            object.__setattr__(self, "im", 0.0)

    @classmethod
    def infinity(cls) -> "ExtendedComplex":
        return cls(infinite=True)

    @classmethod
    def of(cls, value) -> "ExtendedComplex":
        if isinstance(value, ExtendedComplex):
            return value
        if isinstance(value, str):
            return parse_point(value)
        z = complex(value)
        return cls(z.real, z.imag)

    @property
    def value(self) -> complex:
        return INF if self.infinite else complex(self.re, self.im)

    def __complex__(self) -> complex:
        return self.value

    def __str__(self) -> str:
        return format_point(self.value)


def is_inf(z) -> bool:
    z = complex(z)
    return not (math.isfinite(z.real) and math.isfinite(z.imag)) or abs(z) > OVERFLOW


def as_point(value) -> complex:
    """Coerce str / ExtendedComplex / number to the internal complex form."""
    if isinstance(value, ExtendedComplex):
        return value.value
    if isinstance(value, str):
        return parse_point(value).value
    z = complex(value)
    if math.isnan(z.real) or math.isnan(z.imag):
        raise ValueError("NaN is not a point of the extended plane")
    return INF if is_inf(z) else z


def normalize(values) -> np.ndarray:
    """Coerce overflowed or infinite entries of a complex array to ``INF``.

    An entry with an infinite component is infinity even if its other
    component is NaN (overflow artefact); fully NaN entries stay NaN and
    mean "indeterminate".
    """
    a = np.array(values, dtype=complex, copy=True, ndmin=1)
    a[inf_mask(a)] = INF
    return a


def inf_mask(values) -> np.ndarray:
    # |a| is inf for any infinite component, even when the other is NaN
    return np.abs(np.asarray(values, dtype=complex)) > OVERFLOW


def parse_point(text: str) -> ExtendedComplex:
    """Parse ``"re+imi"`` (``"2"``, ``"-1.5i"``, ``"0.5+0i"``) or ``"inf"``."""
    s = text.strip().lower().replace(" ", "")
    if s in ("inf", "+inf", "infinity", "oo", "\u221e"):
        return ExtendedComplex.infinity()
    if not s or "j" in s or "nan" in s or "inf" in s:
        raise ValueError(f"cannot parse point {text!r}")
    try:
        z = complex(s.replace("i", "j"))
    except ValueError:
        raise ValueError(f"cannot parse point {text!r}") from None
    return ExtendedComplex(z.real, z.imag)


def format_point(z) -> str:
    """Render as ``re+imi`` using repr floats, or ``inf``."""
    z = as_point(z)
    if is_inf(z):
        return "inf"
    re_s = repr(float(z.real) + 0.0)
    im = float(z.imag) + 0.0
    sign = "-" if math.copysign(1.0, im) < 0 else "+"
    return f"{re_s}{sign}{repr(abs(im))}i"


def chordal_distance(a, b):
    """Chordal distance on the sphere of diameter 2; values lie in [0, 2].

    Accepts scalars or broadcastable complex arrays (``INF`` for infinity).
    """
    scalar = np.ndim(a) == 0 and np.ndim(b) == 0
    if scalar:
        a, b = as_point(a), as_point(b)
    a = normalize(a)
    b = normalize(b)
    a, b = np.broadcast_arrays(a, b)
    ia, ib = inf_mask(a), inf_mask(b)
    out = np.empty(a.shape, dtype=float)
    fin = ~ia & ~ib
    aa, bb = a[fin], b[fin]
    out[fin] = 2.0 * np.abs(aa - bb) / (np.sqrt(1.0 + np.abs(aa) ** 2) * np.sqrt(1.0 + np.abs(bb) ** 2))
    only_a = ia & ~ib
    out[only_a] = 2.0 / np.sqrt(1.0 + np.abs(b[only_a]) ** 2)
    only_b = ib & ~ia
    out[only_b] = 2.0 / np.sqrt(1.0 + np.abs(a[only_b]) ** 2)
    out[ia & ib] = 0.0
    np.minimum(out, 2.0, out=out)
    if scalar:
        return float(out.reshape(-1)[0])
    return out


def antipode(a) -> complex:
    """The point diametrically opposite ``a`` on the sphere: -1/conj(a)."""
    a = as_point(a)
    if is_inf(a):
        return 0j
    if a == 0:
        return INF
    return -1.0 / a.conjugate()


@dataclass(frozen=True)
class ChordalBall:
    """Euclidean description of ``{v : chordal(v, center) < radius}``.

    Either the open disk ``|v - c| < r`` (``outside`` False) or the
    complement ``|v - c| > r`` together with infinity (``outside`` True).
    """

    c: complex
    r: float
    outside: bool

    def contains(self, v):
        v = normalize(v)
        infm = inf_mask(v)
        with np.errstate(invalid="ignore"):
            d = np.abs(np.where(infm, 0, v) - self.c)
        res = d > self.r if self.outside else d < self.r
        return np.where(infm, self.outside, res)

    def meets_disk(self, center: complex, radius: float) -> bool:
        d = abs(center - self.c)
        if self.outside:
            return d + radius > self.r
        return d < self.r + radius


def chordal_ball(w, eps: float) -> ChordalBall:
    """Chordal ball of radius ``eps`` about ``w`` in Euclidean terms."""
    w = as_point(w)
    if eps >= 2.0:
        return ChordalBall(0j, -1.0, True)
    if is_inf(w):
        # 2/sqrt(1+|v|^2) < eps  <=>  |v| > sqrt(4/eps^2 - 1)
        return ChordalBall(0j, math.sqrt(4.0 / eps**2 - 1.0), True)
    k = eps**2 * (1.0 + abs(w) ** 2) / 4.0
    if abs(1.0 - k) < 1e-15:
        k = 1.0 - 1e-15
    rad2 = k * (1.0 + abs(w) ** 2 - k) / (1.0 - k) ** 2
    c = w / (1.0 - k)
    r = math.sqrt(max(rad2, 0.0))
    return ChordalBall(c, r, k > 1.0)


def spherical_derivative(f, z, bindings=None) -> float:
    """|f'(z)| / (1 + |f(z)|^2), with the reciprocal rule at poles.

    ``f`` is a FunctionExpr (or text); at a pole the value equals that of
    ``1/f`` and is taken as the limit, computed from ``1/f``.
    """
    from .funcexpr import as_expr, spherical_derivative_values

    z = as_point(z)
    return float(spherical_derivative_values(as_expr(f), np.array([z]), bindings or {})[0])
