"""Preimages of rational members and argument-principle solution counts."""
from __future__ import annotations

import math

import numpy as np
from numpy.polynomial import polynomial as P

from ..sphere import INF, as_point, inf_mask, is_inf
from .errors import DegreeError, NonConvergenceError, NotRationalError
from .evaluate import (
    as_expr, degree, normalized_rational, values_and_derivative, _trim,
)
from .nodes import Compose, Expr, bind, has_poles, is_rational

ROOT_TOL = 1e-10
ROOT_MAX_ITER = 1000
CLUSTER_TOL = 1e-4  # a k-fold root is only resolved to about eps^(1/k)
MAX_PREIMAGES = 1 << 16

# contour counting
COUNT_START_N = 128
COUNT_MAX_N = 1 << 16
BOUNDARY_TOL = 1e-9
JITTER = 1e-3
MAX_JITTERS = 8


class BoundaryHitError(NonConvergenceError):
    """A solution sits on the contour even after the radius was jittered."""


# ---------------------------------------------------------------- Aberth


def _newton_ratio(a: np.ndarray, z: np.ndarray) -> np.ndarray:
    """p(z)/p'(z) for low-first coefficients ``a``; stable for |z| > 1."""
    d = a.size - 1
    out = np.empty_like(z)
    small = np.abs(z) <= 1
    da = P.polyder(a)
    if small.any():
        zs = z[small]
        out[small] = P.polyval(zs, a) / P.polyval(zs, da)
    big = ~small
    if big.any():
        # p(z) = z^d r(1/z) with r the reversed polynomial
        r = a[::-1]
        dr = P.polyder(r)
        u = 1.0 / z[big]
        ru = P.polyval(u, r)
        dru = P.polyval(u, dr)
        # p'/p = d/z - u^2 r'(u)/r(u)
        out[big] = 1.0 / (d * u - u * u * dru / ru)
    return out


def _relative_residual(a: np.ndarray, z: np.ndarray) -> np.ndarray:
    absa = np.abs(a)
    out = np.empty(z.shape)
    small = np.abs(z) <= 1
    if small.any():
        zs = z[small]
        out[small] = np.abs(P.polyval(zs, a)) / P.polyval(np.abs(zs), absa)
    big = ~small
    if big.any():
        u = 1.0 / z[big]
        out[big] = np.abs(P.polyval(u, a[::-1])) / P.polyval(np.abs(u), absa[::-1])
    return out


def poly_roots(coeffs, seed: int = 0, tol: float = ROOT_TOL, max_iter: int = ROOT_MAX_ITER) -> np.ndarray:
    """All roots (with repetition) of a polynomial, lowest coefficient first.

    Aberth-Ehrlich simultaneous iteration started from a deterministically
    perturbed circle of radius 1 + max|a_k / a_d|.  Raises
    NonConvergenceError when some root's relative residual stays above
    ``tol`` after ``max_iter`` sweeps.
    """
    a = _trim(np.asarray(coeffs, dtype=complex))
    if degree(a) < 1:
        return np.zeros(0, dtype=complex)
    zeros_at_origin = int(np.argmax(a != 0))
    a = a[zeros_at_origin:]
    d = a.size - 1
    roots = [np.zeros(zeros_at_origin, dtype=complex)]
    if d == 0:
        return roots[0]
    if d == 1:
        roots.append(np.array([-a[0] / a[1]]))
        return np.concatenate(roots)
    a = a / a[-1]
    if d == 2:
        # z^2 + b z + c with the cancellation-free quadratic formula
        b, c = a[1], a[0]
        s = np.sqrt(b * b - 4 * c)
        if (np.conj(b) * s).real < 0:
            s = -s
        q = -0.5 * (b + s)
        roots.append(np.array([q, c / q]) if q != 0 else np.zeros(2, dtype=complex))
        return np.concatenate(roots)
    if not np.any(a[1:-1]):
        # z^d + c: the d-th roots of -c
        c = -a[0]
        k = np.arange(d)
        roots.append(abs(c) ** (1.0 / d) * np.exp(1j * (np.angle(c) + 2 * np.pi * k) / d))
        return np.concatenate(roots)
    radius = 1.0 + float(np.max(np.abs(a[:-1])))
    rng = np.random.default_rng(seed)
    angles = 2 * np.pi * (np.arange(d) + 0.25 + 0.1 * rng.random(d)) / d
    z = radius * (1 + 0.01 * rng.random(d)) * np.exp(1j * angles)
    active = np.ones(d, dtype=bool)
    for _ in range(max_iter):
        idx = np.nonzero(active)[0]
        if idx.size == 0:
            break
        ratio = _newton_ratio(a, z[idx])
        diff = z[idx, None] - z[None, :]
        diff[np.arange(idx.size), idx] = np.inf
        s = np.sum(1.0 / diff, axis=1)
        step = ratio / (1.0 - ratio * s)
        step[~np.isfinite(step)] = 0.0
        z[idx] = z[idx] - step
        done = np.abs(step) <= 4e-16 * np.maximum(np.abs(z[idx]), 1e-300)
        res = _relative_residual(a, z[idx])
        done |= res <= 1e-15
        active[idx[done]] = False
    res = _relative_residual(a, z)
    if np.any(~(res <= tol)):
        raise NonConvergenceError(
            f"root iteration did not converge after {max_iter} sweeps (worst residual {np.nanmax(res):.3g})"
        )
    roots.append(z)
    return np.concatenate(roots)


def _cluster(points: np.ndarray, mults: np.ndarray):
    """Merge near-coincident points, summing multiplicities; sorted output.

    Points within CLUSTER_TOL * (1 + |z|) of each other are chained into
    one cluster placed at the multiplicity-weighted mean.
    """
    points = np.asarray(points, dtype=complex)
    mults = np.asarray(mults, dtype=int)
    infs = inf_mask(points)
    n_inf = int(mults[infs].sum())
    z = points[~infs]
    m = mults[~infs]
    order = np.argsort(z.real, kind="stable")
    z, m = z[order], m[order]
    n = z.size
    parent = np.arange(n)

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    tol = CLUSTER_TOL * (1 + np.abs(z))
    tmax = float(tol.max()) if n else 0.0
    k = 1
    while k < n:
        near_re = (z[k:].real - z[:-k].real) <= tmax
        if not near_re.any():
            break
        close = near_re & (np.abs(z[k:] - z[:-k]) <= tol[:-k])
        for i in np.nonzero(close)[0]:
            a, b = find(i), find(i + k)
            if a != b:
                parent[b] = a
        k += 1
    _, group = np.unique([find(i) for i in range(n)], return_inverse=True)
    weight = np.bincount(group, weights=m).astype(int)
    centre = (np.bincount(group, weights=(z * m).real)
              + 1j * np.bincount(group, weights=(z * m).imag)) / np.maximum(weight, 1)
    res = list(zip(centre.tolist(), weight.tolist()))
    if n_inf:
        res.append((INF, n_inf))
    return sorted(res, key=lambda t: (is_inf(t[0]), round(t[0].real, 9) if not is_inf(t[0]) else 0,
                                      t[0].imag if not is_inf(t[0]) else 0))


# ---------------------------------------------------------------- preimages


def preimages(f, w, bindings=None, seed: int = 0) -> list[tuple[complex, int]]:
    """Solutions of f(z) = w on the sphere as (point, multiplicity) pairs.

    Multiplicities sum to the degree of ``f``.  Compositions are inverted
    stage by stage so their degree is never expanded.
    """
    f = bind(as_expr(f), bindings)
    w = as_point(w)
    if not is_rational(f):
        raise NotRationalError("preimages need a rational member")
    if isinstance(f, Compose):
        targets = [(w, 1)]
        for part in f.parts:
            pts, ms = [], []
            for t, m in targets:
                for s, k in _preimages_simple(part, t, seed):
                    pts.append(s)
                    ms.append(m * k)
            if len(pts) > MAX_PREIMAGES:
                raise DegreeError("too many preimages")
            targets = _cluster(np.array(pts, dtype=complex), np.array(ms))
        return targets
    return _preimages_simple(f, w, seed)


def _preimages_simple(f: Expr, w: complex, seed: int):
    p, q = normalized_rational(f)
    d = max(degree(p), degree(q))
    if d < 1:
        raise DegreeError("preimages of a constant are undefined")
    target = q if is_inf(w) else _trim(P.polysub(p, w * q))
    dt = degree(target)
    roots = poly_roots(target, seed=seed) if dt >= 1 else np.zeros(0, dtype=complex)
    pts = list(roots)
    ms = [1] * len(pts)
    if d - max(dt, 0) > 0:
        pts.append(INF)
        ms.append(d - max(dt, 0))
    return _cluster(np.array(pts, dtype=complex), np.array(ms))


def rational_degree_of(f, bindings=None) -> int:
    f = bind(as_expr(f), bindings)
    if isinstance(f, Compose):
        return math.prod(rational_degree_of(p) for p in f.parts)
    p, q = normalized_rational(f)
    return max(degree(p), degree(q), 0)


# ---------------------------------------------------------------- counting


def count_solutions_in(f, w, center, radius: float, bindings=None) -> int:
    """Number of solutions of f(z) = w in the open disk, with multiplicity."""
    return int(count_solutions_many(f, [as_point(w)], center, radius, bindings)[0])


def count_solutions_many(f, ws, center, radius: float, bindings=None) -> np.ndarray:
    """Vectorised :func:`count_solutions_in` over finite target values ``ws``.

    Winding number of f(boundary) - w from the trapezoidal rule applied to
    f'/(f - w), doubling the node count until each value is within 0.25 of
    an integer and stable; poles inside the disk are added back.  A value
    too close to the image of the contour shrinks the radius by JITTER
    (at most MAX_JITTERS times).
    """
    f = bind(as_expr(f), bindings)
    ws = np.asarray([as_point(w) for w in np.atleast_1d(ws)], dtype=complex)
    if inf_mask(ws).any():
        raise ValueError("count targets must be finite; count poles via preimages(f, inf)")
    center = as_point(center)
    out = np.empty(ws.size, dtype=int)
    for lo in range(0, ws.size, 256):
        out[lo:lo + 256] = _count_block(f, ws[lo:lo + 256], center, radius)
    return out


def _count_block(f: Expr, ws: np.ndarray, center: complex, radius: float) -> np.ndarray:
    result = np.zeros(ws.size, dtype=int)
    todo = np.arange(ws.size)
    for attempt in range(MAX_JITTERS + 1):
        r = radius * (1.0 - JITTER * attempt)
        counts, ok = _winding(f, ws[todo], center, r)
        if ok.any():
            poles = _poles_inside(f, center, r) if has_poles(f) else 0
            result[todo[ok]] = counts[ok] + poles
        todo = todo[~ok]
        if todo.size == 0:
            return result
    raise BoundaryHitError(
        f"{todo.size} target(s) stayed on or near the contour after {MAX_JITTERS} radius jitters"
    )


def _winding(f: Expr, ws: np.ndarray, c: complex, r: float):
    counts = np.zeros(ws.size, dtype=int)
    ok = np.zeros(ws.size, dtype=bool)
    pending = np.arange(ws.size)
    prev = None
    n = COUNT_START_N
    while n <= COUNT_MAX_N and pending.size:
        theta = 2 * np.pi * np.arange(n) / n
        e = np.exp(1j * theta)
        v, dv = values_and_derivative(f, c + r * e)
        if inf_mask(v).any() or np.isnan(v).any() or np.isnan(dv).any():
            return counts, ok  # pole or undefined value on the contour
        diff = v[None, :] - ws[pending, None]
        near = np.min(np.abs(diff), axis=1) < BOUNDARY_TOL * (1 + np.abs(ws[pending]))
        with np.errstate(invalid="ignore", divide="ignore", over="ignore"):
            integral = np.mean(dv[None, :] * r * e[None, :] / diff, axis=1)
        if prev is not None:
            nearest = np.rint(integral.real)
            good = (
                (np.abs(integral - prev) < 0.1)
                & (np.abs(integral.real - nearest) < 0.25)
                & (np.abs(integral.imag) < 0.25)
                & ~near
            )
            counts[pending[good]] = nearest[good].astype(int)
            ok[pending[good]] = True
            keep = ~good & ~near
            prev = integral[keep]
            pending = pending[keep]
        else:
            keep = ~near
            prev = integral[keep]
            pending = pending[keep]
        n *= 2
    return counts, ok


def _poles_inside(f: Expr, c: complex, r: float) -> int:
    total = 0
    for z, m in preimages(f, INF):
        if not is_inf(z) and abs(z - c) < r:
            total += m
    return total
