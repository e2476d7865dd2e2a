"""Images of small disks under family members.

For each domain disk U = D(c, r) and member f we keep

* the images of a fixed sample pattern (centre, a boundary ring and two
  inner rings); a sample image inside a target is a concrete witness;
* an enclosing disk D(f(c), R) for f(U) from the maximum-modulus
  principle, with R padded by max|f'| times the half sample spacing on
  the boundary.  A target missing that disk is excluded;
* argument-principle counts on demand (rational members only).
"""
from __future__ import annotations

import math

import numpy as np

from .family import Family
from .funcexpr import BoundaryHitError, NonConvergenceError, count_solutions_many
from .funcexpr.nodes import has_poles, is_rational
from .funcexpr.roots import rational_degree_of
from .sphere import INF, OVERFLOW, ChordalBall, chordal_ball, chordal_distance, inf_mask, is_inf

BOUNDARY_POINTS = 32
RINGS = ((1.0, BOUNDARY_POINTS), (0.5, 16), (0.25, 8))
CHUNK = 1 << 22
MAX_COUNT_DEGREE = 2048  # contour counting cannot resolve higher degrees  # max entries per temporary array

HIT, MISS, UNKNOWN = 1, 0, -1
ESCAPE_MODULUS = 1e50


def sample_offsets() -> np.ndarray:
    """Unit-disk sample pattern: centre first, then the boundary ring."""
    out = [0j]
    for frac, k in RINGS:
        shift = 0.5 if frac < 1 else 0.0
        out.extend(frac * np.exp(2j * np.pi * (np.arange(k) + shift) / k))
    return np.array(out)


OFFSETS = sample_offsets()
_BND = slice(1, 1 + BOUNDARY_POINTS)


def sph_values(v: np.ndarray, d: np.ndarray) -> np.ndarray:
    """|d| / (1 + |v|^2); points sent to infinity count as 0 (escaped).

    An overflowed derivative at a huge value is also treated as escaped:
    there the quotient behaves like |d| / |v|^2, far below 1.
    """
    with np.errstate(over="ignore", invalid="ignore"):
        av = np.abs(v)
        ad = np.abs(d)
        out = ad / (1.0 + av * av)
    escaped = inf_mask(v) | (~(ad <= OVERFLOW) & (av >= ESCAPE_MODULUS))
    return np.where(escaped, 0.0, out)


class DiskProbe:
    """Sample images of disks ``D(centers[j], radii[j])`` under every member."""

    def __init__(self, family: Family, centers, radii):
        self.family = family
        self.centers = np.atleast_1d(np.asarray(centers, dtype=complex))
        self.radii = np.broadcast_to(np.asarray(radii, dtype=float), self.centers.shape).copy()
        self.points = self.centers[:, None] + self.radii[:, None] * OFFSETS[None, :]
        D, S = self.points.shape
        M = len(family.members)
        self.vals = np.empty((M, D, S), dtype=complex)
        self.bound = np.empty((M, D))
        flat = self.points.reshape(-1)
        spacing = math.pi / BOUNDARY_POINTS
        for m, v, d in family.stream(flat, with_derivative=True):
            v = v.reshape(D, S)
            d = d.reshape(D, S)
            self.vals[m] = v
            with np.errstate(invalid="ignore", over="ignore"):
                fb = v[:, _BND]
                spread = np.max(np.abs(fb - v[:, :1]), axis=1)
                slope = np.max(np.abs(d[:, _BND]), axis=1)
                R = spread + slope * self.radii * spacing
            bad = ~np.all(np.isfinite(v), axis=1) | ~np.isfinite(R)
            R[bad] = np.inf
            self.bound[m] = R
        self.poles = np.array([has_poles(mem.expr) for mem in family.members], dtype=bool)
        self.bound[self.poles] = np.inf
        self.rational = np.array([is_rational(mem.expr) for mem in family.members], dtype=bool)
        self.fc = self.vals[:, :, 0]
        self._degrees: dict[int, int] = {}

    def countable(self, m: int) -> bool:
        return bool(self.rational[m]) and self.degree(m) <= MAX_COUNT_DEGREE

    def degree(self, m: int) -> int:
        if m not in self._degrees:
            try:
                self._degrees[m] = rational_degree_of(self.family.members[m].expr)
            except (ValueError, ArithmeticError):
                self._degrees[m] = 1 << 62
        return self._degrees[m]

    @property
    def n_members(self) -> int:
        return self.vals.shape[0]

    @property
    def n_disks(self) -> int:
        return self.vals.shape[1]

    # -- sample witnesses
    def sample_hits(self, d: int, targets: np.ndarray, eps: float):
        """(M, T) boolean hits for disk ``d`` and the sample index of one hit."""
        M, _, S = self.vals.shape
        T = targets.size
        hits = np.zeros((M, T), dtype=bool)
        where = np.full((M, T), -1, dtype=int)
        step = max(1, CHUNK // max(1, S * T))
        for lo in range(0, M, step):
            img = self.vals[lo:lo + step, d, :]
            dist = chordal_distance(img[:, :, None], targets[None, None, :])
            dist = np.nan_to_num(dist, nan=3.0)
            inside = dist < eps
            hits[lo:lo + step] = inside.any(axis=1)
            where[lo:lo + step] = np.where(inside.any(axis=1), inside.argmax(axis=1), -1)
        return hits, where

    # -- maximum-modulus exclusion
    def excluded(self, d: int, balls: list[ChordalBall]) -> np.ndarray:
        """(M, T): True where f(U_d) certainly misses the target ball."""
        fc = self.fc[:, d]
        R = self.bound[:, d]
        finite = np.isfinite(R) & ~inf_mask(fc)
        out = np.zeros((fc.size, len(balls)), dtype=bool)
        for t, b in enumerate(balls):
            with np.errstate(invalid="ignore"):
                gap = np.abs(np.where(finite, fc, 0) - b.c)
            if b.outside:
                out[:, t] = finite & (gap + R <= b.r)
            else:
                out[:, t] = finite & (gap >= R + b.r)
        return out

    # -- argument principle
    def count_hit(self, m: int, d: int, ball: ChordalBall) -> int:
        """HIT/MISS/UNKNOWN for f_m(U_d) meeting ``ball`` via solution counts."""
        if not self.rational[m] or self.degree(m) > MAX_COUNT_DEGREE:
            return UNKNOWN
        f = self.family.members[m].expr
        c, r = self.centers[d], self.radii[d]
        if ball.outside and self.poles[m]:
            from .funcexpr import preimages

            try:
                if any(not is_inf(z) and abs(z - c) < r for z, _ in preimages(f, INF)):
                    return HIT
            except (NonConvergenceError, ValueError):
                pass
        ws = _probe_targets(ball, self.fc[m, d])
        if ws.size == 0:
            return UNKNOWN
        try:
            counts = count_solutions_many(f, ws, c, r)
        except (BoundaryHitError, NonConvergenceError, ValueError):
            return UNKNOWN
        return HIT if np.any(counts > 0) else MISS


def _probe_targets(ball: ChordalBall, toward: complex) -> np.ndarray:
    """A few finite points of ``ball``, starting with the one nearest ``toward``."""
    pts = []
    if ball.outside:
        rho = max(ball.r, 0.0) * 1.1 + 1e-9
        u = 1.0 + 0j
        if not is_inf(toward) and np.isfinite(toward) and toward - ball.c != 0:
            u = (toward - ball.c) / abs(toward - ball.c)
            if abs(toward - ball.c) > rho:
                pts.append(toward)
        pts.append(ball.c + rho * u)
        pts.extend(ball.c + rho * np.exp(2j * np.pi * np.arange(6) / 6))
        return np.array(pts, dtype=complex)
    pts.append(ball.c)
    if not is_inf(toward) and np.isfinite(toward):
        gap = abs(toward - ball.c)
        if gap > 0:
            pts.insert(0, ball.c + (toward - ball.c) * min(1.0, 0.9 * ball.r / gap))
    pts.extend(ball.c + 0.6 * ball.r * np.exp(2j * np.pi * np.arange(6) / 6))
    return np.array(pts, dtype=complex)


def balls_for(targets: np.ndarray, eps: float) -> list[ChordalBall]:
    return [chordal_ball(w, eps) for w in targets]


def resolve_pairs(probe: DiskProbe, d: int, targets: np.ndarray, eps: float,
                  max_counts: int = 64):
    """For disk ``d`` and every target, does some member's image meet it?

    Returns (status array, witness list, heuristic flag).  Witness entries
    are (member index, kind, detail): kind "sample" carries the sample
    point, kind "count" the disk index.
    """
    T = targets.size
    status = np.full(T, UNKNOWN, dtype=int)
    witness: list = [None] * T
    hits, where = probe.sample_hits(d, targets, eps)
    for t in range(T):
        ms = np.nonzero(hits[:, t])[0]
        if ms.size:
            m = int(ms[0])
            status[t] = HIT
            witness[t] = (m, "sample", complex(probe.points[d, where[m, t]]))
    todo = np.nonzero(status == UNKNOWN)[0]
    heuristic = False
    if todo.size:
        balls = balls_for(targets[todo], eps)
        excl = probe.excluded(d, balls)
        for k, t in enumerate(todo):
            live = np.nonzero(~excl[:, k])[0]
            if live.size == 0:
                status[t] = MISS
                continue
            fc = probe.fc[live, d]
            with np.errstate(invalid="ignore"):
                gap = np.nan_to_num(chordal_distance(fc, targets[t]), nan=3.0)
            order = live[np.argsort(gap, kind="stable")]
            countable = np.array([probe.countable(int(m)) for m in order], dtype=bool)
            order = order[countable]
            result = MISS
            for m in order[:max_counts]:
                got = probe.count_hit(int(m), d, balls[k])
                if got == HIT:
                    result = HIT
                    witness[t] = (int(m), "count", d)
                    break
                if got == UNKNOWN:
                    heuristic = True
            if result == MISS and (order.size > max_counts or not countable.all()):
                heuristic = True
            status[t] = result
    return status, witness, heuristic
