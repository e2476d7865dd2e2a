"""Normality via the spherical derivative, omitted values, Montel and
Fatou/Julia classification.

Marty sup estimates combine sampled values of |f'|/(1+|f|^2) with a
chordal lower bound: for samples a, b of a disk the chordal distance of
f(a), f(b) is at most 2 * sup * |a - b|, so chordal(f(a), f(b)) / (2|a - b|)
never overestimates the sup.  Points sent to infinity count as 0
(chordal convergence to infinity; meromorphic mode).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .family import Family
from .funcexpr import BoundaryHitError, NonConvergenceError, count_solutions_many
from .funcexpr.nodes import Compose, is_rational
from .orbits import _family
from .parallel import pmap
from .probe import MAX_COUNT_DEGREE, sph_values
from .funcexpr.roots import rational_degree_of
from .report import FAILS, HOLDS, INCONCLUSIVE, PRECONDITION, AnalysisReport
from .sets import CellSet, Region
from .sphere import as_point, chordal_distance

NORMAL = "normal-evidence"
NON_NORMAL = "non-normal"
UNDECIDED = "inconclusive"

THRESHOLD = 1e6
KAPPA = 0.25  # r * sup >= KAPPA: images may span half the sphere
SLOPE_TOL = 0.05
GRID = 41
SUP_CAP = 1e300
MODE_NOTE = "meromorphic mode: convergence to infinity counts (chordal metric)"


# ---------------------------------------------------------------- Marty profile


def disk_grid(z0: complex, r: float, n: int = GRID) -> np.ndarray:
    """Points of an n x n grid on the square about z0 lying in the closed disk."""
    t = np.linspace(-r, r, n)
    g = (t[None, :] + 1j * t[:, None]).reshape(-1)
    return z0 + g[np.abs(g) <= r * (1 + 1e-12)]


def growth_slope(sups: np.ndarray, index: np.ndarray) -> float:
    """Least-squares slope of log sup against log index (0 if all sups vanish)."""
    if np.all(sups <= 0) or sups.size < 2:
        return 0.0
    y = np.log(np.maximum(sups, 1e-300))
    x = np.log(index.astype(float))
    x = x - x.mean()
    den = float(np.dot(x, x))
    return float(np.dot(x, y - y.mean()) / den) if den > 0 else 0.0


@dataclass
class MartyProfile:
    z0: complex
    radius: float
    labels: list
    sups: np.ndarray
    slope: float
    errors: list = field(default_factory=list)

    @property
    def max_sup(self) -> float:
        return float(np.max(self.sups)) if self.sups.size else 0.0

    def to_json(self) -> dict:
        return {"z0": self.z0, "radius": self.radius, "labels": self.labels,
                "sups": self.sups.tolist(), "slope": self.slope, "errors": self.errors}


def marty_profile(spec, z0, radius: float, budget: int, grid: int = GRID) -> MartyProfile:
    if not radius > 0:
        raise ValueError("radius must be positive")
    z0 = as_point(z0)
    fam = _family(spec, budget)
    pts = disk_grid(z0, radius, grid)
    centre = int(np.argmin(np.abs(pts - z0)))
    sep = np.abs(pts - pts[centre])
    sep[centre] = np.inf
    sups = np.zeros(len(fam.members))
    errors = []
    for m, v, d in fam.stream(pts):
        bad = np.isnan(v) | np.isnan(d)
        if bad.any():
            errors.append(str(fam.members[m].label))
        s = sph_values(v, d)
        s = np.where(bad, 0.0, s)
        chord = np.nan_to_num(chordal_distance(v, v[centre]), nan=0.0) / (2 * sep)
        sups[m] = min(max(float(np.max(s)), float(np.max(chord))), SUP_CAP)
    index = np.array([mem.label.position for mem in fam.members])
    return MartyProfile(z0, float(radius), [str(mem.label) for mem in fam.members], sups,
                        growth_slope(sups, index), errors)


def classify(max_sups, slopes, radii, threshold: float = THRESHOLD) -> str:
    """Three-valued verdict from per-radius (max sup, growth slope)."""
    big = [(s >= threshold or r * s >= KAPPA) and k > 0 for s, k, r in zip(max_sups, slopes, radii)]
    if all(big):
        return NON_NORMAL
    if all(s < threshold and k <= SLOPE_TOL for s, k in zip(max_sups, slopes)):
        return NORMAL
    return UNDECIDED


@dataclass
class NormalityResult:
    verdict: str
    witnesses: list
    profiles: list

    @property
    def certified(self) -> bool:
        return self.verdict in (NORMAL, NON_NORMAL)


def is_normal_at(spec, z0, radii, budget: int, bound_threshold: float = THRESHOLD) -> NormalityResult:
    radii = [float(r) for r in radii]
    if not radii or any(b >= a for a, b in zip(radii, radii[1:])):
        raise ValueError("radii must be a nonempty decreasing list")
    fam = _family(spec, budget)
    profiles = [marty_profile(fam, z0, r, budget) for r in radii]
    verdict = classify([p.max_sup for p in profiles], [p.slope for p in profiles], radii,
                       bound_threshold)
    witnesses = []
    if verdict == NON_NORMAL:
        p = profiles[-1]
        top = np.argsort(-p.sups, kind="stable")[:5]
        witnesses = [p.labels[k] for k in sorted(top)]
    return NormalityResult(verdict, witnesses, profiles)


# ---------------------------------------------------------------- omitted values


def omitted_values(spec, domain_region: Region, codomain_region: Region, budget: int) -> CellSet:
    """Codomain cells (marked) that no member image of the domain net enters.

    Images of nine samples per domain cell mark cells as hit.  For
    rational members and a disk domain, remaining cells are also tested by
    counting solutions of f = centre in the domain disk.
    """
    from .orbits import cell_samples

    fam = _family(spec, budget)
    hit = np.zeros(len(codomain_region), dtype=bool)
    pts = cell_samples(domain_region).reshape(-1)
    pts = pts[domain_region.contains(pts)]
    if domain_region.shape == "disk":
        cx, cy, R = domain_region.params
        ring = complex(cx, cy) + R * np.exp(2j * np.pi * np.arange(256) / 256)
        pts = np.concatenate([pts, ring])
    for m, v, _ in fam.stream(pts, with_derivative=False):
        v = v[np.isfinite(v)]
        idx = codomain_region.cell_of(v)
        hit[idx[idx >= 0]] = True
    counted = domain_region.shape == "disk"
    if counted:
        cx, cy, R = domain_region.params
        centers = codomain_region.centers
        for mem in fam.members:
            todo = np.nonzero(~hit)[0]
            if todo.size == 0:
                break
            if not is_rational(mem.expr) or rational_degree_of(mem.expr) > MAX_COUNT_DEGREE:
                counted = False
                continue
            try:
                cnt = count_solutions_many(mem.expr, centers[todo], complex(cx, cy), R)
            except (BoundaryHitError, NonConvergenceError, ValueError):
                counted = False
                continue
            hit[todo[cnt > 0]] = True
    return CellSet(codomain_region, ~hit, meta={"budget": budget, "property": "omitted",
                                                "counts_used": counted})


def robust_omitted(cells: CellSet) -> np.ndarray:
    """Omitted cells whose grid neighbours are all omitted too."""
    out = np.zeros_like(cells.marks)
    for k, nb in enumerate(cells.region.neighbors):
        out[k] = cells.marks[k] and bool(cells.marks[nb].all())
    return out


def _spread_pick(points: np.ndarray, k: int) -> np.ndarray:
    """k points of ``points`` chosen greedily far apart (chordally)."""
    chosen = [0]
    for _ in range(k - 1):
        d = np.min(chordal_distance(points[:, None], points[chosen][None, :]), axis=1)
        chosen.append(int(np.argmax(d)))
    return points[chosen]


def montel_net(domain_region: Region, n: int = 25) -> tuple[np.ndarray, np.ndarray]:
    """n net points of the domain with radii keeping D(z, r) well inside."""
    c = domain_region.centers
    idx = np.unique(np.linspace(0, c.size - 1, n).round().astype(int))
    pts = c[idx]
    if domain_region.shape == "disk":
        cx, cy, R = domain_region.params
        room = R - np.abs(pts - complex(cx, cy))
    elif domain_region.shape == "rect":
        x0, y0, x1, y1 = domain_region.params
        room = np.minimum.reduce([pts.real - x0, x1 - pts.real, pts.imag - y0, y1 - pts.imag])
    else:
        room = np.full(pts.size, domain_region.cell_radius)
    radii = np.clip(room / 2, 1e-3, domain_region.cell_radius)
    return pts, radii


def montel_consistency(spec, domain_region: Region, codomain_region: Region, budget: int = 64,
                       bound: float = 1e3, net_points: int = 25, seed: int = 0) -> AnalysisReport:
    """Omitting three values (or local boundedness) must exclude non-normal points."""
    fam = _family(spec, budget)
    omitted = omitted_values(fam, domain_region, codomain_region, budget)
    robust = robust_omitted(omitted)
    three = None
    if robust.sum() >= 3:
        three = _spread_pick(codomain_region.centers[robust], 3)
    samples = disk_like_samples(domain_region)
    vals = fam.values(samples)
    with np.errstate(invalid="ignore"):
        mods = np.max(np.abs(vals), axis=1)
    sup_mod = float(np.max(mods)) if np.all(np.isfinite(mods)) else math.inf
    index = np.array([mem.label.position for mem in fam.members])
    # a finite family is always bounded; also require no growth along it
    growth = growth_slope(mods, index) if np.isfinite(sup_mod) else math.inf
    bounded = bool(sup_mod < bound and growth <= SLOPE_TOL)
    params = {"domain": domain_region.describe(), "codomain": codomain_region.describe(),
              "budget": budget, "bound": bound, "net_points": net_points}
    pre = {"omitted_cells": omitted.marked_count, "robust_omitted": int(robust.sum()),
           "three_values": [] if three is None else list(three), "locally_bounded": bounded,
           "sup_modulus": sup_mod, "modulus_growth": growth}
    pts, radii = montel_net(domain_region, net_points)
    if three is None and not bounded:
        centre = pts[len(pts) // 2]
        diag = is_normal_at(fam, centre, [float(radii[len(pts) // 2])], budget)
        return AnalysisReport("montel", PRECONDITION, params,
                              [pre | {"diagnostic_point": centre, "diagnostic_verdict": diag.verdict}],
                              ["no claim: fewer than three omitted values and not locally bounded",
                               MODE_NOTE], seed)
    verdicts = [is_normal_at(fam, z, [float(r)], budget).verdict for z, r in zip(pts, radii)]
    bad = [(z, v) for z, v in zip(pts, verdicts) if v == NON_NORMAL]
    wit = [pre | {"points": list(pts), "verdicts": verdicts}]
    if bad:
        return AnalysisReport("montel", FAILS, params, wit + [{"violations": bad}],
                              ["IMPLICATION VIOLATED: non-normal point despite the precondition",
                               MODE_NOTE], seed)
    return AnalysisReport("montel", HOLDS, params, wit, ["consistent", MODE_NOTE], seed)


def disk_like_samples(region: Region) -> np.ndarray:
    from .orbits import cell_samples

    pts = cell_samples(region).reshape(-1)
    return pts[region.contains(pts)]


# ---------------------------------------------------------------- Fatou / Julia


def window_region(window, pixels: int) -> Region:
    x0, y0, x1, y1 = window
    eps = max(x1 - x0, y1 - y0) / (pixels * math.sqrt(2.0))
    return Region.rect(x0, y0, x1, y1, eps)


STENCIL = np.concatenate([[0j], np.exp(2j * np.pi * np.arange(8) / 8)])


def _julia_stats(fam: Family, centers: np.ndarray, radius: float):
    """(max sup, growth slope) per centre on D(centre, radius) with the stencil."""
    P = centers.size
    pts = (centers[:, None] + radius * STENCIL[None, :]).reshape(-1)
    sep = radius * np.abs(STENCIL)
    sep[0] = np.inf
    smax = np.zeros(P)
    sx = sxx = 0.0
    sy = np.zeros(P)
    sxy = np.zeros(P)
    n = 0
    for m, v, d in fam.stream(pts):
        x = math.log(fam.members[m].label.position)
        v = v.reshape(P, -1)
        s = np.nan_to_num(sph_values(v, d.reshape(P, -1)), nan=0.0)
        chord = np.nan_to_num(chordal_distance(v, v[:, :1]), nan=0.0) / (2 * sep)
        sup = np.minimum(np.maximum(s.max(axis=1), chord.max(axis=1)), SUP_CAP)
        smax = np.maximum(smax, sup)
        y = np.log(np.maximum(sup, 1e-300))
        sx += x
        sxx += x * x
        sy += y
        sxy += x * y
        n += 1
    den = sxx - sx * sx / n if n else 0.0
    slope = (sxy - sx * sy / n) / den if n > 1 and den > 0 else np.zeros(P)
    return smax, slope


def fatou_julia(spec, window, pixels: int = 256, budget: int = 64, threshold: float = THRESHOLD,
                levels: int = 5) -> CellSet:
    """Per-pixel normality verdict; marked cells form J.

    Each pixel is tested on D(centre, r0), r0 the half-diagonal, with a
    nine-point stencil (centre and eight boundary points).  Pixels that
    are normal-evidence there stay in F: a sub-disk cannot have a larger
    sup.  The rest are refined on radii r0 / 2^k, k < ``levels``, and
    classified like is_normal_at.  J is non-normal plus inconclusive
    pixels, reported as its grid closure (J is closed).  The cell scalar
    is log10 of the Marty sup estimate at r0.
    """
    if pixels < 16:
        raise ValueError("pixels must be >= 16")
    region = window_region(window, pixels)
    fam = _family(spec, budget)
    centers = region.centers
    r0 = region.cell_radius
    step = 8192
    blocks = [centers[lo:lo + step] for lo in range(0, centers.size, step)]
    first = pmap(lambda c: _julia_stats(fam, c, r0), blocks)
    sup = np.concatenate([f[0] for f in first])
    slope = np.concatenate([f[1] for f in first])
    normal = (sup < threshold) & (slope <= SLOPE_TOL)
    non_normal = np.zeros_like(normal)
    todo = np.nonzero(~normal)[0]
    if todo.size:
        big = ((sup[todo] >= threshold) | (r0 * sup[todo] >= KAPPA)) & (slope[todo] > 0)
        for k in range(1, levels):
            r = r0 / 2.0 ** k
            s_k, sl_k = _julia_stats(fam, centers[todo], r)
            big &= ((s_k >= threshold) | (r * s_k >= KAPPA)) & (sl_k > 0)
        non_normal[todo] = big
    raw = ~normal
    cells = CellSet(region, raw)
    marks = cells.grid_closure()
    scalar = np.log10(np.maximum(sup, 1e-12))
    meta = {"window": list(map(float, window)), "pixels": pixels, "threshold": threshold,
            "budget": budget, "non_normal": int(non_normal.sum()),
            "inconclusive": int((raw & ~non_normal).sum()),
            "closure_filled": int((marks & ~raw).sum())}
    return CellSet(region, marks, scalar, meta)


def julia_sidecar(cells: CellSet) -> dict:
    m = cells.meta
    return {"window": m["window"], "pixels": m["pixels"], "threshold": m["threshold"],
            "budget": m["budget"], "marked_count": cells.marked_count}


# ---------------------------------------------------------------- Meyrath check


def weakly_mixing_equivalence_check(spec, z0, radii, net1, net2, eps: float, budget: int = 64,
                                    seed: int = 0) -> AnalysisReport:
    """non-normal at z0 <=> weakly mixing at z0, asserted when both are certified."""
    from .transitivity import is_weakly_mixing_at

    fam = _family(spec, budget)
    nres = is_normal_at(fam, z0, radii, budget)
    wm = is_weakly_mixing_at(fam, z0, radii, net1, net2, eps, budget, seed)
    params = {"z0": as_point(z0), "radii": list(map(float, radii)), "eps": eps, "budget": budget}
    wit = [{"normality": nres.verdict, "weakly_mixing": wm.verdict,
            "max_sups": [p.max_sup for p in nres.profiles],
            "slopes": [p.slope for p in nres.profiles]}]
    certified = nres.certified and wm.verdict in (HOLDS, FAILS)
    if not certified:
        return AnalysisReport("normal-iff-weakly-mixing", INCONCLUSIVE, params, wit,
                              ["exempt: a sub-verdict is not certified", MODE_NOTE], seed)
    agree = (nres.verdict == NON_NORMAL) == (wm.verdict == HOLDS)
    if agree:
        return AnalysisReport("normal-iff-weakly-mixing", HOLDS, params, wit, ["agree", MODE_NOTE], seed)
    return AnalysisReport("normal-iff-weakly-mixing", FAILS, params, wit,
                          ["EQUIVALENCE VIOLATED", MODE_NOTE], seed)
