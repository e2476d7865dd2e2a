"""Orbits, limit sets, invariance, non-wandering and universal points."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .family import Family, FamilySpec, enumerate_members
from .funcexpr import EvaluationError, NotRationalError, evaluate, preimages
from .funcexpr.nodes import is_rational
from .parallel import pmap
from .probe import HIT, MAX_COUNT_DEGREE, MISS, UNKNOWN, DiskProbe, _probe_targets
from .funcexpr import count_solutions_many, BoundaryHitError, NonConvergenceError
from .sets import CellSet, PointSet, Region
from .sphere import INF, ChordalBall, as_point, chordal_distance, inf_mask, is_inf

log = logging.getLogger(__name__)

NONWANDERING = "nonwandering"
WANDERING = "wandering-at-resolution"
INCONCLUSIVE = "inconclusive"


class MemberEvaluationError(EvaluationError):
    """Evaluation of a specific member failed."""

    def __init__(self, label, cause):
        super().__init__(f"member {label}: {cause}")
        self.label = str(label)
        self.cause = cause


def _family(spec, budget) -> Family:
    return spec if isinstance(spec, Family) else Family(spec, budget)


def orbit_values(spec, z0, budget: int, strict: bool = True):
    """(family, values) of the first ``budget`` members at ``z0``.

    Array evaluation first; NaN entries are retried on the scalar path
    (limits, L'Hopital).  With ``strict`` an unresolved member raises
    MemberEvaluationError, otherwise it stays NaN.
    """
    if budget < 1:
        raise ValueError("budget must be >= 1")
    fam = _family(spec, budget)
    z0 = as_point(z0)
    vals = fam.values(np.array([z0]))[:, 0]
    for m in np.nonzero(np.isnan(vals))[0]:
        mem = fam.members[m]
        try:
            vals[m] = evaluate(mem.expr, z0)
        except (EvaluationError, ZeroDivisionError, OverflowError) as exc:
            if strict:
                raise MemberEvaluationError(mem.label, exc) from exc
    return fam, vals


def orbit_set(spec, z0, budget: int) -> PointSet:
    fam, vals = orbit_values(spec, z0, budget)
    return PointSet(vals, fam.labels)


# ---------------------------------------------------------------- omega limits


def to_sphere(z: np.ndarray) -> np.ndarray:
    """Stereographic lift to the unit sphere (infinity is the north pole)."""
    z = np.asarray(z, dtype=complex)
    out = np.empty(z.shape + (3,))
    infm = inf_mask(z)
    zz = np.where(infm, 0, z)
    s = 1.0 + np.abs(zz) ** 2
    out[..., 0] = 2 * zz.real / s
    out[..., 1] = 2 * zz.imag / s
    out[..., 2] = (np.abs(zz) ** 2 - 1) / s
    out[infm] = (0.0, 0.0, 1.0)
    return out


def from_sphere(p: np.ndarray) -> complex:
    x, y, h = p / np.linalg.norm(p)
    if h > 1 - 1e-15:
        return INF
    return complex(x, y) / (1 - h)


def omega_limit(spec, z0, budget: int, cluster_eps: float, min_hits: int = 3) -> PointSet:
    """Cluster points of the orbit tail (last half of the enumeration).

    Leaders are chosen greedily in enumeration order (a tail point farther
    than ``cluster_eps`` from every leader starts a new one).  A leader's
    cluster is every tail point within ``cluster_eps`` of it; clusters
    with at least ``min_hits`` points contribute their spherical centroid.
    Members that fail to evaluate are skipped.
    """
    if budget < 16:
        raise ValueError("omega_limit needs budget >= 16")
    fam, vals = orbit_values(spec, z0, budget, strict=False)
    tail = vals[budget // 2:]
    labels = fam.labels[budget // 2:]
    keep = ~np.isnan(tail)
    tail = tail[keep]
    labels = [lab for lab, k in zip(labels, keep) if k]
    out = PointSet(merge_tol=min(1e-12, cluster_eps))
    if tail.size == 0:
        return out
    leaders: list[int] = []
    for i in range(tail.size):
        if not leaders or np.min(chordal_distance(tail[leaders], tail[i])) > cluster_eps:
            leaders.append(i)
    lifted = to_sphere(tail)
    for i in leaders:
        members = chordal_distance(tail, tail[i]) <= cluster_eps
        if members.sum() >= min_hits:
            out.add(from_sphere(lifted[members].mean(axis=0)), labels[i])
    return out


# ---------------------------------------------------------------- invariance


def _as_pointset(S) -> PointSet:
    if isinstance(S, PointSet):
        return S
    if isinstance(S, Region):
        S = S.centers
    return PointSet([as_point(z) for z in np.atleast_1d(S)])


def is_forward_invariant(spec, S, budget: int, tol: float):
    """(invariant, witness) with witness = (label, point, image) on failure."""
    S = _as_pointset(S)
    if len(S) == 0:
        raise ValueError("S must be nonempty")
    fam = _family(spec, budget)
    pts = S.points
    vals = fam.values(pts)
    for m, mem in enumerate(fam.members):
        for k, z in enumerate(pts):
            img = vals[m, k]
            if np.isnan(img):
                try:
                    img = evaluate(mem.expr, z)
                except EvaluationError as exc:
                    raise MemberEvaluationError(mem.label, exc) from exc
            if np.min(chordal_distance(pts, img)) > tol:
                return False, (str(mem.label), complex(z), complex(img))
    return True, None


def is_backward_invariant(spec, S, budget: int, tol: float, seed: int = 0):
    """(invariant, witness) with witness = (label, point, preimage list)."""
    S = _as_pointset(S)
    if len(S) == 0:
        raise ValueError("S must be nonempty")
    members = _family(spec, budget).members
    for mem in members:
        if not is_rational(mem.expr):
            raise NotRationalError(f"member {mem.label} is not rational")
    pts = S.points
    for mem in members:
        for z in pts:
            pre = preimages(mem.expr, z, seed=seed)
            for p, _ in pre:
                if np.min(chordal_distance(pts, p)) > tol:
                    return False, (str(mem.label), complex(z), [complex(q) for q, _ in pre])
    return True, None


# ---------------------------------------------------------------- non-wandering


@dataclass
class WanderingResult:
    verdict: str
    witnesses: list = field(default_factory=list)  # (radius, label, kind, point-or-None)
    heuristic: bool = False

    @property
    def nonwandering(self) -> bool:
        return self.verdict == NONWANDERING


def _self_hit(probe: DiskProbe, d: int, max_counts: int = 64):
    """Does some member map disk ``d`` onto something meeting itself?

    Returns (status, witness, heuristic).
    """
    c, r = probe.centers[d], probe.radii[d]
    imgs = probe.vals[:, d, :]
    with np.errstate(invalid="ignore"):
        inside = np.abs(np.where(np.isfinite(imgs), imgs, np.inf) - c) < r
    rows = np.nonzero(inside.any(axis=1))[0]
    if rows.size:
        m = int(rows[0])
        s = int(inside[m].argmax())
        return HIT, (m, "sample", complex(probe.points[d, s])), False
    fc, R = probe.fc[:, d], probe.bound[:, d]
    with np.errstate(invalid="ignore"):
        live = ~(np.isfinite(R) & (np.abs(np.where(np.isfinite(fc), fc, 0) - c) >= R + r))
    idx = np.nonzero(live)[0]
    if idx.size == 0:
        return MISS, None, False
    heuristic = False
    gap = np.abs(np.nan_to_num(fc[idx], nan=1e300, posinf=1e300) - c)
    ball = ChordalBall(c, r, False)
    order = idx[np.argsort(gap, kind="stable")]
    countable = np.array([probe.countable(int(m)) for m in order], dtype=bool)
    heuristic = not countable.all()
    for m in order[countable][:max_counts]:
        ws = _probe_targets(ball, fc[m])
        try:
            cnt = count_solutions_many(probe.family.members[m].expr, ws, c, r)
        except (BoundaryHitError, NonConvergenceError, ValueError):
            heuristic = True
            continue
        if np.any(cnt > 0):
            return HIT, (int(m), "count", complex(ws[int(np.argmax(cnt > 0))])), False
    if idx.size > max_counts:
        heuristic = True
    return MISS, None, heuristic


def is_nonwandering(spec, z0, radii, budget: int) -> WanderingResult:
    radii = [float(r) for r in radii]
    if not radii:
        raise ValueError("radii must be nonempty")
    fam = _family(spec, budget)
    z0 = as_point(z0)
    probe = DiskProbe(fam, np.full(len(radii), z0), radii)
    witnesses, heuristic = [], False
    for d, r in enumerate(radii):
        status, wit, heur = _self_hit(probe, d)
        heuristic |= heur
        if status != HIT:
            verdict = INCONCLUSIVE if heur and not probe.rational.any() else WANDERING
            return WanderingResult(verdict, witnesses, heuristic)
        m, kind, pt = wit
        witnesses.append((r, str(fam.members[m].label), kind, pt))
    return WanderingResult(NONWANDERING, witnesses, heuristic)


def nonwandering_set(spec, region: Region, budget: int) -> CellSet:
    """Cells whose disk D(centre, cell radius) is non-wandering at ``budget``."""
    fam = _family(spec, budget)
    centers = region.centers
    r = region.cell_radius

    def work(chunk):
        probe = DiskProbe(fam, centers[chunk], r)
        return [_self_hit(probe, d)[0] == HIT for d in range(len(chunk))]

    chunks = _chunks(len(centers), fam)
    marks = np.concatenate([np.array(x, dtype=bool) for x in pmap(work, chunks)]) if chunks else np.zeros(0, bool)
    return CellSet(region, marks, meta={"budget": budget, "property": "nonwandering"})


def _chunks(n: int, fam: Family, per: int = 1 << 21) -> list[np.ndarray]:
    size = max(1, per // max(1, len(fam.members) * 57))
    return [np.arange(lo, min(n, lo + size)) for lo in range(0, n, size)]


# ---------------------------------------------------------------- universality


def universal_points(spec, domain_region: Region, target_net, budget: int, eps: float) -> CellSet:
    """Cells whose centre's orbit comes within chordal ``eps`` of every target."""
    targets = _as_pointset(target_net).points
    if targets.size == 0:
        raise ValueError("target net must be nonempty")
    fam = _family(spec, budget)
    centers = domain_region.centers
    marks = np.zeros(centers.size, dtype=bool)
    step = max(1, (1 << 22) // max(1, len(fam.members) * targets.size))
    for lo in range(0, centers.size, step):
        vals = fam.values(centers[lo:lo + step])  # (M, C)
        for j in range(vals.shape[1]):
            orbit = vals[:, j]
            orbit = orbit[~np.isnan(orbit)]
            if orbit.size == 0:
                continue
            dist = chordal_distance(orbit[:, None], targets[None, :])
            marks[lo + j] = bool(np.all(dist.min(axis=0) <= eps))
    return CellSet(domain_region, marks, meta={"budget": budget, "property": "universal"})


# ---------------------------------------------------------------- invariant hulls


def cell_samples(region: Region) -> np.ndarray:
    """(cells, 9) sample points covering each cell (centre, edges, corners)."""
    c = region.centers
    if region.shape == "circle":
        cx, cy, R = region.params
        n = len(region)
        base = np.angle(c - complex(cx, cy))
        offs = np.linspace(-0.499, 0.499, 9) * (2 * np.pi / n)
        return complex(cx, cy) + R * np.exp(1j * (base[:, None] + offs[None, :]))
    hx, hy = region._grid["step"]
    u = np.array([0, -1, 1, 0, 0, -1, -1, 1, 1]) * 0.499 * hx
    v = np.array([0, 0, 0, -1, 1, -1, 1, -1, 1]) * 0.499 * hy
    return c[:, None] + (u + 1j * v)[None, :]


@dataclass
class HullResult:
    cells: CellSet
    proper: bool
    saturated: bool
    escaped: bool
    rounds: int

    def flags(self) -> list[str]:
        out = ["proper" if self.proper else "saturated"]
        if self.escaped:
            out.append("escaped")
        return out


def forward_invariant_hull(spec, seed_cells: CellSet, region: Region, budget: int,
                           max_rounds: int = 10_000) -> HullResult:
    """Close the seed under "apply every member, mark the containing cell".

    Member images are taken of nine sample points per cell so that
    expanding maps spread arcs, not just centres.  Images leaving the
    region set the ``escaped`` flag.  "Proper" means some cell stayed
    unmarked; it is evidence at this resolution, not a proof.
    """
    if seed_cells.marked_count == 0:
        raise ValueError("seed must be nonempty")
    if seed_cells.region != region:
        seed_idx = region.cell_of(seed_cells.marked_centers)
        marks = np.zeros(len(region), dtype=bool)
        marks[seed_idx[seed_idx >= 0]] = True
    else:
        marks = seed_cells.marks.copy()
    fam = _family(spec, budget)
    samples = cell_samples(region)
    frontier = np.nonzero(marks)[0]
    escaped = False
    rounds = 0
    while frontier.size and rounds < max_rounds and not marks.all():
        rounds += 1
        pts = samples[frontier].reshape(-1)
        vals = fam.values(pts).reshape(-1)
        vals = vals[~np.isnan(vals)]
        idx = region.cell_of(vals)
        escaped |= bool(np.any(idx < 0))
        new = np.unique(idx[idx >= 0])
        new = new[~marks[new]]
        marks[new] = True
        frontier = new
    saturated = bool(marks.all())
    cells = CellSet(region, marks, meta={"budget": budget, "escaped": escaped, "rounds": rounds})
    return HullResult(cells, proper=not saturated, saturated=saturated or escaped,
                      escaped=escaped, rounds=rounds)
