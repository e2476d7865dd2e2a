"""Transitivity, minimality, density of preimages, weak mixing, expansion.

Open sets are modelled on nets: domain disks D(z, r) (a base point with a
radius, or a cell of a Region) and codomain chordal balls of radius
``eps`` about net points.  Every verdict is "at resolution".
"""
from __future__ import annotations

import logging

import numpy as np

from .family import Family, enumerate_members
from .funcexpr import (
    BoundaryHitError, DegreeError, NonConvergenceError, count_solutions_many, evaluate,
    preimages, to_text,
)
from .funcexpr.evaluate import degree, normalized_rational
from .funcexpr.nodes import Compose, is_rational
from .funcexpr.roots import rational_degree_of
from .orbits import _family, universal_points
from .probe import HIT, MAX_COUNT_DEGREE, MISS, DiskProbe, balls_for, resolve_pairs
from .report import (
    FAILS, HOLDS, HOLDS_HEURISTIC, INCONCLUSIVE, PAIRING_FAILED, PRECONDITION,
    AnalysisReport,
)
from .sets import PointSet, Region
from .sphere import as_point, chordal_ball, chordal_distance, format_point, inf_mask, is_inf

log = logging.getLogger(__name__)

RESOLUTION_NOTE = "open sets are modelled as net disks at the stated resolution; verdicts hold at (eps, budget) only"
PREIMAGE_CAP = 4096
PAIR_TOL = 1e-9


def net_points(net) -> np.ndarray:
    if isinstance(net, PointSet):
        return net.points
    if isinstance(net, Region):
        return net.centers
    return np.array([as_point(z) for z in np.atleast_1d(net)], dtype=complex)


def filter_wrt(targets: np.ndarray, B: Region | None, eps: float) -> np.ndarray:
    """Keep targets whose ball meets B (centre within ``eps`` of B)."""
    if B is None:
        return targets
    return targets[B.distance(targets) <= eps]


def _witness_dict(fam: Family, radius, target, wit) -> dict:
    m, kind, detail = wit
    mem = fam.members[m]
    out = {"radius": radius, "target": target, "member": str(mem.label),
           "position": mem.label.position, "kind": kind}
    if kind == "sample":
        out["point"] = detail
        out["image"] = complex(evaluate(mem.expr, detail))
    return out


def _base_params(**kw) -> dict:
    return {k: v for k, v in kw.items() if v is not None}


# ---------------------------------------------------------------- transitivity


def _transitive_on_disks(fam, centers, radii, targets, eps, stop_on_fail=True):
    """Shared loop over domain disks; returns (verdict, witnesses, notes)."""
    witnesses, notes = [], []
    heuristic_fail = False
    failures = []
    probe = None
    step = max(1, (1 << 21) // max(1, len(fam.members) * 57))
    for lo in range(0, len(centers), step):
        probe = DiskProbe(fam, centers[lo:lo + step], radii[lo:lo + step])
        for d in range(probe.n_disks):
            status, wit, heur = resolve_pairs(probe, d, targets, eps)
            for t in range(targets.size):
                if status[t] == HIT:
                    witnesses.append(_witness_dict(fam, float(radii[lo + d]), targets[t], wit[t])
                                     | {"base": centers[lo + d]})
            missed = np.nonzero(status != HIT)[0]
            if missed.size:
                t = int(missed[0])
                failures.append({"base": centers[lo + d], "radius": float(radii[lo + d]),
                                 "target": targets[t], "certified": not heur})
                heuristic_fail |= heur
                if stop_on_fail:
                    break
        if failures and stop_on_fail:
            break
    if failures:
        if heuristic_fail:
            notes.append("a pair had no witness, but some members could be neither excluded nor counted")
            return INCONCLUSIVE, failures, notes
        return FAILS, failures, notes
    return HOLDS, witnesses, notes


def is_transitive_at(spec, z0, radii, codomain_net, eps: float, B: Region | None = None,
                     budget: int = 256, seed: int = 0) -> AnalysisReport:
    radii = [float(r) for r in radii]
    if not radii:
        raise ValueError("radii must be nonempty")
    targets = filter_wrt(net_points(codomain_net), B, eps)
    if targets.size == 0:
        raise ValueError("codomain net is empty (after filtering by B)")
    fam = _family(spec, budget)
    z0 = as_point(z0)
    verdict, wits, notes = _transitive_on_disks(
        fam, np.full(len(radii), z0), np.array(radii), targets, eps)
    params = _base_params(z0=z0, radii=radii, eps=eps, budget=budget, targets=int(targets.size),
                          wrt=B.describe() if B else None)
    return AnalysisReport("transitive-at", verdict, params, wits, [RESOLUTION_NOTE] + notes, seed)


def is_transitive(spec, domain_region: Region, codomain_net, eps: float | None = None,
                  B: Region | None = None, budget: int = 256, seed: int = 0) -> AnalysisReport:
    eps = domain_region.eps if eps is None else eps
    targets = filter_wrt(net_points(codomain_net), B, eps)
    if targets.size == 0:
        raise ValueError("codomain net is empty (after filtering by B)")
    fam = _family(spec, budget)
    centers = domain_region.centers
    radii = np.full(centers.size, domain_region.cell_radius)
    verdict, wits, notes = _transitive_on_disks(fam, centers, radii, targets, eps)
    params = _base_params(domain=domain_region.describe(), eps=eps, budget=budget,
                          cells=int(centers.size), targets=int(targets.size),
                          wrt=B.describe() if B else None)
    return AnalysisReport("transitive", verdict, params, wits, [RESOLUTION_NOTE] + notes, seed)


def is_minimal(spec, domain_region: Region, target_net, budget: int, eps: float,
               seed: int = 0) -> AnalysisReport:
    """Every domain-net point universal (orbit within eps of every target)."""
    targets = net_points(target_net)
    cells = universal_points(spec, domain_region, PointSet(targets, merge_tol=0.0), budget, eps)
    params = _base_params(domain=domain_region.describe(), eps=eps, budget=budget,
                          cells=len(domain_region), targets=int(targets.size))
    notes = [RESOLUTION_NOTE]
    if cells.marks.all():
        return AnalysisReport("minimal", HOLDS, params,
                              [{"universal_cells": cells.marked_count}], notes, seed)
    k = int(np.nonzero(~cells.marks)[0][0])
    z = domain_region.centers[k]
    fam = _family(spec, budget)
    orbit = fam.values(np.array([z]))[:, 0]
    orbit = orbit[~np.isnan(orbit)]
    if orbit.size:
        gaps = chordal_distance(orbit[:, None], targets[None, :]).min(axis=0)
        t = int(np.argmax(gaps))
        miss = {"cell": k, "center": z, "target": targets[t], "distance": float(gaps[t]),
                "orbit_tail": orbit[-1]}
    else:
        miss = {"cell": k, "center": z, "orbit": "undefined"}
    return AnalysisReport("minimal", FAILS, params, [miss], notes, seed)


# ---------------------------------------------------------------- dense preimages


def _mobius_preimages(f, ws: np.ndarray):
    p, q = normalized_rational(f)
    p = np.pad(p, (0, 2 - min(2, p.size)))[:2]
    q = np.pad(q, (0, 2 - min(2, q.size)))[:2]
    with np.errstate(divide="ignore", invalid="ignore"):
        return (ws * q[0] - p[0]) / (p[1] - ws * q[1])


def _member_preimages(f, ws: np.ndarray, seed: int) -> np.ndarray:
    if not isinstance(f, Compose):
        p, q = normalized_rational(f)
        if max(degree(p), degree(q)) == 1:
            return _mobius_preimages(f, ws)
    out = []
    for w in ws:
        out.extend(z for z, _ in preimages(f, w, seed=seed))
    return np.array(out, dtype=complex)


def _v_net(w: complex, eps: float) -> np.ndarray:
    b = chordal_ball(w, eps)
    if b.outside:
        rho = b.r * 1.5 + 1.0
        return np.concatenate([[w], b.c + rho * np.exp(2j * np.pi * np.arange(6) / 6)])
    return np.concatenate([[w], b.c + 0.5 * b.r * np.exp(2j * np.pi * np.arange(6) / 6)])


def dense_preimage_test(spec, codomain_net, domain_region: Region, budget: int,
                        eps: float | None = None, seed: int = 0) -> AnalysisReport:
    """For every target ball V, preimages of a net of V meet every domain cell."""
    eps = domain_region.eps if eps is None else eps
    targets = net_points(codomain_net)
    fam = _family(spec, budget)
    params = _base_params(domain=domain_region.describe(), eps=eps, budget=budget,
                          targets=int(targets.size))
    notes = [RESOLUTION_NOTE]
    if not all(is_rational(m.expr) for m in fam.members):
        return _dense_sampled(fam, targets, domain_region, eps, params, notes, seed)
    ncell = len(domain_region)
    iterates = getattr(fam.spec, "kind", None) == "iterates"
    capped = False
    witnesses = []
    for t, w in enumerate(targets):
        hit = np.zeros(ncell, dtype=bool)
        vnet = _v_net(w, eps)
        if iterates:
            f = fam.members[0].expr
            current = vnet
            for m in range(len(fam.members)):
                if current.size * rational_degree_of(f) > PREIMAGE_CAP:
                    capped = True
                    break
                current = _member_preimages(f, current, seed)
                _mark(domain_region, current, hit)
                if hit.all():
                    break
        else:
            for mem in fam.members:
                try:
                    if rational_degree_of(mem.expr) * vnet.size > PREIMAGE_CAP:
                        capped = True
                        continue
                    pts = _member_preimages(mem.expr, vnet, seed)
                except (DegreeError, NonConvergenceError):
                    capped = True
                    continue
                _mark(domain_region, pts, hit)
                if hit.all():
                    break
        if not hit.all():
            k = int(np.nonzero(~hit)[0][0])
            if capped:
                notes.append(f"members with more than {PREIMAGE_CAP} preimages were skipped")
            return AnalysisReport("dense-preimage", FAILS, params,
                                  [{"target": w, "missed_cell": k,
                                    "cell_center": domain_region.centers[k],
                                    "cells_hit": int(hit.sum())}], notes, seed)
        witnesses.append({"target": w, "cells_hit": ncell})
    if capped:
        notes.append(f"members with more than {PREIMAGE_CAP} preimages were skipped")
    return AnalysisReport("dense-preimage", HOLDS, params, witnesses, notes, seed)


def _mark(region: Region, pts: np.ndarray, hit: np.ndarray) -> None:
    pts = pts[np.isfinite(pts)]
    if pts.size:
        idx = region.cell_of(pts)
        hit[idx[idx >= 0]] = True


def _dense_sampled(fam, targets, region, eps, params, notes, seed):
    """Fallback for non-rational members: sample each cell's disk."""
    notes = notes + ["non-rational members: sampled images only (heuristic)"]
    probe = DiskProbe(fam, region.centers, region.cell_radius)
    for t, w in enumerate(targets):
        for d in range(probe.n_disks):
            hits, _ = probe.sample_hits(d, np.array([w]), eps)
            if not hits.any():
                return AnalysisReport("dense-preimage", FAILS, params,
                                      [{"target": w, "missed_cell": d,
                                        "cell_center": region.centers[d]}], notes, seed)
    return AnalysisReport("dense-preimage", HOLDS_HEURISTIC, params, [], notes, seed)


# ---------------------------------------------------------------- weak mixing


def _hit_table(probe: DiskProbe, d: int, targets: np.ndarray, eps: float):
    """(M, T) array of HIT/MISS/UNKNOWN from samples and bounds; counts lazily."""
    hits, _ = probe.sample_hits(d, targets, eps)
    balls = balls_for(targets, eps)
    excl = probe.excluded(d, balls)
    table = np.where(hits, HIT, np.where(excl, MISS, -1))
    return table, balls


def is_weakly_mixing_at(spec, z0, radii, net1, net2, eps: float, budget: int = 256,
                        seed: int = 0, max_counts: int = 64) -> AnalysisReport:
    """For every radius and pair (V1, V2), one member meets both from D(z0, r)."""
    radii = [float(r) for r in radii]
    t1, t2 = net_points(net1), net_points(net2)
    if t1.size == 0 or t2.size == 0:
        raise ValueError("both codomain nets must be nonempty")
    fam = _family(spec, budget)
    z0 = as_point(z0)
    probe = DiskProbe(fam, np.full(len(radii), z0), radii)
    params = _base_params(z0=z0, radii=radii, eps=eps, budget=budget,
                          net1=int(t1.size), net2=int(t2.size))
    notes = [RESOLUTION_NOTE]
    witnesses = []
    uncertain = False
    for d, r in enumerate(radii):
        a, balls1 = _hit_table(probe, d, t1, eps)
        b, balls2 = _hit_table(probe, d, t2, eps)

        def resolve(table, balls, m, t):
            if table[m, t] == -1:
                table[m, t] = probe.count_hit(m, d, balls[t])
            return table[m, t]

        for i in range(t1.size):
            for j in range(t2.size):
                both = np.nonzero((a[:, i] == HIT) & (b[:, j] == HIT))[0]
                found = int(both[0]) if both.size else None
                if found is None:
                    cand = np.nonzero((a[:, i] != MISS) & (b[:, j] != MISS))[0]
                    tried = 0
                    for m in cand[::-1]:
                        if tried >= max_counts:
                            uncertain = True
                            break
                        tried += 1
                        if resolve(a, balls1, m, i) == HIT and resolve(b, balls2, m, j) == HIT:
                            found = int(m)
                            break
                        if a[m, i] == -1 or b[m, j] == -1:
                            uncertain = True
                if found is None:
                    fail = {"radius": r, "V1": t1[i], "V2": t2[j]}
                    if uncertain:
                        notes.append("some members could be neither excluded nor counted")
                        return AnalysisReport("weakly-mixing-at", INCONCLUSIVE, params, [fail], notes, seed)
                    return AnalysisReport("weakly-mixing-at", FAILS, params, [fail], notes, seed)
                witnesses.append({"radius": r, "V1": t1[i], "V2": t2[j],
                                  "member": str(fam.members[found].label),
                                  "position": fam.members[found].label.position})
    return AnalysisReport("weakly-mixing-at", HOLDS, params, witnesses, notes, seed)


# ---------------------------------------------------------------- expanding


def is_expanding_at(spec, z0, K, E=(), radii=(0.1,), budget: int = 256, Q: int = 3,
                    seed: int = 0) -> AnalysisReport:
    """For every radius, at least Q members cover every K point from D(z0, r).

    Members are scanned from the end of the enumeration backwards, since
    the property concerns infinitely many members.
    """
    radii = [float(r) for r in radii]
    kpts = net_points(K)
    epts = np.array([as_point(e) for e in E], dtype=complex)
    if kpts.size == 0:
        raise ValueError("K must be nonempty")
    if epts.size and np.min(chordal_distance(kpts[:, None], epts[None, :])) <= 1e-9:
        raise ValueError("K must be disjoint from E")
    fam = _family(spec, budget)
    z0 = as_point(z0)
    probe = DiskProbe(fam, np.full(len(radii), z0), radii)
    params = _base_params(z0=z0, radii=radii, budget=budget, Q=Q, K=int(kpts.size),
                          E=[format_point(e) for e in epts])
    notes = [RESOLUTION_NOTE]
    finite_k = kpts[~inf_mask(kpts)]
    witnesses = []
    heuristic = False
    for d, r in enumerate(radii):
        found = []
        fc, R = probe.fc[:, d], probe.bound[:, d]
        for m in range(len(fam.members) - 1, -1, -1):
            if np.isfinite(R[m]) and not is_inf(fc[m]):
                if finite_k.size < kpts.size or np.any(np.abs(finite_k - fc[m]) >= R[m]):
                    continue
            mem = fam.members[m]
            if not probe.rational[m] or probe.degree(m) > MAX_COUNT_DEGREE:
                heuristic = True
                continue
            try:
                counts = count_solutions_many(mem.expr, finite_k, z0, r)
            except (BoundaryHitError, NonConvergenceError, ValueError):
                heuristic = True
                continue
            if np.all(counts >= 1):
                found.append(str(mem.label))
                if len(found) >= Q:
                    break
        if len(found) < Q:
            verdict = INCONCLUSIVE if heuristic else FAILS
            return AnalysisReport("expanding-at", verdict, params,
                                  [{"radius": r, "covering_members": found}], notes, seed)
        witnesses.append({"radius": r, "covering_members": found})
    return AnalysisReport("expanding-at", HOLDS, params, witnesses, notes, seed)


def expanding_implies_transitive_check(spec, z0, K, E, radii, codomain_net, eps: float,
                                       budget: int = 256, Q: int = 3, seed: int = 0) -> AnalysisReport:
    """Expanding at z0 w.r.t. the complement of E, then transitive there."""
    exp = is_expanding_at(spec, z0, K, E, radii, budget, Q, seed)
    params = {"z0": as_point(z0), "E": [format_point(as_point(e)) for e in E],
              "radii": list(radii), "eps": eps, "budget": budget}
    if exp.verdict != HOLDS:
        return AnalysisReport("expanding-implies-transitive", PRECONDITION, params,
                              [{"expanding": exp.verdict}], ["no claim: expanding not established"], seed)
    targets = net_points(codomain_net)
    epts = np.array([as_point(e) for e in E], dtype=complex)
    if epts.size:
        keep = np.min(chordal_distance(targets[:, None], epts[None, :]), axis=1) > 2 * eps
        targets = targets[keep]
    tr = is_transitive_at(spec, z0, radii, targets, eps, None, budget, seed)
    wit = [{"expanding": exp.verdict, "transitive": tr.verdict,
            "expanding_witnesses": exp.witnesses}]
    if tr.verdict == HOLDS:
        return AnalysisReport("expanding-implies-transitive", HOLDS, params, wit,
                              ["implication confirmed at resolution"], seed)
    note = "IMPLICATION VIOLATED" if tr.verdict == FAILS else "transitivity inconclusive"
    return AnalysisReport("expanding-implies-transitive",
                          FAILS if tr.verdict == FAILS else INCONCLUSIVE, params, wit, [note], seed)


# ---------------------------------------------------------------- witnesses and transfer


def compact_transitive_witness(spec, z0, U, V, budget: int, eps: float):
    """(label, f(z0)) with chordal(f(z0), V centre) <= V radius + eps, or None.

    ``U`` and ``V`` are (centre, radius) pairs; z0 must lie in U.
    """
    uc, ur = as_point(U[0]), float(U[1])
    vc, vr = as_point(V[0]), float(V[1])
    z0 = as_point(z0)
    if is_inf(z0) or abs(z0 - uc) >= ur:
        raise ValueError("z0 must lie in U")
    fam = _family(spec, budget)
    vals = fam.values(np.array([z0]))[:, 0]
    d = np.nan_to_num(chordal_distance(vals, vc), nan=3.0)
    ok = np.nonzero(d <= vr + eps)[0]
    if ok.size == 0:
        return None
    m = int(ok[0])
    return str(fam.members[m].label), complex(vals[m])


def _probe_grid(z0: complex, r: float, n: int = 9) -> np.ndarray:
    t = np.linspace(-r, r, n)
    g = (t[:, None] + 1j * t[None, :]).reshape(-1)
    return z0 + g[np.abs(g) <= r]


def transitivity_transfer_check(specF, specG, mode: str, z0, radii, codomain_net, eps: float,
                                budget: int = 256, pair_eps: float | None = None,
                                seed: int = 0) -> AnalysisReport:
    """Transfer transitivity at z0 from F to G through a member pairing."""
    if mode not in ("agreement", "proximity"):
        raise ValueError("mode must be 'agreement' or 'proximity'")
    z0 = as_point(z0)
    params = {"mode": mode, "z0": z0, "radii": list(radii), "eps": eps, "budget": budget}
    if mode == "proximity":
        if pair_eps is None:
            raise ValueError("proximity mode needs pair_eps")
        params["pair_eps"] = pair_eps
    rf = is_transitive_at(specF, z0, radii, codomain_net, eps, None, budget, seed)
    if rf.verdict != HOLDS:
        return AnalysisReport("transitivity-transfer", PRECONDITION, params,
                              [{"F": rf.verdict}], ["no claim: F not transitive at z0"], seed)
    F = _family(specF, budget)
    G = _family(specG, budget)
    if mode == "agreement":
        fv = F.values(np.array([z0]))[:, 0]
        gv = G.values(np.array([z0]))[:, 0]
        dist = np.abs(fv[:, None] - gv[None, :])
        bound = PAIR_TOL
    else:
        grid = _probe_grid(z0, max(radii))
        fv = F.values(grid)
        gv = G.values(grid)
        dist = np.max(np.abs(fv[:, None, :] - gv[None, :, :]), axis=2)
        bound = pair_eps
    dist = np.nan_to_num(dist, nan=np.inf)
    table = []
    for i, mem in enumerate(F.members):
        j = int(np.argmin(dist[i]))
        if not dist[i, j] < bound:
            return AnalysisReport("transitivity-transfer", PAIRING_FAILED, params,
                                  [{"unpaired": str(mem.label), "best": float(dist[i, j])}],
                                  ["no claim: pairing failed"], seed)
        table.append([str(mem.label), str(G.members[j].label), float(dist[i, j])])
    rg = is_transitive_at(specG, z0, radii, codomain_net, eps, None, budget, seed)
    wit = [{"pairing": table, "F": rf.verdict, "G": rg.verdict}]
    if rg.verdict == HOLDS:
        return AnalysisReport("transitivity-transfer", HOLDS, params, wit,
                              ["G transitive at the same resolution"], seed)
    note = "IMPLICATION VIOLATED" if rg.verdict == FAILS else "G inconclusive"
    return AnalysisReport("transitivity-transfer", FAILS if rg.verdict == FAILS else INCONCLUSIVE,
                          params, wit, [note], seed)


def closure_contains(spec, target, compact_samples, eps: float, budget: int):
    """(True, label) if some member is within chordal eps of ``target``
    at every sample point, else (False, None)."""
    from .funcexpr import as_expr, values

    pts = net_points(compact_samples)
    tv = values(as_expr(target), pts)
    fam = _family(spec, budget)
    for m, v, _ in fam.stream(pts, with_derivative=False):
        d = np.nan_to_num(chordal_distance(v, tv), nan=3.0)
        if np.max(d) <= eps:
            return True, str(fam.members[m].label)
    return False, None
