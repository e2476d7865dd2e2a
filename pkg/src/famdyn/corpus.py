"""Curated families and the theorem-assertion suite run over them.

Each corpus entry is a JSON file under ``famdyn/data`` holding a family
spec, its domain and codomain regions, expected verdicts and the knobs
for every check.  :func:`run_corpus` turns each check into an
AnalysisReport asserting a theorem or a closedness property; a report
whose verdict is ``fails-at-resolution`` is an assertion failure.
Single-property verdicts appear inside the witnesses of the reports
that compare them.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .family import FamilySpec
from .funcexpr.nodes import is_rational
from .normality import (
    MODE_NOTE, NON_NORMAL, fatou_julia, julia_sidecar, marty_profile, montel_consistency,
    weakly_mixing_equivalence_check,
)
from .orbits import is_forward_invariant, nonwandering_set, omega_limit, orbit_values, universal_points
from .report import FAILS, HOLDS, INCONCLUSIVE, AnalysisReport
from .sets import PointSet, Region
from .sphere import as_point
from .transitivity import (
    dense_preimage_test, expanding_implies_transitive_check, is_minimal, is_transitive,
)

NAMES = ("powers", "powersplus1", "ntimesz", "rotations", "translations", "sq", "sqm1", "exp")


@dataclass
class CorpusEntry:
    name: str
    spec: FamilySpec
    data: dict

    @property
    def eps(self) -> float:
        return float(self.data["eps"])

    @property
    def budget(self) -> int:
        return int(self.data["budget"])

    def region(self, key: str, eps: float | None = None) -> Region:
        return Region.parse(self.data[key], self.eps if eps is None else eps)

    @property
    def rational(self) -> bool:
        spec = self.spec
        exprs = [spec.expr] if spec.expr is not None else list(spec.generators or spec.members)
        return all(is_rational(e) for e in exprs)


def data_path(name: str) -> Path:
    return Path(str(resources.files("famdyn") / "data" / f"{name}.json"))


def load_entry(name_or_path) -> CorpusEntry:
    """A corpus entry by bundled name or by file path."""
    p = Path(name_or_path)
    if not p.exists():
        if str(name_or_path) not in NAMES:
            raise FileNotFoundError(f"no corpus entry or file {name_or_path!r}")
        p = data_path(str(name_or_path))
    data = json.loads(p.read_text(encoding="utf-8"))
    return CorpusEntry(data["name"], FamilySpec.from_json(data["family"]), data)


def load_family(path) -> FamilySpec:
    """A family spec from a plain spec file, a corpus entry file or a bundled name."""
    p = Path(path)
    if not p.exists() and str(path) in NAMES:
        return load_entry(str(path)).spec
    data = json.loads(p.read_text(encoding="utf-8"))
    if "family" in data:
        data = data["family"]
    return FamilySpec.from_json(data)


# ---------------------------------------------------------------- checks


def _agreement(prop: str, a: AnalysisReport, b: AnalysisReport, params: dict, seed: int,
               labels=("first", "second")) -> AnalysisReport:
    """Equal verdicts hold; certified opposite verdicts fail; anything else is inconclusive."""
    wit = [{labels[0]: a.verdict, labels[1]: b.verdict},
           {labels[0]: a.witnesses[:1], labels[1]: b.witnesses[:1]}]
    if a.verdict == b.verdict:
        return AnalysisReport(prop, HOLDS, params, wit, ["verdicts agree"], seed)
    if a.certified and b.certified:
        return AnalysisReport(prop, FAILS, params, wit, ["EQUIVALENCE VIOLATED"], seed)
    return AnalysisReport(prop, INCONCLUSIVE, params, wit,
                          ["exempt: a verdict is not certified at this resolution"], seed)


def _expected(entry: CorpusEntry, key: str, got: AnalysisReport, seed: int) -> AnalysisReport:
    want = entry.data.get("expected", {}).get(key)
    params = {"family": entry.name, "check": key}
    wit = [{"expected": want, "got": got.verdict}]
    if want is None or got.verdict == want:
        return AnalysisReport(f"expected-{key}", HOLDS, params, wit, [], seed)
    if got.certified:
        return AnalysisReport(f"expected-{key}", FAILS, params, wit, ["unexpected certified verdict"], seed)
    return AnalysisReport(f"expected-{key}", INCONCLUSIVE, params, wit,
                          ["not certified at this resolution"], seed)


def _closed(prop: str, cells, params: dict, seed: int) -> AnalysisReport:
    bad = cells.closure_violations()
    wit = [{"marked": cells.marked_count, "cells": len(cells.region), "violations": bad[:20]}]
    verdict = HOLDS if not bad else FAILS
    return AnalysisReport(prop, verdict, params, wit, ["grid-closed" if not bad else "not grid-closed"], seed)


def check_ttm(entry: CorpusEntry, seed: int = 0) -> list[AnalysisReport]:
    dom, cod = entry.region("domain"), entry.region("codomain")
    tr = is_transitive(entry.spec, dom, cod, entry.eps, budget=entry.budget, seed=seed)
    mi = is_minimal(entry.spec, dom, cod, entry.budget, entry.eps, seed)
    params = {"family": entry.name, "domain": entry.data["domain"], "codomain": entry.data["codomain"],
              "eps": entry.eps, "budget": entry.budget}
    out = [_agreement("transitive-iff-minimal", tr, mi, params, seed, ("transitive", "minimal")),
           _expected(entry, "transitive", tr, seed), _expected(entry, "minimal", mi, seed)]
    if entry.rational:
        dp = dense_preimage_test(entry.spec, cod, dom, entry.budget, entry.eps, seed)
        out += [_agreement("dense-preimage-iff-transitive", dp, tr, params, seed,
                               ("dense_preimage", "transitive")),
                _expected(entry, "dense_preimage", dp, seed)]
    return out


def check_omega(entry: CorpusEntry, seed: int = 0) -> list[AnalysisReport]:
    o = entry.data["omega"]
    z0, ceps, budget = as_point(o["z0"]), float(o["cluster_eps"]), int(o["budget"])
    om = omega_limit(entry.spec, z0, budget, ceps)
    params = {"family": entry.name, "z0": z0, "cluster_eps": ceps, "budget": budget}
    _, vals = orbit_values(entry.spec, z0, budget, strict=False)
    orbit = PointSet(vals[~np.isnan(vals)])
    far = [p for p in om.points if orbit.distance_to(p) > 2 * ceps]
    inside = AnalysisReport("omega-in-orbit-closure", HOLDS if not far else FAILS, params,
                            [{"omega": om, "outside": far}], [], seed)
    raster = om.rasterize(max(ceps, 0.01))
    out = [inside, _closed("omega-grid-closed", raster, params, seed)]
    want = o.get("forward_invariant", True if entry.spec.kind == "iterates" else None)
    if want is not None and len(om):
        ok, wit = is_forward_invariant(entry.spec, om.points, 8, 1e-6 + 2 * ceps)
        detail = [] if ok else [{"member": wit[0], "point": wit[1], "image": wit[2]}]
        note = "iterates are composition-closed" if want else "family is not composition-closed"
        out.append(AnalysisReport("omega-forward-invariance", HOLDS if ok == want else FAILS,
                                  params | {"expected": want}, detail, [note], seed))
    return out


def check_sets(entry: CorpusEntry, seed: int = 0) -> list[AnalysisReport]:
    nw = entry.data["nonwandering"]
    region = Region.parse(nw["region"], float(nw["eps"]))
    cells = nonwandering_set(entry.spec, region, int(nw["budget"]))
    out = [_closed("nonwandering-grid-closed", cells,
                   {"family": entry.name, "region": nw["region"], "budget": nw["budget"]}, seed)]
    u = entry.data["universal"]
    ueps = float(u["eps"])
    ureg = Region.parse(u["region"], ueps)
    ucells = universal_points(entry.spec, ureg, Region.parse(u["net"], ueps), int(u["budget"]), ueps)
    params = {"family": entry.name, "region": u["region"], "net": u["net"], "budget": u["budget"]}
    out.append(_closed("universal-grid-closed", ucells, params, seed))
    return out


def check_points(entry: CorpusEntry, seed: int = 0) -> list[AnalysisReport]:
    out = []
    for p in entry.data.get("points", []):
        r = weakly_mixing_equivalence_check(entry.spec, as_point(p["z0"]), p["radii"],
                                            [as_point(w) for w in p["net1"]],
                                            [as_point(w) for w in p["net2"]],
                                            entry.eps, 64, seed)
        r.params["family"] = entry.name
        out.append(r)
    return out


def check_montel(entry: CorpusEntry, seed: int = 0) -> list[AnalysisReport]:
    m = entry.data["montel"]
    eps = float(m["eps"])
    r = montel_consistency(entry.spec, Region.parse(m["domain"], eps), Region.parse(m["codomain"], eps),
                           int(m["budget"]), seed=seed)
    r.params["family"] = entry.name
    return [r]


def check_expanding(entry: CorpusEntry, seed: int = 0) -> list[AnalysisReport]:
    e = entry.data.get("expanding")
    if not e:
        return []
    K = Region.parse(e["K"], float(e["K_eps"])).centers
    net = Region.parse(e["net"], float(e["eps"]))
    r = expanding_implies_transitive_check(entry.spec, as_point(e["z0"]), K, e["E"], e["radii"], net,
                                           float(e["eps"]), int(e["budget"]), seed=seed)
    r.params["family"] = entry.name
    return [r]


def check_julia(entry: CorpusEntry, seed: int = 0):
    j = entry.data.get("julia")
    if not j:
        return [], None
    cells = fatou_julia(entry.spec, j["window"], int(j["pixels"]), int(j["budget"]))
    params = {"family": entry.name, **julia_sidecar(cells)}
    return [_closed("julia-grid-closed", cells, params, seed)], cells


def check_marty_slope(seed: int = 0) -> AnalysisReport:
    """Marty sup growth of n*z at 0 is linear in n."""
    prof = marty_profile(FamilySpec.sequence("n*z"), 0, 0.1, 64)
    ok = 0.95 <= prof.slope <= 1.05
    return AnalysisReport("marty-growth-ntimesz", HOLDS if ok else FAILS,
                          {"z0": 0j, "radius": 0.1, "budget": 64},
                          [{"slope": prof.slope, "max_sup": prof.max_sup}], [MODE_NOTE], seed)


# ---------------------------------------------------------------- runner


@dataclass
class CorpusResult:
    reports: list[AnalysisReport] = field(default_factory=list)
    images: dict = field(default_factory=dict)

    @property
    def failures(self) -> list[AnalysisReport]:
        return [r for r in self.reports if r.verdict == FAILS]

    @property
    def ok(self) -> bool:
        return not self.failures

    def summary(self) -> dict:
        counts: dict = {}
        for r in self.reports:
            counts[r.verdict] = counts.get(r.verdict, 0) + 1
        meyrath = [r for r in self.reports if r.property == "normal-iff-weakly-mixing"]
        return {"reports": len(self.reports), "verdicts": dict(sorted(counts.items())),
                "failures": [f"{r.property}:{r.params.get('family', '')}" for r in self.failures],
                "meyrath_certified_pairs": sum(r.verdict == HOLDS for r in meyrath)}

    def to_json(self) -> dict:
        return {"summary": self.summary(), "reports": [r.to_json() for r in self.reports]}

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=1)


CHECKS = (check_ttm, check_omega, check_sets, check_points, check_montel, check_expanding)


def run_corpus(names=None, seed: int = 0, log=None) -> CorpusResult:
    """Run every check on every entry, in a fixed order."""
    res = CorpusResult()
    for name in names or NAMES:
        entry = load_entry(name)
        for check in CHECKS:
            reps = check(entry, seed)
            res.reports.extend(reps)
            if log:
                for r in reps:
                    log(f"{name:13s} {r.property:32s} {r.verdict}")
        reps, cells = check_julia(entry, seed)
        res.reports.extend(reps)
        if cells is not None:
            res.images[name] = cells
    res.reports.append(check_marty_slope(seed))
    res.reports.extend(_meyrath_coverage(res, seed))
    return res


def _meyrath_coverage(res: CorpusResult, seed: int) -> list[AnalysisReport]:
    """At least six certified normal-iff-mixing pairs are required."""
    meyrath = [r for r in res.reports if r.property == "normal-iff-weakly-mixing"]
    certified = [r for r in meyrath if r.verdict == HOLDS]
    nn = sum(1 for r in certified if r.witnesses[0]["normality"] == NON_NORMAL)
    verdict = HOLDS if len(certified) >= 6 else FAILS
    return [AnalysisReport("normal-iff-weakly-mixing-coverage", verdict, {"required": 6},
                           [{"certified_pairs": len(certified), "non_normal": nn,
                             "normal": len(certified) - nn}], [], seed)]
