"""Command-line front end.

Every command prints one JSON report (property, verdict, params,
witnesses, notes, tool_version, seed) to stdout or ``--out``.  Exit codes:
0 completed, 1 usage error, 2 assertion failed (corpus), 3 numeric
non-convergence.  Errors are also written to stderr as JSON.
"""
from __future__ import annotations

import argparse
import json
import re
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .corpus import NAMES, load_family, run_corpus
from .funcexpr import NonConvergenceError, parse
from .normality import (
    NON_NORMAL, NORMAL, MODE_NOTE, fatou_julia, is_normal_at, julia_sidecar, marty_profile,
    montel_consistency, omitted_values, weakly_mixing_equivalence_check,
)
from .orbits import (
    forward_invariant_hull, is_backward_invariant, is_forward_invariant, is_nonwandering,
    nonwandering_set, omega_limit, orbit_values, universal_points,
)
from .report import FAILS, HOLDS, INCONCLUSIVE, AnalysisReport, jsonable
from .sets import CellSet, Region
from .sphere import as_point, is_inf
from .transitivity import (
    closure_contains, compact_transitive_witness, dense_preimage_test,
    expanding_implies_transitive_check, is_expanding_at, is_minimal, is_transitive,
    is_transitive_at, is_weakly_mixing_at, transitivity_transfer_check,
)

EXIT_OK, EXIT_USAGE, EXIT_ASSERTION, EXIT_NONCONVERGENCE = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


# ---------------------------------------------------------------- argument types


def points_arg(text: str) -> list[complex]:
    """Comma-separated points such as ``0.5,1+2i,inf``."""
    try:
        return [as_point(p) for p in text.split(",") if p.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def point_arg(text: str) -> complex:
    try:
        return as_point(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def floats_arg(text: str) -> list[float]:
    try:
        vals = [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None
    if not vals or not all(v > 0 and np.isfinite(v) for v in vals):
        raise argparse.ArgumentTypeError("values must be positive and finite")
    return vals


def positive_float(text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not (v > 0 and np.isfinite(v)):
        raise argparse.ArgumentTypeError("must be positive and finite")
    return v


def positive_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def nonneg_int(text: str) -> int:
    v = int(text)
    if v < 0:
        raise argparse.ArgumentTypeError("must be >= 0")
    return v


def disk_arg(text: str) -> tuple[complex, float]:
    """``cx,cy,r`` as (centre, radius)."""
    try:
        cx, cy, r = (float(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected cx,cy,r, got {text!r}") from None
    if not r > 0:
        raise argparse.ArgumentTypeError("radius must be positive")
    return complex(cx, cy), r


def window_arg(text: str) -> tuple[float, float, float, float]:
    try:
        w = tuple(float(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected x0,y0,x1,y1, got {text!r}") from None
    if len(w) != 4 or not (w[2] > w[0] and w[3] > w[1]):
        raise argparse.ArgumentTypeError("window must be x0,y0,x1,y1 with x1 > x0 and y1 > y0")
    return w


# ---------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="famdyn", description="Finite-resolution dynamics of families of maps.")
    p.add_argument("--version", action="version", version=f"famdyn {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def cmd(name, help_, family=True, budget=64):
        s = sub.add_parser(name, help=help_)
        if family:
            s.add_argument("--family", required=True,
                           help=f"family spec JSON file or a bundled name ({', '.join(NAMES)})")
        s.add_argument("--budget", type=positive_int, default=budget, help="number of members")
        s.add_argument("--seed", type=nonneg_int, default=0)
        s.add_argument("--out", help="write the JSON report here instead of stdout")
        return s

    s = cmd("orbit", "orbit points of z0")
    s.add_argument("--z0", type=point_arg, required=True)
    s.add_argument("--csv", help="also write the orbit as CSV")

    s = cmd("omega", "omega-limit set of z0", budget=128)
    s.add_argument("--z0", type=point_arg, required=True)
    s.add_argument("--cluster-eps", type=positive_float, default=1e-6)

    s = cmd("invariant", "forward or backward invariance of a point set", budget=16)
    s.add_argument("--points", type=points_arg, required=True)
    s.add_argument("--direction", choices=("forward", "backward"), default="forward")
    s.add_argument("--tol", type=positive_float, default=1e-6)

    s = cmd("nonwandering", "non-wandering test at z0 or cell set over a region", budget=32)
    g = s.add_mutually_exclusive_group(required=True)
    g.add_argument("--z0", type=point_arg)
    g.add_argument("--region")
    s.add_argument("--radii", type=floats_arg, default=[0.2, 0.1, 0.05])
    s.add_argument("--eps", type=positive_float, default=0.1)
    s.add_argument("--pgm", help="write the cell mask as PGM")

    s = cmd("universal", "cells whose orbit is eps-dense in a target net")
    s.add_argument("--region", required=True)
    s.add_argument("--net", required=True)
    s.add_argument("--eps", type=positive_float, default=0.1)
    s.add_argument("--pgm")

    s = cmd("hull", "smallest forward-invariant cell set containing seed points", budget=16)
    s.add_argument("--region", required=True)
    s.add_argument("--start", type=points_arg, required=True, help="seed points")
    s.add_argument("--eps", type=positive_float, default=0.1)
    s.add_argument("--pgm")

    s = cmd("transitive", "topological transitivity on a region or at z0", budget=256)
    g = s.add_mutually_exclusive_group(required=True)
    g.add_argument("--z0", type=point_arg)
    g.add_argument("--region")
    s.add_argument("--net", required=True, help="codomain region (its cell centres are targets)")
    s.add_argument("--eps", type=positive_float, default=0.1)
    s.add_argument("--radii", type=floats_arg, default=[0.1])
    s.add_argument("--wrt", help="restrict targets to those within eps of this region")

    s = cmd("minimal", "every domain cell's orbit is eps-dense in the net", budget=256)
    s.add_argument("--region", required=True)
    s.add_argument("--net", required=True)
    s.add_argument("--eps", type=positive_float, default=0.1)

    s = cmd("densepre", "preimages of every target ball meet every domain cell", budget=256)
    s.add_argument("--region", required=True)
    s.add_argument("--net", required=True)
    s.add_argument("--eps", type=positive_float, default=0.1)

    s = cmd("mixing", "weak mixing at z0", budget=256)
    s.add_argument("--z0", type=point_arg, required=True)
    s.add_argument("--radii", type=floats_arg, default=[0.1])
    s.add_argument("--net1", type=points_arg, required=True)
    s.add_argument("--net2", type=points_arg, required=True)
    s.add_argument("--eps", type=positive_float, default=0.1)

    s = cmd("expanding", "expanding at z0, optionally with the transitivity implication", budget=256)
    s.add_argument("--z0", type=point_arg, required=True)
    s.add_argument("--K", required=True, help="compact set as a region string")
    s.add_argument("--K-eps", type=positive_float, default=0.5)
    s.add_argument("--E", type=points_arg, default=[], help="exceptional points")
    s.add_argument("--radii", type=floats_arg, default=[0.1])
    s.add_argument("--Q", type=positive_int, default=3, help="members required to cover K")
    s.add_argument("--check-net", help="codomain region: also check expanding implies transitive")
    s.add_argument("--eps", type=positive_float, default=0.25)

    s = cmd("witness", "member f with f(z0) in V for z0 in U", budget=64)
    s.add_argument("--z0", type=point_arg, required=True)
    s.add_argument("--U", type=disk_arg, required=True, help="cx,cy,r")
    s.add_argument("--V", type=disk_arg, required=True, help="cx,cy,r")
    s.add_argument("--eps", type=positive_float, default=0.05)

    s = cmd("transfer", "transfer of transitivity at z0 from F to G", budget=256)
    s.add_argument("--family-g", required=True)
    s.add_argument("--mode", choices=("agreement", "proximity"), required=True)
    s.add_argument("--z0", type=point_arg, required=True)
    s.add_argument("--radii", type=floats_arg, default=[0.1])
    s.add_argument("--net", required=True)
    s.add_argument("--eps", type=positive_float, default=0.1)
    s.add_argument("--pair-eps", type=positive_float)

    s = cmd("closure", "some member within eps of a target function on samples")
    s.add_argument("--target", required=True, help="target expression in z")
    s.add_argument("--region", required=True, help="sample region (cell centres)")
    s.add_argument("--sample-eps", type=positive_float, default=0.05)
    s.add_argument("--eps", type=positive_float, default=1e-3)

    s = cmd("marty", "Marty (spherical derivative) sup profile on a disk")
    s.add_argument("--z0", type=point_arg, required=True)
    s.add_argument("--radius", type=positive_float, default=0.1)
    s.add_argument("--grid", type=positive_int, default=41)

    s = cmd("normal", "normality at z0 from Marty profiles")
    s.add_argument("--z0", type=point_arg, required=True)
    s.add_argument("--radii", type=floats_arg, default=[0.1, 0.05])
    s.add_argument("--threshold", type=positive_float, default=1e6)

    s = cmd("omitted", "codomain cells omitted by every member on the domain")
    s.add_argument("--region", required=True)
    s.add_argument("--codomain", required=True)
    s.add_argument("--eps", type=positive_float, default=0.1)
    s.add_argument("--pgm")

    s = cmd("montel", "Montel implication check")
    s.add_argument("--region", required=True)
    s.add_argument("--codomain", required=True)
    s.add_argument("--eps", type=positive_float, default=0.1)
    s.add_argument("--bound", type=positive_float, default=1e3)

    s = cmd("julia", "Fatou/Julia pixel classification")
    s.add_argument("--window", type=window_arg, required=True)
    s.add_argument("--px", type=positive_int, default=256)
    s.add_argument("--threshold", type=positive_float, default=1e6)
    s.add_argument("--json", help="write the JSON report here instead of stdout")

    s = cmd("equiv", "non-normal iff weakly mixing at z0")
    s.add_argument("--z0", type=point_arg, required=True)
    s.add_argument("--radii", type=floats_arg, default=[0.1, 0.05])
    s.add_argument("--net1", type=points_arg, required=True)
    s.add_argument("--net2", type=points_arg, required=True)
    s.add_argument("--eps", type=positive_float, default=0.1)

    s = sub.add_parser("corpus", help="run the theorem-assertion suite on the bundled corpus")
    s.add_argument("--seed", type=nonneg_int, default=0)
    s.add_argument("--out", help="directory for corpus.json and Julia images")
    s.add_argument("--only", help="comma-separated entry names")
    s.add_argument("--quiet", action="store_true")
    return p


# ---------------------------------------------------------------- helpers


def _region(text: str, eps: float) -> Region:
    try:
        return Region.parse(text, eps)
    except (ValueError, TypeError) as exc:
        raise UsageError(f"bad region {text!r}: {exc}") from None


def _cells_report(prop: str, cells: CellSet, params: dict, seed: int, notes=()) -> AnalysisReport:
    wit = [cells.to_json() | {"grid_closed": cells.is_grid_closed()}]
    return AnalysisReport(prop, HOLDS, params, wit, list(notes), seed)


def _write_pgm(path, cells: CellSet) -> None:
    if path:
        Path(path).write_bytes(cells.to_pgm())


def _normal_verdict(v: str) -> str:
    return {NORMAL: HOLDS, NON_NORMAL: FAILS}.get(v, INCONCLUSIVE)


# ---------------------------------------------------------------- commands


def _orbit(a, fam):
    members, vals = orbit_values(fam, a.z0, a.budget, strict=False)
    labels = members.labels
    if a.csv:
        rows = ["label,re,im"]
        for lab, v in zip(labels, vals):
            if np.isnan(v):
                rows.append(f"{lab},nan,nan")
            elif is_inf(v):
                rows.append(f"{lab},inf,inf")
            else:
                rows.append(f"{lab},{float(v.real)!r},{float(v.imag)!r}")
        Path(a.csv).write_text("\n".join(rows) + "\n", encoding="utf-8")
    wit = [{"label": lab, "value": None if np.isnan(v) else complex(v)} for lab, v in zip(labels, vals)]
    return AnalysisReport("orbit", HOLDS, {"z0": a.z0, "budget": a.budget}, wit,
                          ["undefined values are null"], a.seed)


def _omega(a, fam):
    om = omega_limit(fam, a.z0, a.budget, a.cluster_eps)
    return AnalysisReport("omega-limit", HOLDS,
                          {"z0": a.z0, "budget": a.budget, "cluster_eps": a.cluster_eps},
                          [{"omega": om.to_json(), "labels": om.labels}],
                          ["clusters of the orbit tail with at least 3 hits"], a.seed)


def _invariant(a, fam):
    if a.direction == "forward":
        ok, wit = is_forward_invariant(fam, a.points, a.budget, a.tol)
        detail = [] if ok else [{"member": wit[0], "point": wit[1], "image": wit[2]}]
    else:
        ok, wit = is_backward_invariant(fam, a.points, a.budget, a.tol, a.seed)
        detail = [] if ok else [{"member": wit[0], "point": wit[1], "preimages": wit[2]}]
    return AnalysisReport(f"{a.direction}-invariant", HOLDS if ok else FAILS,
                          {"points": a.points, "budget": a.budget, "tol": a.tol}, detail, [], a.seed)


def _nonwandering(a, fam):
    if a.z0 is not None:
        res = is_nonwandering(fam, a.z0, a.radii, a.budget)
        verdict = {"nonwandering": HOLDS, "wandering-at-resolution": FAILS}.get(res.verdict, INCONCLUSIVE)
        wit = [{"radius": r, "member": lab, "kind": k, "point": pt} for r, lab, k, pt in res.witnesses]
        notes = [res.verdict] + (["some evidence is sampled only"] if res.heuristic else [])
        return AnalysisReport("nonwandering-at", verdict, {"z0": a.z0, "radii": a.radii, "budget": a.budget},
                              wit, notes, a.seed)
    region = _region(a.region, a.eps)
    cells = nonwandering_set(fam, region, a.budget)
    _write_pgm(a.pgm, cells)
    return _cells_report("nonwandering-set", cells, {"region": a.region, "eps": a.eps, "budget": a.budget},
                         a.seed)


def _universal(a, fam):
    region = _region(a.region, a.eps)
    cells = universal_points(fam, region, _region(a.net, a.eps), a.budget, a.eps)
    _write_pgm(a.pgm, cells)
    return _cells_report("universal-points", cells,
                         {"region": a.region, "net": a.net, "eps": a.eps, "budget": a.budget}, a.seed)


def _hull(a, fam):
    region = _region(a.region, a.eps)
    marks = np.zeros(len(region), dtype=bool)
    idx = region.cell_of(np.array(a.start, dtype=complex))
    if np.any(idx < 0):
        raise UsageError("every --start point must lie in --region")
    marks[idx] = True
    res = forward_invariant_hull(fam, CellSet(region, marks), region, a.budget)
    _write_pgm(a.pgm, res.cells)
    return _cells_report("forward-invariant-hull", res.cells,
                         {"region": a.region, "eps": a.eps, "budget": a.budget, "start": a.start},
                         a.seed, res.flags())


def _transitive(a, fam):
    net = _region(a.net, a.eps)
    B = _region(a.wrt, a.eps) if a.wrt else None
    if a.z0 is not None:
        return is_transitive_at(fam, a.z0, a.radii, net, a.eps, B, a.budget, a.seed)
    return is_transitive(fam, _region(a.region, a.eps), net, a.eps, B, a.budget, a.seed)


def _minimal(a, fam):
    return is_minimal(fam, _region(a.region, a.eps), _region(a.net, a.eps), a.budget, a.eps, a.seed)


def _densepre(a, fam):
    return dense_preimage_test(fam, _region(a.net, a.eps), _region(a.region, a.eps), a.budget, a.eps,
                               a.seed)


def _mixing(a, fam):
    return is_weakly_mixing_at(fam, a.z0, a.radii, a.net1, a.net2, a.eps, a.budget, a.seed)


def _expanding(a, fam):
    K = _region(a.K, a.K_eps).centers
    if a.check_net:
        return expanding_implies_transitive_check(fam, a.z0, K, a.E, a.radii, _region(a.check_net, a.eps),
                                                  a.eps, a.budget, a.Q, a.seed)
    return is_expanding_at(fam, a.z0, K, a.E, a.radii, a.budget, a.Q, a.seed)


def _witness(a, fam):
    got = compact_transitive_witness(fam, a.z0, a.U, a.V, a.budget, a.eps)
    params = {"z0": a.z0, "U": list(a.U), "V": list(a.V), "budget": a.budget, "eps": a.eps}
    if got is None:
        return AnalysisReport("compact-transitive-witness", FAILS, params, [], ["no member found"], a.seed)
    return AnalysisReport("compact-transitive-witness", HOLDS, params,
                          [{"member": got[0], "image": got[1]}], [], a.seed)


def _transfer(a, fam):
    g = load_family(a.family_g)
    return transitivity_transfer_check(fam, g, a.mode, a.z0, a.radii, _region(a.net, a.eps), a.eps,
                                       a.budget, a.pair_eps, a.seed)


def _closure(a, fam):
    target = parse(a.target)
    samples = _region(a.region, a.sample_eps).centers
    ok, label = closure_contains(fam, target, samples, a.eps, a.budget)
    params = {"target": a.target, "region": a.region, "eps": a.eps, "budget": a.budget}
    return AnalysisReport("closure-contains", HOLDS if ok else FAILS, params,
                          [{"member": label}] if ok else [], ["sup over the sample points"], a.seed)


def _marty(a, fam):
    prof = marty_profile(fam, a.z0, a.radius, a.budget, a.grid)
    return AnalysisReport("marty-profile", HOLDS,
                          {"z0": a.z0, "radius": a.radius, "budget": a.budget, "grid": a.grid},
                          [prof.to_json() | {"max_sup": prof.max_sup}], [MODE_NOTE], a.seed)


def _normal(a, fam):
    res = is_normal_at(fam, a.z0, a.radii, a.budget, a.threshold)
    return AnalysisReport("normal-at", _normal_verdict(res.verdict),
                          {"z0": a.z0, "radii": a.radii, "budget": a.budget, "threshold": a.threshold},
                          [{"classification": res.verdict}] + list(res.witnesses),
                          [res.verdict, MODE_NOTE], a.seed)


def _omitted(a, fam):
    cells = omitted_values(fam, _region(a.region, a.eps), _region(a.codomain, a.eps), a.budget)
    _write_pgm(a.pgm, cells)
    return _cells_report("omitted-values", cells,
                         {"region": a.region, "codomain": a.codomain, "eps": a.eps, "budget": a.budget},
                         a.seed)


def _montel(a, fam):
    return montel_consistency(fam, _region(a.region, a.eps), _region(a.codomain, a.eps), a.budget,
                              a.bound, seed=a.seed)


def _julia(a, fam):
    cells = fatou_julia(fam, a.window, a.px, a.budget, a.threshold)
    side = julia_sidecar(cells)
    if a.out:
        Path(a.out).write_bytes(cells.to_pgm())
        Path(a.out + ".json").write_text(json.dumps(jsonable(side), indent=1) + "\n", encoding="utf-8")
    a.out = a.json
    wit = [side | {"grid_closed": cells.is_grid_closed(), "non_normal": cells.meta["non_normal"],
                   "inconclusive": cells.meta["inconclusive"]}]
    return AnalysisReport("fatou-julia", HOLDS, {"window": list(a.window), "pixels": a.px,
                                                 "budget": a.budget, "threshold": a.threshold},
                          wit, ["marked pixels are J: not normal-evidence", MODE_NOTE], a.seed)


def _equiv(a, fam):
    return weakly_mixing_equivalence_check(fam, a.z0, a.radii, a.net1, a.net2, a.eps, a.budget, a.seed)


COMMANDS = {
    "orbit": _orbit, "omega": _omega, "invariant": _invariant, "nonwandering": _nonwandering,
    "universal": _universal, "hull": _hull, "transitive": _transitive, "minimal": _minimal,
    "densepre": _densepre, "mixing": _mixing, "expanding": _expanding, "witness": _witness,
    "transfer": _transfer, "closure": _closure, "marty": _marty, "normal": _normal,
    "omitted": _omitted, "montel": _montel, "julia": _julia, "equiv": _equiv,
}


def _emit(text: str, out) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _corpus(a) -> int:
    names = [n.strip() for n in a.only.split(",")] if a.only else None
    if names and any(n not in NAMES for n in names):
        raise UsageError(f"unknown corpus entries; choose from {', '.join(NAMES)}")
    log = None if a.quiet else (lambda s: print(s, file=sys.stderr))
    res = run_corpus(names, a.seed, log)
    text = res.dumps() + "\n"
    if a.out:
        out = Path(a.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "corpus.json").write_text(text, encoding="utf-8")
        for name, cells in res.images.items():
            (out / f"julia_{name}.pgm").write_bytes(cells.to_pgm())
    else:
        sys.stdout.write(text)
    if not res.ok:
        _error("assertion", f"{len(res.failures)} corpus assertion(s) failed",
               failures=res.summary()["failures"])
        return EXIT_ASSERTION
    return EXIT_OK


def _error(kind: str, message: str, **extra) -> None:
    sys.stderr.write(json.dumps({"error": kind, "message": message, **jsonable(extra)}) + "\n")


_NEGATIVE = re.compile(r"^-[\d.]")


def _join_negative_values(argv: list[str]) -> list[str]:
    """``--window -1.5,...`` becomes ``--window=-1.5,...`` so argparse keeps the value."""
    out: list[str] = []
    i = 0
    while i < len(argv):
        tok = argv[i]
        if tok.startswith("--") and "=" not in tok and i + 1 < len(argv) and _NEGATIVE.match(argv[i + 1]):
            out.append(f"{tok}={argv[i + 1]}")
            i += 2
            continue
        out.append(tok)
        i += 1
    return out


def violated(report: AnalysisReport) -> bool:
    """A failed implication or equivalence check (a theorem-level assertion)."""
    return report.verdict == FAILS and any("VIOLATED" in n for n in report.notes)


def run(argv=None) -> int:
    argv = _join_negative_values(list(sys.argv[1:] if argv is None else argv))
    try:
        a = build_parser().parse_args(argv)
        if a.command == "corpus":
            return _corpus(a)
        fam = load_family(a.family)
        report = COMMANDS[a.command](a, fam)
        _emit(report.dumps(indent=1) + "\n", a.out)
        if violated(report):
            _error("assertion", f"{report.property}: " + "; ".join(report.notes))
            return EXIT_ASSERTION
        return EXIT_OK
    except UsageError as exc:
        _error("usage", str(exc))
        return EXIT_USAGE
    except NonConvergenceError as exc:
        _error("non-convergence", str(exc))
        return EXIT_NONCONVERGENCE
    except (ValueError, OSError, KeyError) as exc:
        _error("usage", f"{type(exc).__name__}: {exc}")
        return EXIT_USAGE


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
