"""Families of maps and their deterministic enumeration."""
from __future__ import annotations

import itertools
import json
import logging
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .funcexpr import Compose, Expr, bind, compose, parse, to_text
from .funcexpr.evaluate import _mul, _values, derivative_of, values_and_derivative
from .sphere import as_point, chordal_distance, format_point, normalize

log = logging.getLogger(__name__)

KINDS = ("iterates", "semigroup", "sequence", "list")
SPEC_KEYS = {"name", "kind", "expr", "generators", "members", "params", "index_start"}

# fixed probe points for duplicate detection: moduli in [0.95, 1.05]
_PHI = (1 + 5**0.5) / 2
PROBES = np.array([(0.95 + 0.1 * k / 12) * np.exp(2j * np.pi * k * _PHI) for k in range(13)])
DUP_TOL = 1e-12


@dataclass(frozen=True)
class MemberLabel:
    kind: str
    position: int  # 1-based enumeration position
    iterate: int | None = None
    word: tuple | None = None
    index: int | None = None

    def __str__(self) -> str:
        if self.kind == "iterates":
            return f"f^{self.iterate}"
        if self.kind == "semigroup":
            return "∘".join(f"g{k + 1}" for k in self.word)
        if self.kind == "sequence":
            return f"n={self.index}"
        return f"m{self.position}"


class Member(NamedTuple):
    label: MemberLabel
    expr: Expr


@dataclass(frozen=True)
class FamilySpec:
    name: str
    kind: str
    expr: Expr | None = None
    generators: tuple = ()
    members: tuple = ()
    params: tuple = ()  # sorted (name, complex) pairs
    index_start: int = 1

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown family kind {self.kind!r}")
        if self.kind in ("iterates", "sequence") and self.expr is None:
            raise ValueError(f"{self.kind} family needs 'expr'")
        if self.kind == "semigroup" and not self.generators:
            raise ValueError("semigroup family needs 'generators'")
        if self.kind == "list" and not self.members:
            raise ValueError("list family needs 'members'")
        if isinstance(self.params, dict):
            object.__setattr__(self, "params", tuple(sorted(
                (k, as_point(v)) for k, v in self.params.items())))

    # constructors
    @classmethod
    def iterates(cls, f, name="", params=None):
        return cls(name or f"iterates of {f}", "iterates", expr=_ex(f), params=params or {})

    @classmethod
    def semigroup(cls, gens, name="", params=None):
        return cls(name or "semigroup", "semigroup", generators=tuple(_ex(g) for g in gens),
                   params=params or {})

    @classmethod
    def sequence(cls, f, start=1, name="", params=None):
        return cls(name or f"sequence {f}", "sequence", expr=_ex(f), index_start=start,
                   params=params or {})

    @classmethod
    def list_of(cls, members, name="", params=None):
        return cls(name or "list", "list", members=tuple(_ex(m) for m in members), params=params or {})

    @property
    def bindings(self) -> dict:
        return dict(self.params)

    # wire format
    @classmethod
    def from_json(cls, data: dict) -> "FamilySpec":
        unknown = set(data) - SPEC_KEYS
        if unknown:
            raise ValueError(f"unknown family-spec keys: {sorted(unknown)}")
        for key in ("name", "kind"):
            if key not in data:
                raise ValueError(f"family spec is missing {key!r}")
        params = {k: as_point(v) for k, v in (data.get("params") or {}).items()}
        return cls(
            name=str(data["name"]),
            kind=data["kind"],
            expr=parse(data["expr"]) if data.get("expr") is not None else None,
            generators=tuple(parse(g) for g in data.get("generators") or ()),
            members=tuple(parse(m) for m in data.get("members") or ()),
            params=params,
            index_start=int(data.get("index_start", 1)),
        )

    @classmethod
    def load(cls, path) -> "FamilySpec":
        return cls.from_json(json.loads(Path(path).read_text(encoding="utf-8")))

    def to_json(self) -> dict:
        d: dict = {"name": self.name, "kind": self.kind}
        if self.expr is not None:
            d["expr"] = to_text(self.expr)
        if self.generators:
            d["generators"] = [to_text(g) for g in self.generators]
        if self.members:
            d["members"] = [to_text(m) for m in self.members]
        d["params"] = {k: format_point(v) for k, v in self.params}
        if self.kind == "sequence":
            d["index_start"] = self.index_start
        return d

    def restrict(self, predicate, name=None) -> "Subfamily":
        """Subfamily of members whose label satisfies ``predicate``."""
        return Subfamily(self, predicate, name or f"{self.name} (subfamily)")


def _ex(f) -> Expr:
    return parse(f) if isinstance(f, str) else f


# ---------------------------------------------------------------- enumeration


def enumerate_members(spec: FamilySpec, budget: int) -> list[Member]:
    """First ``budget`` members in the deterministic order of ``spec``.

    Duplicates (agreement within 1e-12 chordal at the 13 probe points) keep
    their own labels; see :func:`find_duplicates`.
    """
    if budget < 1:
        raise ValueError("budget must be >= 1")
    if isinstance(spec, Subfamily):
        return spec.enumerate(budget)
    b = spec.bindings
    out: list[Member] = []
    if spec.kind == "iterates":
        f = bind(spec.expr, b)
        for m in range(1, budget + 1):
            out.append(Member(MemberLabel("iterates", m, iterate=m), compose(*([f] * m))))
    elif spec.kind == "semigroup":
        gens = [bind(g, b) for g in spec.generators]
        for pos, word in enumerate(itertools.islice(_words(len(gens)), budget), start=1):
            out.append(Member(MemberLabel("semigroup", pos, word=word), compose(*(gens[k] for k in word))))
    elif spec.kind == "sequence":
        for m in range(1, budget + 1):
            n = spec.index_start + m - 1
            out.append(Member(MemberLabel("sequence", m, index=n), bind(spec.expr, {**b, "n": n})))
    else:
        for m, e in enumerate(spec.members[:budget], start=1):
            out.append(Member(MemberLabel("list", m), bind(e, b)))
    return out


def _words(k: int):
    length = 1
    while True:
        yield from itertools.product(range(k), repeat=length)
        length += 1


def find_duplicates(members: list[Member]) -> list[tuple[str, str]]:
    """(later label, earlier label) for members agreeing at every probe point."""
    if not members:
        return []
    vals = Family.from_members(members).values(PROBES)
    dups = []
    for i in range(1, len(members)):
        d = chordal_distance(vals[:i], vals[i][None, :])
        with np.errstate(invalid="ignore"):
            same = np.all(np.nan_to_num(d, nan=1.0) <= DUP_TOL, axis=1)
        hit = np.nonzero(same)[0]
        if hit.size:
            dups.append((str(members[i].label), str(members[hit[0]].label)))
    if dups:
        log.info("%d duplicate member(s) detected", len(dups))
    return dups


class Subfamily:
    """Members of a parent family selected by a label predicate."""

    def __init__(self, parent: FamilySpec, predicate, name: str):
        self.parent = parent
        self.predicate = predicate
        self.name = name
        self.kind = parent.kind

    def enumerate(self, budget: int, scan_limit: int = 1 << 14) -> list[Member]:
        out = []
        scan = budget
        while len(out) < budget and scan <= scan_limit:
            out = [m for m in enumerate_members(self.parent, scan) if self.predicate(m.label)][:budget]
            scan *= 2
        return out

    @property
    def bindings(self):
        return self.parent.bindings

    def to_json(self):
        return {**self.parent.to_json(), "name": self.name}


# ---------------------------------------------------------------- evaluation


class Family:
    """Enumerated members with incremental array evaluation.

    Iterates reuse f^(m-1) values; semigroup words reuse their suffix word.
    """

    def __init__(self, spec, budget: int):
        self.spec = spec
        self.budget = budget
        self.members = enumerate_members(spec, budget)

    @classmethod
    def from_members(cls, members: list[Member]) -> "Family":
        fam = cls.__new__(cls)
        fam.spec = None
        fam.budget = len(members)
        fam.members = list(members)
        return fam

    @property
    def labels(self) -> list[str]:
        return [str(m.label) for m in self.members]

    @cached_property
    def _kind(self):
        return getattr(self.spec, "kind", None) if not isinstance(self.spec, Subfamily) else None

    def values(self, zs) -> np.ndarray:
        """Array of shape (members, points)."""
        return self.values_and_derivatives(zs, with_derivative=False)[0]

    def values_and_derivatives(self, zs, with_derivative: bool = True):
        z = normalize(np.atleast_1d(zs)).reshape(-1)
        nm = len(self.members)
        vals = np.empty((nm, z.size), dtype=complex)
        ders = np.empty((nm, z.size), dtype=complex) if with_derivative else None
        for m, v, d in self.stream(z, with_derivative):
            vals[m] = v
            if with_derivative:
                ders[m] = d
        return vals, ders

    def stream(self, zs, with_derivative: bool = True):
        """Yield (member index, values, derivatives) one member at a time."""
        z = normalize(np.atleast_1d(zs)).reshape(-1)
        kind = self._kind
        if kind == "iterates" and self.members:
            f = self.members[0].expr
            df = derivative_of(f)
            v, d = z, np.ones_like(z)
            for m in range(len(self.members)):
                if with_derivative:
                    d = _mul(d, _values(df, v))
                v = _values(f, v)
                yield m, v, (d if with_derivative else None)
            return
        if kind == "semigroup" and self.members:
            cache: dict[tuple, tuple] = {}
            gens = self._generators()
            dgens = [derivative_of(g) for g in gens]
            for m, mem in enumerate(self.members):
                word = mem.label.word
                head, tail = word[0], word[1:]
                tv, td = cache[tail] if tail else (z, np.ones_like(z))
                v = _values(gens[head], tv)
                d = _mul(_values(dgens[head], tv), td) if with_derivative else None
                cache[word] = (v, d)
                yield m, v, d
            return
        for m, mem in enumerate(self.members):
            if with_derivative:
                v, d = values_and_derivative(mem.expr, z)
                yield m, v, d
            else:
                yield m, _values(mem.expr, z), None

    def _generators(self):
        return [bind(g, self.spec.bindings) for g in self.spec.generators]


def is_composition_closed(spec: FamilySpec, depth: int, samples, tol: float = 1e-9):
    """(closed, witness) for pairs among the first ``depth`` members.

    Each f∘g must agree at every sample (chordal, within ``tol``) with some
    member in the search range: 2·depth members, or for semigroups every
    word up to twice the longest word among the first ``depth``.
    """
    samples = np.array([as_point(s) for s in samples])
    if depth < 2 or samples.size < 5:
        raise ValueError("need depth >= 2 and at least 5 samples")
    first = enumerate_members(spec, depth)
    if spec.kind == "semigroup":
        k = len(spec.generators)
        max_len = max(len(m.label.word) for m in first)
        search = sum(k**L for L in range(1, 2 * max_len + 1))
        search = min(search, 1 << 14)
    else:
        search = 2 * depth
    pool = Family(spec, search)
    pool_vals = pool.values(samples)
    first_vals = pool_vals[:depth]
    for i, f in enumerate(first):
        for j, g in enumerate(first):
            fg = _values(f.expr, first_vals[j])
            d = chordal_distance(pool_vals, fg[None, :])
            d = np.nan_to_num(d, nan=2.0)
            if not np.any(np.all(d <= tol, axis=1)):
                return False, (str(f.label), str(g.label), to_text(f.expr), to_text(g.expr))
    return True, None
