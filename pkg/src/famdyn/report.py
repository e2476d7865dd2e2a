"""Serializable verdicts."""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .sphere import format_point

HOLDS = "holds-with-witness"
HOLDS_HEURISTIC = "holds-heuristic"
FAILS = "fails-at-resolution"
INCONCLUSIVE = "inconclusive"
PRECONDITION = "precondition-not-met"
PAIRING_FAILED = "pairing-failed"

VERDICTS = (HOLDS, HOLDS_HEURISTIC, FAILS, INCONCLUSIVE, PRECONDITION, PAIRING_FAILED)
KEYS = ("property", "verdict", "params", "witnesses", "notes", "tool_version", "seed")


def jsonable(x):
    """Recursively convert numbers/points/arrays to JSON-ready values."""
    if isinstance(x, dict):
        return {str(k): jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return [jsonable(v) for v in x.tolist()]
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (complex, np.complexfloating)):
        return format_point(complex(x))
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if x != x:
            return "nan"
        if x in (float("inf"), float("-inf")):
            return "inf" if x > 0 else "-inf"
        return x
    if x is None or isinstance(x, str):
        return x
    if hasattr(x, "to_json"):
        return jsonable(x.to_json())
    return str(x)


@dataclass
class AnalysisReport:
    property: str
    verdict: str
    params: dict = field(default_factory=dict)
    witnesses: list = field(default_factory=list)
    notes: list = field(default_factory=list)
    seed: int = 0
    tool_version: str = __version__

    def __post_init__(self):
        if self.verdict not in VERDICTS:
            raise ValueError(f"unknown verdict {self.verdict!r}")

    @property
    def holds(self) -> bool:
        return self.verdict in (HOLDS, HOLDS_HEURISTIC)

    @property
    def certified(self) -> bool:
        return self.verdict in (HOLDS, FAILS)

    def to_json(self) -> dict:
        return {
            "property": self.property,
            "verdict": self.verdict,
            "params": jsonable(self.params),
            "witnesses": jsonable(self.witnesses),
            "notes": list(self.notes),
            "tool_version": self.tool_version,
            "seed": self.seed,
        }

    def dumps(self, indent=None) -> str:
        return json.dumps(self.to_json(), indent=indent)

    @classmethod
    def from_json(cls, d: dict) -> "AnalysisReport":
        if tuple(d) != KEYS:
            raise ValueError(f"report keys must be exactly {KEYS}")
        return cls(property=d["property"], verdict=d["verdict"], params=d["params"],
                   witnesses=d["witnesses"], notes=d["notes"], seed=d["seed"],
                   tool_version=d["tool_version"])

    @classmethod
    def loads(cls, text: str) -> "AnalysisReport":
        return cls.from_json(json.loads(text))


REPORT_SCHEMA = {
    "type": "object",
    "required": list(KEYS),
    "additionalProperties": False,
    "properties": {
        "property": {"type": "string"},
        "verdict": {"enum": list(VERDICTS)},
        "params": {"type": "object"},
        "witnesses": {"type": "array"},
        "notes": {"type": "array", "items": {"type": "string"}},
        "tool_version": {"type": "string"},
        "seed": {"type": "integer"},
    },
}

_TYPES = {"object": dict, "array": list, "string": str, "integer": int}


def validate_report(d) -> list[str]:
    """Problems with ``d`` against REPORT_SCHEMA; empty when it conforms."""
    if not isinstance(d, dict):
        return ["report must be an object"]
    errs = [f"missing key {k!r}" for k in KEYS if k not in d]
    errs += [f"unexpected key {k!r}" for k in d if k not in KEYS]
    for k, rule in REPORT_SCHEMA["properties"].items():
        if k not in d:
            continue
        v = d[k]
        if "enum" in rule and v not in rule["enum"]:
            errs.append(f"{k}: {v!r} not allowed")
        if "type" in rule:
            t = _TYPES[rule["type"]]
            if not isinstance(v, t) or (t is int and isinstance(v, bool)):
                errs.append(f"{k}: expected {rule['type']}")
        if "items" in rule and isinstance(v, list):
            it = _TYPES[rule["items"]["type"]]
            if not all(isinstance(x, it) for x in v):
                errs.append(f"{k}: items must be {rule['items']['type']}")
    return errs
