"""Report rows, suite reports and their deterministic serialization."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field
from typing import Any, Optional

import numpy as np

__all__ = ["TIERS", "Row", "SuiteReport", "to_jsonable", "dumps", "rows_csv", "merge_reports"]

# exact: inequalities that hold on finite spaces up to roundoff
# bound: proven inequalities with unspecified constants, checked with a slack factor
# empirical: recorded constants, brackets and fits with no pass/fail truth
TIERS = ("exact", "bound", "empirical")


def _clean(x: Any) -> Any:
    if isinstance(x, (np.floating, float)):
        x = float(x)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.bool_,)):
        return bool(x)
    if isinstance(x, np.ndarray):
        return [_clean(v) for v in x.tolist()]
    if isinstance(x, dict):
        return {str(k): _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    return x


to_jsonable = _clean


@dataclass
class Row:
    """One check at one probe and grid point.

    ``slack`` is signed: nonnegative means the check holds.  The default
    convention is ``rhs - lhs`` relative to ``max(|rhs|, tiny)``.
    """

    check: str
    tier: str
    lhs: float
    rhs: float
    slack: float
    passed: bool
    probe: Optional[str] = None
    point: Optional[float] = None
    note: str = ""

    def __post_init__(self):
        if self.tier not in TIERS:
            raise ValueError(f"unknown tier {self.tier!r}")


@dataclass
class SuiteReport:
    suite: str
    space: str
    exponents: dict
    rows: list = field(default_factory=list)
    constants: dict = field(default_factory=dict)
    trend: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)

    def add(self, check, tier, lhs, rhs, passed, slack=None, probe=None, point=None, note="") -> Row:
        if slack is None:
            scale = max(abs(float(rhs)), 1e-300) if math.isfinite(float(rhs)) else 1.0
            slack = (float(rhs) - float(lhs)) / scale if math.isfinite(float(rhs)) else math.inf
        row = Row(check=check, tier=tier, lhs=float(lhs), rhs=float(rhs), slack=float(slack),
                  passed=bool(passed), probe=probe, point=None if point is None else float(point), note=note)
        self.rows.append(row)
        return row

    @property
    def exact_failures(self) -> list:
        return [r for r in self.rows if r.tier == "exact" and not r.passed]

    @property
    def failures(self) -> list:
        return [r for r in self.rows if not r.passed]

    @property
    def passed(self) -> bool:
        return not self.failures

    def to_dict(self) -> dict:
        return _clean({
            "suite": self.suite,
            "space": self.space,
            "exponents": self.exponents,
            "rows": [asdict(r) for r in self.rows],
            "constants": self.constants,
            "trend": self.trend,
            "notes": self.notes,
            "summary": {
                "rows": len(self.rows),
                "failed": len(self.failures),
                "exact_failed": len(self.exact_failures),
            },
        })

    @classmethod
    def from_dict(cls, d: dict) -> "SuiteReport":
        rep = cls(suite=d["suite"], space=d["space"], exponents=d.get("exponents", {}),
                  constants=d.get("constants", {}), trend=d.get("trend", {}), notes=d.get("notes", []))
        for r in d.get("rows", []):
            vals = {k: (float(v) if isinstance(v, str) and v in ("inf", "-inf", "nan") else v)
                    for k, v in r.items()}
            rep.rows.append(Row(**vals))
        return rep


def dumps(obj) -> str:
    """Canonical JSON: sorted keys, fixed separators, shortest round-trip floats."""
    return json.dumps(_clean(obj), sort_keys=True, indent=1, separators=(",", ": ")) + "\n"


CSV_FIELDS = ["suite", "space", "check", "tier", "probe", "point", "lhs", "rhs", "slack", "passed", "note"]


def rows_csv(reports) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_FIELDS)
    for rep in reports:
        for r in rep.rows:
            w.writerow([rep.suite, rep.space, r.check, r.tier, r.probe or "",
                        "" if r.point is None else repr(r.point), repr(r.lhs), repr(r.rhs),
                        repr(r.slack), int(r.passed), r.note])
    return buf.getvalue()


def merge_reports(dicts) -> dict:
    """Combine serialized suite reports into one document keyed by ``space/suite``."""
    merged = {}
    for d in dicts:
        items = d["reports"].values() if "reports" in d else [d]
        for rep in items:
            merged[f"{rep['space']}/{rep['suite']}"] = rep
    failed = sum(r["summary"]["failed"] for r in merged.values())
    exact = sum(r["summary"]["exact_failed"] for r in merged.values())
    return {"reports": merged, "summary": {"suites": len(merged), "failed": failed, "exact_failed": exact}}
