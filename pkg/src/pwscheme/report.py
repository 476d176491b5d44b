"""Check records and aggregated reports."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Dict, List, Optional

import numpy as np

from .linalg import format_rational

FORMAT_VERSION = 1


def jsonable(value: Any) -> Any:
    """Convert numpy scalars/arrays, fractions, tuples and sets to JSON types."""
    if isinstance(value, Fraction):
        return format_rational(value)
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.ndarray):
        return jsonable(value.tolist())
    if isinstance(value, dict):
        return {str(k): jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [jsonable(v) for v in value]
    if isinstance(value, (set, frozenset)):
        return sorted(jsonable(v) for v in value)
    return value


@dataclass
class Record:
    check: str
    passed: bool
    witness: Any = None
    values: Optional[Dict[str, Any]] = None
    claim: str = ""
    stage: str = ""
    elapsed: Optional[float] = None

    def to_json(self, timing: bool = False) -> dict:
        doc = {"check": self.check, "pass": bool(self.passed), "stage": self.stage, "claim": self.claim}
        if self.witness is not None:
            doc["witness"] = jsonable(self.witness)
        if self.values is not None:
            doc["values"] = jsonable(self.values)
        if timing and self.elapsed is not None:
            doc["elapsed"] = round(self.elapsed, 3)
        return doc

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        text = f"[{status}] {self.stage}/{self.check}"
        if not self.passed and self.witness is not None:
            text += f"  witness={jsonable(self.witness)}"
        return text


@dataclass
class Report:
    records: List[Record] = field(default_factory=list)
    config: Dict[str, Any] = field(default_factory=dict)

    def add(self, record: Record) -> Record:
        self.records.append(record)
        return record

    def extend(self, records) -> None:
        self.records.extend(records)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.records)

    def stage_passed(self, stage: str) -> bool:
        return all(r.passed for r in self.records if r.stage == stage)

    def get(self, check: str) -> Optional[Record]:
        return next((r for r in self.records if r.check == check), None)

    def to_json(self, timing: bool = False) -> dict:
        return {"format_version": FORMAT_VERSION, "config": jsonable(self.config),
                "summary": {"pass": self.passed, "checks": len(self.records),
                            "failed": [r.check for r in self.records if not r.passed]},
                "records": [r.to_json(timing) for r in self.records]}

    def dumps(self, timing: bool = False) -> str:
        return json.dumps(self.to_json(timing), indent=2, sort_keys=False)

    def text(self) -> str:
        lines = [r.line() for r in self.records]
        lines.append(f"summary: {'PASS' if self.passed else 'FAIL'} "
                     f"({sum(r.passed for r in self.records)}/{len(self.records)} checks)")
        return "\n".join(lines)
