"""
Delib Records — Raw Per-Run Records
=====================================

One RunRecord per (replication, strategy, rule). Records are written
as a flat CSV plus a JSON-lines twin carrying the diagnostics the CSV
has no room for (committee members, MES q values, the committee's
approval scores):

  results/records.csv
  results/records.jsonl

Floats are written with repr() so a load returns the exact values.
Appending to an existing file checks its header first.
"""

import csv
import json
import logging
import os
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional

from delib.types import DelibError, STRATEGY_ORDER, RuleName

logger = logging.getLogger("delib.records")

SCHEMA_VERSION = 1

CSV_COLUMNS = [
    "replication", "strategy", "rule", "ur", "rr", "uragg", "vs", "ejr", "pjr",
    "minority_preserved", "variance", "disagreement", "attempts", "ms",
]

_RULE_ORDER = [r.value for r in RuleName]


class RecordFormatError(DelibError):
    """Raised when a record file does not match the expected schema."""
    pass


@dataclass
class RunRecord:
    replication: int
    strategy: str
    rule: str
    ur: float
    rr: float
    uragg: float
    vs: float
    ejr: bool
    pjr: bool
    minority_preserved: int
    variance: float
    disagreement: float
    attempts: int
    ms: int = 0
    committee: List[int] = field(default_factory=list)
    q: List[float] = field(default_factory=list)
    approvals: List[int] = field(default_factory=list)

    def sort_key(self):
        return (self.replication, _order_index(STRATEGY_ORDER, self.strategy),
                _order_index(_RULE_ORDER, self.rule))

    def to_row(self) -> List[str]:
        return [
            str(self.replication), self.strategy, self.rule,
            repr(float(self.ur)), repr(float(self.rr)), repr(float(self.uragg)), repr(float(self.vs)),
            "1" if self.ejr else "0", "1" if self.pjr else "0",
            str(self.minority_preserved),
            repr(float(self.variance)), repr(float(self.disagreement)),
            str(self.attempts), str(self.ms),
        ]

    def diagnostics(self) -> Dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "replication": self.replication,
            "strategy": self.strategy,
            "rule": self.rule,
            "committee": list(self.committee),
            "q": list(self.q),
            "approvals": list(self.approvals),
        }


def _order_index(order: List[str], name: str):
    return (order.index(name), name) if name in order else (len(order), name)


def canonical_sort(records: Iterable[RunRecord]) -> List[RunRecord]:
    return sorted(records, key=RunRecord.sort_key)


def twin_path(path: str) -> str:
    root, _ = os.path.splitext(path)
    return root + ".jsonl"


def _row_to_record(row: List[str], where: str) -> RunRecord:
    if len(row) != len(CSV_COLUMNS):
        raise RecordFormatError(f"{where}: expected {len(CSV_COLUMNS)} fields, got {len(row)}")
    try:
        return RunRecord(
            replication=int(row[0]), strategy=row[1], rule=row[2],
            ur=float(row[3]), rr=float(row[4]), uragg=float(row[5]), vs=float(row[6]),
            ejr=_flag(row[7]), pjr=_flag(row[8]),
            minority_preserved=int(row[9]),
            variance=float(row[10]), disagreement=float(row[11]),
            attempts=int(row[12]), ms=int(row[13]),
        )
    except ValueError as err:
        raise RecordFormatError(f"{where}: {err}") from err


def _flag(text: str) -> bool:
    if text not in ("0", "1"):
        raise ValueError(f"expected 0 or 1, got {text!r}")
    return text == "1"


def _check_header(header: Optional[List[str]], path: str):
    if header != CSV_COLUMNS:
        raise RecordFormatError(f"{path}: unexpected header {header!r} (schema version {SCHEMA_VERSION})")


def persist_records(records: Iterable[RunRecord], path: str, append: bool = False) -> str:
    """Write records (canonically sorted) to path and its .jsonl twin; returns path."""
    records = canonical_sort(records)
    appending = append and os.path.exists(path) and os.path.getsize(path) > 0
    if appending:
        with open(path, "r", newline="", encoding="utf-8") as f:
            _check_header(next(csv.reader(f), None), path)
    parent = os.path.dirname(path)
    if parent:
        os.makedirs(parent, exist_ok=True)

    mode = "a" if appending else "w"
    with open(path, mode, newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\n")
        if not appending:
            writer.writerow(CSV_COLUMNS)
        for record in records:
            writer.writerow(record.to_row())
    with open(twin_path(path), mode, encoding="utf-8") as f:
        for record in records:
            f.write(json.dumps(record.diagnostics(), sort_keys=True) + "\n")
    logger.info("wrote %d records to %s", len(records), path)
    return path


def _load_diagnostics(path: str) -> List[Dict]:
    out = []
    with open(path, "r", encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                item = json.loads(line)
            except json.JSONDecodeError as err:
                raise RecordFormatError(f"{path}:{lineno}: {err.msg}") from err
            if item.get("schema_version") != SCHEMA_VERSION:
                raise RecordFormatError(
                    f"{path}:{lineno}: schema version {item.get('schema_version')!r}, "
                    f"expected {SCHEMA_VERSION}")
            out.append(item)
    return out


def load_records(path: str) -> List[RunRecord]:
    """Read path (and its .jsonl twin when present)."""
    with open(path, "r", newline="", encoding="utf-8") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header is None:
            return []
        _check_header(header, path)
        records = [_row_to_record(row, f"{path}:{lineno}")
                   for lineno, row in enumerate(reader, start=2) if row]

    twin = twin_path(path)
    if os.path.exists(twin):
        diagnostics = _load_diagnostics(twin)
        if len(diagnostics) != len(records):
            raise RecordFormatError(f"{twin}: {len(diagnostics)} lines for {len(records)} records")
        for record, diag in zip(records, diagnostics):
            if (diag["replication"], diag["strategy"], diag["rule"]) != \
                    (record.replication, record.strategy, record.rule):
                raise RecordFormatError(f"{twin}: out of step with {path}")
            record.committee = list(diag["committee"])
            record.q = list(diag["q"])
            record.approvals = list(diag["approvals"])
    return records
