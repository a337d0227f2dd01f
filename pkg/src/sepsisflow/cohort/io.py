"""Cohort CSV ingestion and transition-file serialization.

CSV schema: ``patient_id,timestamp_hours,<30 feature columns>,action,death_time_hours``
with empty cells for missing values. Transitions serialize as JSON lines,
which round-trips float64 bit-exactly.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .features import CANONICAL_FEATURES, FEATURE_NAMES, N_ACTIONS
from .episodes import Transition

CSV_HEADER = ["patient_id", "timestamp_hours", *FEATURE_NAMES, "action", "death_time_hours"]


class SchemaError(ValueError):
    pass


class RowError(ValueError):
    def __init__(self, line_no: int, msg: str):
        super().__init__(f"line {line_no}: {msg}")
        self.line_no = line_no


@dataclass
class RawRecord:
    t: float
    values: list  # 30 entries, float or None
    action: int | None
    death_time: float | None


@dataclass
class CohortTable:
    records: dict[str, list[RawRecord]] = field(default_factory=dict)
    clip_counts: dict[str, int] = field(default_factory=dict)

    def patient_ids(self):
        return sorted(self.records)

    @property
    def n_rows(self):
        return sum(len(v) for v in self.records.values())


def ingest_cohort(path, spec=CANONICAL_FEATURES) -> CohortTable:
    """Parse and validate a cohort CSV; clips implausible values and counts
    every clip per feature in the audit log."""
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    lines = text.splitlines()
    table = CohortTable(clip_counts={f.name: 0 for f in spec})
    if not lines or not lines[0].strip():
        warnings.warn(f"{path}: empty cohort file")
        return table

    header = lines[0].split(",")
    if header != CSV_HEADER:
        missing = set(CSV_HEADER) - set(header)
        extra = set(header) - set(CSV_HEADER)
        raise SchemaError(
            f"header mismatch: missing columns {sorted(missing)}, unknown columns {sorted(extra)}")

    n_cols = len(CSV_HEADER)
    for line_no, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        cells = line.split(",")
        if len(cells) != n_cols:
            raise RowError(line_no, f"expected {n_cols} cells, got {len(cells)}")
        pid = cells[0]
        if not pid:
            raise RowError(line_no, "empty patient_id")
        try:
            t = float(cells[1])
        except ValueError:
            raise RowError(line_no, f"bad timestamp {cells[1]!r}") from None
        values = []
        for f, cell in zip(spec, cells[2:2 + len(spec)]):
            if cell == "":
                values.append(None)
                continue
            try:
                v = float(cell)
            except ValueError:
                raise RowError(line_no, f"bad value {cell!r} for {f.name}") from None
            clipped = f.clip(v)
            if clipped != v:
                table.clip_counts[f.name] += 1
            values.append(clipped)
        action_cell = cells[2 + len(spec)]
        if action_cell == "":
            action = None
        else:
            try:
                action = int(action_cell)
            except ValueError:
                raise RowError(line_no, f"bad action {action_cell!r}") from None
            if not 0 <= action < N_ACTIONS:
                raise RowError(line_no, f"action {action} out of range")
        death_cell = cells[-1]
        death_time = float(death_cell) if death_cell != "" else None
        table.records.setdefault(pid, []).append(
            RawRecord(t=t, values=values, action=action, death_time=death_time))

    for pid, rows in table.records.items():
        rows.sort(key=lambda r: r.t)
        seen = set()
        for r in rows:
            if r.t in seen:
                raise SchemaError(f"patient {pid}: duplicate timestamp {r.t}")
            seen.add(r.t)
    return table


def write_cohort_csv(path, table: CohortTable):
    out = [",".join(CSV_HEADER)]
    for pid in table.patient_ids():
        for row in table.records[pid]:
            cells = [pid, repr(row.t)]
            cells += ["" if v is None else repr(float(v)) for v in row.values]
            cells.append("" if row.action is None else str(row.action))
            cells.append("" if row.death_time is None else repr(row.death_time))
            out.append(",".join(cells))
    Path(path).write_text("\n".join(out) + "\n", encoding="utf-8")


def save_transitions(path, transitions: list[Transition]):
    with open(path, "w", encoding="utf-8") as fh:
        for t in transitions:
            fh.write(json.dumps({
                "s": t.s.tolist(), "a": t.a, "r": t.r,
                "s_next": t.s_next.tolist(), "d": t.d,
                "patient_id": t.patient_id, "t_index": t.t_index,
                "provenance": t.provenance,
            }) + "\n")


def load_transitions(path) -> list[Transition]:
    transitions = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            d = json.loads(line)
            transitions.append(Transition(
                s=np.asarray(d["s"], dtype=np.float64), a=int(d["a"]), r=float(d["r"]),
                s_next=np.asarray(d["s_next"], dtype=np.float64), d=bool(d["d"]),
                patient_id=d.get("patient_id", ""), t_index=d.get("t_index", 0),
                provenance=d.get("provenance", "real"),
            ))
    return transitions
