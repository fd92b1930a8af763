"""Dataset ingestion: raw CSV in, validated instances out.

The raw table has one row per annotated frame with the columns listed in
core.CSV_COLUMNS. Cleaning removes rows that carry no usable annotation
(static holds, missing grasp/constraint/force) and validates the rest; any
other malformed surviving row is an error, not a silent drop.
"""

from __future__ import annotations

import csv
import io
import json
import warnings
from dataclasses import dataclass, field

from .core import (
    CSV_COLUMNS,
    BadHeader,
    DataError,
    Instance,
    RaggedRow,
    Taxonomy,
    ValidationError,
    validate_instance,
)

# Beyond this many distinct constraint strings the annotation scheme is
# probably being misused (only 20 axis combinations are physically sensible).
CONSTRAINT_WARN_LIMIT = 20


def parse_csv(text: str) -> list[dict[str, str]]:
    """Parse the raw table into one dict per data row.

    The header must match CSV_COLUMNS exactly. A row with the wrong number
    of fields raises RaggedRow with its 1-based file line number (the header
    is line 1).
    """
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise BadHeader("empty input, expected a header row") from None
    header = [h.strip() for h in header]
    if header != list(CSV_COLUMNS):
        raise BadHeader(
            f"bad header: expected {','.join(CSV_COLUMNS)}, got {','.join(header)}"
        )
    records = []
    for lineno, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != len(CSV_COLUMNS):
            raise RaggedRow(lineno, len(CSV_COLUMNS), len(row))
        records.append(dict(zip(CSV_COLUMNS, row)))
    return records


@dataclass
class CleanReport:
    """What clean() kept and why it dropped the rest."""

    total: int = 0
    kept: int = 0
    dropped: dict[str, int] = field(default_factory=dict)
    n_actions: int = 0
    distinct_constraints: int = 0

    def drop(self, reason: str):
        self.dropped[reason] = self.dropped.get(reason, 0) + 1


def clean(
    records: list[dict[str, str]], taxonomy: Taxonomy
) -> tuple[list[Instance], CleanReport]:
    """Validate raw records, dropping the unusable ones.

    Drop rules (counted per reason in the report):
      * task "holding" (case-insensitive): a static hold, not a manipulation
      * empty grasp, constraint, or force annotation
    Every surviving record must validate; a ValidationError is re-raised with
    the record's position so the offending row can be found.
    """
    report = CleanReport(total=len(records))
    out: list[Instance] = []
    actions: set[str] = set()
    constraints: set[str] = set()
    for i, rec in enumerate(records, start=1):
        task = (rec.get("task") or "").strip().lower()
        if task == "holding":
            report.drop("holding-task")
            continue
        if not (rec.get("grasp") or "").strip():
            report.drop("no-grasp")
            continue
        if not (rec.get("constraint") or "").strip():
            report.drop("no-constraint")
            continue
        if not (rec.get("force") or "").strip():
            report.drop("no-force")
            continue
        try:
            inst = validate_instance(rec, taxonomy)
        except ValidationError as e:
            # keep the concrete type and field; only prefix the position
            e.args = (f"record {i}: {e}",)
            raise
        out.append(inst)
        actions.add(inst.action_label)
        constraints.add(inst.constraint)
    report.kept = len(out)
    report.n_actions = len(actions)
    report.distinct_constraints = len(constraints)
    if len(constraints) > CONSTRAINT_WARN_LIMIT:
        warnings.warn(
            f"{len(constraints)} distinct constraint strings "
            f"(more than the {CONSTRAINT_WARN_LIMIT} physically plausible ones)",
            RuntimeWarning,
            stacklevel=2,
        )
    return out, report


def exclude_objects(
    instances: list[Instance], names: list[str]
) -> list[Instance]:
    """Drop every instance whose object is in `names` (canonicalized)."""
    from .core import _canon_name

    drop = {_canon_name(n) for n in names}
    return [inst for inst in instances if inst.object not in drop]


def save_instances(instances: list[Instance], path):
    """Write instances as JSON lines, one object per line, stable key order."""
    with open(path, "w", encoding="utf-8") as fh:
        for inst in instances:
            fh.write(json.dumps(inst.to_dict(), sort_keys=True) + "\n")


def load_instances(path, taxonomy: Taxonomy) -> list[Instance]:
    """Read a JSONL instance file, re-validating every record."""
    out = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as e:
                raise DataError(f"{path} line {lineno}: {e}") from None
            try:
                out.append(validate_instance(rec, taxonomy))
            except ValidationError as e:
                e.args = (f"{path} line {lineno}: {e}",)
                raise
    return out


def instances_to_csv(instances: list[Instance]) -> str:
    """Render instances back to the raw CSV schema.

    Columns the Instance does not carry (profession, video, instance_id) are
    filled with deterministic placeholders; instance_id numbers rows from 1.
    """
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for i, inst in enumerate(instances, start=1):
        w.writerow(
            [
                inst.subject,
                "unknown",
                inst.sequence_id.rsplit("-", 1)[0] or inst.sequence_id,
                inst.sequence_id,
                str(i),
                inst.object,
                inst.task,
                inst.grasp,
                inst.opposition,
                inst.dimension,
                inst.constraint,
                inst.force,
            ]
        )
    return buf.getvalue()
