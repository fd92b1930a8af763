"""Render benchmark results as Markdown and CSV tables.

One pivot table per section: classifier rows by encoding columns, cells
showing the two-fold mean accuracy to four decimals. The best cell of each
column is bold (ties all bold). The CSV companion is long-form and carries
the same four-decimal strings, so numbers parsed back from it compare
equal to the rendered report. Timings never appear in either output.
"""

from __future__ import annotations

import csv
import io

from .bench import CellResult, GridResult

CSV_COLUMNS = (
    "section", "column", "row", "kind", "target",
    "rows", "classes", "accuracy", "fold_ab", "fold_ba", "pooled",
)


def _fmt(x: float) -> str:
    return f"{x:.4f}"


def _ordered(seq):
    seen = []
    for s in seq:
        if s not in seen:
            seen.append(s)
    return seen


def render_csv(result: GridResult) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for c in result.cells:
        w.writerow(
            (
                c.section, c.column, c.row, c.kind, c.target,
                str(c.rows), str(c.classes),
                _fmt(c.accuracy), _fmt(c.fold_ab), _fmt(c.fold_ba), _fmt(c.pooled),
            )
        )
    return buf.getvalue()


def _section_table(cells: list[CellResult], failed: dict[tuple[str, str], str]) -> list[str]:
    columns = _ordered([c.column for c in cells] + [k[0] for k in failed])
    rows = _ordered([c.row for c in cells] + [k[1] for k in failed])
    by_pos = {(c.column, c.row): c for c in cells}
    best: dict[str, float] = {}
    for c in cells:
        if c.accuracy > best.get(c.column, -1.0):
            best[c.column] = c.accuracy
    lines = ["| classifier | " + " | ".join(columns) + " |"]
    lines.append("|---" * (len(columns) + 1) + "|")
    for r in rows:
        out = [r]
        for col in columns:
            cell = by_pos.get((col, r))
            if cell is None:
                out.append("failed" if (col, r) in failed else "")
            elif cell.accuracy == best.get(col):
                out.append(f"**{_fmt(cell.accuracy)}**")
            else:
                out.append(_fmt(cell.accuracy))
        lines.append("| " + " | ".join(out) + " |")
    return lines


def render_markdown(result: GridResult) -> str:
    lines = [f"# Benchmark report: {result.name}", ""]
    lines.append(
        f"Grid seed {result.seed}; cells show mean accuracy over the two fold"
        " orientations, best per column in bold."
    )
    lines.append("")
    sections = _ordered(
        [c.section for c in result.cells] + [f["section"] for f in result.failures]
    )
    for sect in sections:
        cells = [c for c in result.cells if c.section == sect]
        failed = {
            (f["column"], f["row"]): f["error"]
            for f in result.failures
            if f["section"] == sect
        }
        lines.append(f"## {sect}")
        lines.append("")
        if cells:
            meta = _ordered(
                [(c.column, c.target, c.rows, c.classes) for c in cells]
            )
            lines.append(
                "Columns: "
                + "; ".join(
                    f"{col} (target {target}, {rows} rows, {classes} classes)"
                    for col, target, rows, classes in meta
                )
                + "."
            )
            lines.append("")
        lines.extend(_section_table(cells, failed))
        lines.append("")
        if failed:
            lines.append("Failures:")
            lines.append("")
            for (col, row), err in sorted(failed.items()):
                lines.append(f"- {col} / {row}: {err}")
            lines.append("")
    return "\n".join(lines).rstrip() + "\n"


def write_report(result: GridResult, markdown_path, csv_path) -> None:
    with open(markdown_path, "w", encoding="utf-8") as fh:
        fh.write(render_markdown(result))
    with open(csv_path, "w", encoding="utf-8", newline="") as fh:
        fh.write(render_csv(result))
