"""Tabular reports rendered as CSV, JSON or markdown."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field

FORMATS = ("csv", "json", "markdown")
EXTENSIONS = {"csv": "csv", "json": "json", "markdown": "md"}


@dataclass
class Table:
    name: str
    columns: list[str]
    rows: list[dict] = field(default_factory=list)
    title: str = ""

    def add(self, row: dict) -> None:
        unknown = set(row) - set(self.columns)
        if unknown:
            raise KeyError(f"unknown columns for table {self.name}: {sorted(unknown)}")
        self.rows.append(row)


def _json_value(v):
    if isinstance(v, float) and not math.isfinite(v):
        return repr(v)
    return v


def _csv_value(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _md_value(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "yes" if v else "no"
    if isinstance(v, float):
        return f"{v:.2f}" if math.isfinite(v) else repr(v)
    return str(v).replace("|", "\\|")


def render_csv(table: Table) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(table.columns)
    for row in table.rows:
        w.writerow([_csv_value(row.get(c)) for c in table.columns])
    return buf.getvalue()


def render_markdown(table: Table) -> str:
    lines = []
    if table.title:
        lines += [f"## {table.title}", ""]
    lines.append("| " + " | ".join(table.columns) + " |")
    lines.append("|" + "|".join("---" for _ in table.columns) + "|")
    for row in table.rows:
        lines.append("| " + " | ".join(_md_value(row.get(c)) for c in table.columns) + " |")
    return "\n".join(lines) + "\n"


def render_json(tables: list[Table]) -> str:
    doc = {t.name: [{c: _json_value(r.get(c)) for c in t.columns} for r in t.rows] for t in tables}
    return json.dumps(doc, indent=2, allow_nan=False) + "\n"


def render(tables: list[Table], fmt: str) -> dict[str, str]:
    """Map of file stem to rendered text; JSON stays a single document."""
    if fmt == "json":
        return {tables[0].name: render_json(tables)}
    fn = render_csv if fmt == "csv" else render_markdown
    return {t.name: fn(t) for t in tables}
