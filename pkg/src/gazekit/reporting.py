"""Report documents and their JSON / CSV / text renderings.

JSON is canonical. CSV and the aligned text table are derived from a
report's ``rows`` (one flat dict per row).
"""

from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path
from typing import Sequence

from gazekit import __version__

FORMATS = ("json", "csv", "text")

# Values measured on the human study data; reports carry them for comparison only.
REFERENCE_VALUES = {
    "predict-category": {"median_rate_with_duration": 0.372, "median_rate_without_duration": 0.32},
    "part-similarity": {"median_similarity_low": 0.57, "median_similarity_high": 0.73, "zscore_separation": 2.0},
    "evaluate-parts": {"pmap_min_accuracy": 0.61},
    "correlate-duration": {"primed": -0.81, "unprimed": -0.62},
}


def document(command: str, seed: int | None, config: dict, body: dict, rows: Sequence[dict] = ()) -> dict:
    body = dict(body)
    # a module-level config (e.g. evaluation settings) is folded into the run config
    merged = {**config, **body.pop("config", {})}
    doc = {"version": __version__, "command": command, "seed": seed, "config": merged}
    if command in REFERENCE_VALUES:
        doc["reference_values"] = REFERENCE_VALUES[command]
    doc.update(body)
    doc["rows"] = list(rows)
    return doc


def _clean(value):
    if isinstance(value, float) and not math.isfinite(value):
        return None
    if isinstance(value, dict):
        return {k: _clean(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_clean(v) for v in value]
    return value


def to_json(doc: dict) -> str:
    return json.dumps(_clean(doc), indent=2, ensure_ascii=False) + "\n"


def _columns(rows) -> list[str]:
    cols: list[str] = []
    for r in rows:
        for k in r:
            if k not in cols:
                cols.append(k)
    return cols


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return "nan" if not math.isfinite(v) else f"{v:.6g}"
    return str(v)


def to_csv(doc: dict) -> str:
    rows = doc.get("rows", [])
    buf = io.StringIO()
    cols = _columns(rows)
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(cols)
    for r in rows:
        writer.writerow([_cell(r.get(c)) for c in cols])
    return buf.getvalue()


def to_text(doc: dict) -> str:
    head = [f"# gazekit {doc['version']}  {doc['command']}  seed={doc['seed']}"]
    for k, v in doc["config"].items():
        head.append(f"#   {k} = {v}")
    rows = doc.get("rows", [])
    cols = _columns(rows)
    if not cols:
        return "\n".join(head) + "\n"
    table = [cols] + [[_cell(r.get(c)) for c in cols] for r in rows]
    widths = [max(len(row[i]) for row in table) for i in range(len(cols))]
    lines = []
    for n, row in enumerate(table):
        lines.append("  ".join(
            cell.ljust(w) if i == 0 else cell.rjust(w) for i, (cell, w) in enumerate(zip(row, widths))
        ).rstrip())
        if n == 0:
            lines.append("  ".join("-" * w for w in widths))
    return "\n".join(head + lines) + "\n"


def render(doc: dict, fmt: str) -> str:
    return {"json": to_json, "csv": to_csv, "text": to_text}[fmt](doc)


def write_report(doc: dict, path: Path, fmt: str) -> Path:
    path.write_text(render(doc, fmt), encoding="utf-8")
    return path
