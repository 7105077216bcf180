"""Domain types and file ingestion for fixation datasets.

Fixation file: UTF-8 JSON Lines, one viewing session per line::

    {"sketch_id": "s1", "category": "airplane", "subject_id": "u3",
     "regime": "primed", "fixations": [{"x": 512.0, "y": 300.5, "t": 240.0}, ...]}

Annotation file: a single JSON document::

    {"sketches": [{"sketch_id": "s1",
                   "parts": [{"label": "wing", "polygon": [[x, y], ...]}, ...]}]}

Coordinates are pixels in the stimulus frame, ``0 <= x < width``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np

REGIMES = ("primed", "unprimed")


class DataError(ValueError):
    """Malformed or invalid input data. ``line`` is 1-based when known."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


@dataclass(frozen=True)
class StimulusGeometry:
    width_px: int = 1024
    height_px: int = 1024
    pixels_per_degree: float = 36.0

    def __post_init__(self):
        if int(self.width_px) <= 0 or int(self.height_px) <= 0:
            raise ValueError("stimulus width and height must be positive")
        if not self.pixels_per_degree > 0:
            raise ValueError("pixels_per_degree must be positive")

    @property
    def shape(self) -> tuple[int, int]:
        """Grid shape as (rows, cols)."""
        return (int(self.height_px), int(self.width_px))

    def contains(self, x: float, y: float) -> bool:
        return 0.0 <= x < self.width_px and 0.0 <= y < self.height_px

    def to_dict(self) -> dict:
        return {
            "width_px": int(self.width_px),
            "height_px": int(self.height_px),
            "pixels_per_degree": float(self.pixels_per_degree),
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "StimulusGeometry":
        return cls(int(d["width_px"]), int(d["height_px"]), float(d["pixels_per_degree"]))


@dataclass(frozen=True)
class Fixation:
    x: float
    y: float
    duration_ms: float


@dataclass(frozen=True)
class ViewingSession:
    sketch_id: str
    category: str
    subject_id: str
    regime: str
    fixations: tuple[Fixation, ...]

    def __post_init__(self):
        if self.regime not in REGIMES:
            raise ValueError(f"regime must be one of {REGIMES}, got {self.regime!r}")
        if len(self.fixations) == 0:
            raise ValueError("a viewing session needs at least one fixation")

    def __len__(self):
        return len(self.fixations)

    @property
    def xy(self) -> np.ndarray:
        """Fixation locations as an (n, 2) array of (x, y)."""
        return np.array([(f.x, f.y) for f in self.fixations], dtype=float)

    @property
    def durations(self) -> np.ndarray:
        return np.array([f.duration_ms for f in self.fixations], dtype=float)


@dataclass(frozen=True)
class Dataset:
    geometry: StimulusGeometry
    sessions: tuple[ViewingSession, ...] = ()

    @property
    def categories(self) -> list[str]:
        return sorted({s.category for s in self.sessions})

    @property
    def max_sequence_length(self) -> int:
        """N_F: the longest fixation sequence in the dataset (0 if empty)."""
        return max((len(s) for s in self.sessions), default=0)

    @property
    def subjects(self) -> list[str]:
        return sorted({s.subject_id for s in self.sessions})

    def __len__(self):
        return len(self.sessions)

    def filter(self, regime: str = "both", categories: Iterable[str] | None = None) -> "Dataset":
        """Sessions matching ``regime`` ("primed", "unprimed" or "both")."""
        if regime not in ("both",) + REGIMES:
            raise ValueError(f"unknown regime filter {regime!r}")
        cats = None if categories is None else set(categories)
        keep = tuple(
            s
            for s in self.sessions
            if (regime == "both" or s.regime == regime) and (cats is None or s.category in cats)
        )
        return Dataset(self.geometry, keep)

    def by_sketch(self) -> dict[str, list[ViewingSession]]:
        out: dict[str, list[ViewingSession]] = {}
        for s in self.sessions:
            out.setdefault(s.sketch_id, []).append(s)
        return out

    def by_category(self) -> dict[str, list[ViewingSession]]:
        out: dict[str, list[ViewingSession]] = {}
        for s in self.sessions:
            out.setdefault(s.category, []).append(s)
        return out

    def require_nonempty(self):
        if not self.sessions:
            raise DataError("dataset has no viewing sessions")


@dataclass(frozen=True)
class PartAnnotation:
    sketch_id: str
    parts: tuple[tuple[str, tuple[tuple[float, float], ...]], ...] = field(default_factory=tuple)

    @property
    def labels(self) -> list[str]:
        return sorted({label for label, _ in self.parts})


def _number(value, what: str, line: int | None) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise DataError(f"{what} must be a number, got {value!r}", line)
    value = float(value)
    if not math.isfinite(value):
        raise DataError(f"{what} must be finite", line)
    return value


def _session_from_obj(obj, geometry: StimulusGeometry, line: int) -> ViewingSession:
    if not isinstance(obj, dict):
        raise DataError("expected a JSON object", line)
    for key in ("sketch_id", "category", "subject_id", "regime", "fixations"):
        if key not in obj:
            raise DataError(f"missing key {key!r}", line)
    for key in ("sketch_id", "category", "subject_id"):
        if not isinstance(obj[key], str) or not obj[key]:
            raise DataError(f"{key} must be a non-empty string", line)
    if obj["regime"] not in REGIMES:
        raise DataError(f"regime must be 'primed' or 'unprimed', got {obj['regime']!r}", line)
    raw = obj["fixations"]
    if not isinstance(raw, list) or not raw:
        raise DataError("fixations must be a non-empty list", line)

    fixations = []
    outside = 0
    for k, f in enumerate(raw):
        if not isinstance(f, dict) or not {"x", "y", "t"} <= f.keys():
            raise DataError(f"fixation {k} needs keys x, y, t", line)
        x = _number(f["x"], f"fixation {k} x", line)
        y = _number(f["y"], f"fixation {k} y", line)
        t = _number(f["t"], f"fixation {k} t", line)
        if t <= 0:
            raise DataError(f"fixation {k} has non-positive duration {t}", line)
        if not geometry.contains(x, y):
            outside += 1
        fixations.append(Fixation(x, y, t))
    if outside:
        raise DataError(
            f"{outside} fixation(s) outside the {geometry.width_px}x{geometry.height_px} stimulus",
            line,
        )
    return ViewingSession(obj["sketch_id"], obj["category"], obj["subject_id"], obj["regime"], tuple(fixations))


def parse_dataset(lines: Iterable[str], geometry: StimulusGeometry = StimulusGeometry()) -> Dataset:
    sessions = []
    seen: dict[tuple[str, str], int] = {}
    for lineno, text in enumerate(lines, start=1):
        if not text.strip():
            continue
        try:
            obj = json.loads(text)
        except json.JSONDecodeError as exc:
            raise DataError(f"malformed JSON ({exc.msg})", lineno) from None
        session = _session_from_obj(obj, geometry, lineno)
        key = (session.sketch_id, session.subject_id)
        if key in seen:
            raise DataError(
                f"duplicate (sketch_id, subject_id) {key}, first seen on line {seen[key]}", lineno
            )
        seen[key] = lineno
        sessions.append(session)
    return Dataset(geometry, tuple(sessions))


def load_dataset(path, geometry: StimulusGeometry = StimulusGeometry()) -> Dataset:
    with open(path, encoding="utf-8") as fh:
        return parse_dataset(fh, geometry)


def session_to_obj(s: ViewingSession) -> dict:
    return {
        "sketch_id": s.sketch_id,
        "category": s.category,
        "subject_id": s.subject_id,
        "regime": s.regime,
        "fixations": [{"x": float(f.x), "y": float(f.y), "t": float(f.duration_ms)} for f in s.fixations],
    }


def dumps_dataset(dataset: Dataset) -> str:
    """Canonical JSON Lines text: fixed key order, shortest round-trip floats."""
    return "".join(
        json.dumps(session_to_obj(s), separators=(", ", ": "), ensure_ascii=False) + "\n"
        for s in dataset.sessions
    )


def write_dataset(dataset: Dataset, path) -> None:
    Path(path).write_text(dumps_dataset(dataset), encoding="utf-8")


def _polygon(raw, where: str) -> tuple[tuple[float, float], ...]:
    if not isinstance(raw, list):
        raise DataError(f"{where}: polygon must be a list of [x, y] pairs")
    pts = []
    for v in raw:
        if not isinstance(v, (list, tuple)) or len(v) != 2:
            raise DataError(f"{where}: vertex {v!r} is not an [x, y] pair")
        pts.append((_number(v[0], f"{where} x", None), _number(v[1], f"{where} y", None)))
    if len(pts) < 3:
        raise DataError(f"{where}: degenerate polygon with {len(pts)} vertices (need at least 3)")
    return tuple(pts)


def parse_annotations(doc) -> dict[str, PartAnnotation]:
    if not isinstance(doc, dict) or not isinstance(doc.get("sketches"), list):
        raise DataError("annotation document needs a 'sketches' list")
    out: dict[str, PartAnnotation] = {}
    for entry in doc["sketches"]:
        sid = entry.get("sketch_id") if isinstance(entry, dict) else None
        if not isinstance(sid, str) or not sid:
            raise DataError("annotation entry without a sketch_id")
        if sid in out:
            raise DataError(f"sketch {sid!r} annotated twice")
        parts = []
        for k, p in enumerate(entry.get("parts", [])):
            label = p.get("label") if isinstance(p, dict) else None
            if not isinstance(label, str) or not label:
                raise DataError(f"sketch {sid!r} part {k}: missing label")
            parts.append((label, _polygon(p.get("polygon"), f"sketch {sid!r} part {k} ({label})")))
        out[sid] = PartAnnotation(sid, tuple(parts))
    return out


def load_annotations(path) -> dict[str, PartAnnotation]:
    with open(path, encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise DataError(f"malformed JSON ({exc.msg})", exc.lineno) from None
    return parse_annotations(doc)


def dumps_annotations(annotations: Mapping[str, PartAnnotation]) -> str:
    doc = {
        "sketches": [
            {
                "sketch_id": a.sketch_id,
                "parts": [
                    {"label": label, "polygon": [[float(x), float(y)] for x, y in poly]}
                    for label, poly in a.parts
                ],
            }
            for a in annotations.values()
        ]
    }
    return json.dumps(doc, indent=1, ensure_ascii=False) + "\n"


def write_annotations(annotations: Mapping[str, PartAnnotation], path) -> None:
    Path(path).write_text(dumps_annotations(annotations), encoding="utf-8")
