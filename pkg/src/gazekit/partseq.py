"""Part-label sequences: fixation-to-part assignment and alignment similarity.

Assignment runs in three stages per fixation:

1. inside the polygons of exactly one part -> that part;
2. inside polygons of several parts -> the part owning the smallest-area
   containing polygon (equal areas: lexicographically first label);
3. inside none -> the part with the nearest polygon boundary, provided it
   lies within one degree of visual angle; otherwise ``UNASSIGNED``.

Containment uses the even-odd rule and counts boundary points as inside.

Similarity between two label sequences is the Needleman-Wunsch global
alignment score with match 1, mismatch 0 and gap 0 (the length of the
longest common subsequence), divided by the longer sequence's length.
"""

from __future__ import annotations

import itertools
import logging
import statistics
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from gazekit._parallel import parallel_map
from gazekit.dataset import Dataset, PartAnnotation, StimulusGeometry, ViewingSession
from gazekit.rng import Rng

log = logging.getLogger(__name__)

UNASSIGNED = "UNASSIGNED"


@dataclass(frozen=True)
class PartLabelSequence:
    sketch_id: str
    subject_id: str
    labels: tuple[str, ...]
    source_indices: tuple[int, ...] = ()
    category: str = ""

    def __post_init__(self):
        if not self.source_indices:
            object.__setattr__(self, "source_indices", tuple(range(len(self.labels))))

    def __len__(self):
        return len(self.labels)

    def dropping_unassigned(self) -> "PartLabelSequence":
        keep = [(l, i) for l, i in zip(self.labels, self.source_indices) if l != UNASSIGNED]
        return PartLabelSequence(
            self.sketch_id,
            self.subject_id,
            tuple(l for l, _ in keep),
            tuple(i for _, i in keep),
            self.category,
        )

    def to_dict(self) -> dict:
        return {
            "sketch_id": self.sketch_id,
            "subject_id": self.subject_id,
            "category": self.category,
            "labels": list(self.labels),
            "source_indices": list(self.source_indices),
        }


# --- geometry ---------------------------------------------------------------

def polygon_area(poly) -> float:
    p = np.asarray(poly, float)
    x, y = p[:, 0], p[:, 1]
    return 0.5 * abs(float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1))))


def boundary_distance(points, poly) -> np.ndarray:
    """Distance from each point to the closed polygon's boundary."""
    pts = np.asarray(points, float).reshape(-1, 2)
    a = np.asarray(poly, float)
    b = np.roll(a, -1, axis=0)
    ab = b - a
    ap = pts[:, None, :] - a[None, :, :]
    denom = np.einsum("ij,ij->i", ab, ab)
    t = np.divide(np.einsum("kij,ij->ki", ap, ab), denom, out=np.zeros((len(pts), len(a))), where=denom > 0)
    t = np.clip(t, 0.0, 1.0)
    closest = a[None] + t[..., None] * ab[None]
    return np.sqrt(((pts[:, None, :] - closest) ** 2).sum(axis=2)).min(axis=1)


def points_in_polygon(points, poly, boundary_tol: float = 1e-9) -> np.ndarray:
    """Even-odd containment; points on the boundary count as inside."""
    pts = np.asarray(points, float).reshape(-1, 2)
    a = np.asarray(poly, float)
    b = np.roll(a, -1, axis=0)
    px, py = pts[:, 0:1], pts[:, 1:2]
    x0, y0, x1, y1 = a[:, 0], a[:, 1], b[:, 0], b[:, 1]
    straddles = (y0 > py) != (y1 > py)
    with np.errstate(divide="ignore", invalid="ignore"):
        x_cross = x0 + (py - y0) * (x1 - x0) / (y1 - y0)
    crossings = np.sum(straddles & (px < x_cross), axis=1)
    inside = (crossings % 2) == 1
    return inside | (boundary_distance(pts, poly) <= boundary_tol)


def assign_labels(xy, annotation: PartAnnotation, max_distance: float) -> list[str]:
    xy = np.asarray(xy, float).reshape(-1, 2)
    if not annotation.parts:
        return [UNASSIGNED] * len(xy)
    areas = np.array([polygon_area(poly) for _, poly in annotation.parts])
    labels = [label for label, _ in annotation.parts]
    inside = np.stack([points_in_polygon(xy, poly) for _, poly in annotation.parts], axis=1)
    dists = np.stack([boundary_distance(xy, poly) for _, poly in annotation.parts], axis=1)
    out = []
    for k in range(len(xy)):
        hit = np.flatnonzero(inside[k])
        if hit.size:
            # smallest-area containing polygon; this also covers the single-part case
            out.append(min((areas[j], labels[j]) for j in hit)[1])
            continue
        d, label = min((dists[k, j], labels[j]) for j in range(len(labels)))
        out.append(label if d <= max_distance else UNASSIGNED)
    return out


def assign_parts(
    session: ViewingSession,
    annotation: PartAnnotation | None,
    geometry: StimulusGeometry = StimulusGeometry(),
) -> PartLabelSequence:
    if annotation is None:
        raise KeyError(f"no part annotation for sketch {session.sketch_id!r}")
    if annotation.sketch_id != session.sketch_id:
        raise ValueError(f"annotation is for {annotation.sketch_id!r}, session for {session.sketch_id!r}")
    labels = assign_labels(session.xy, annotation, geometry.pixels_per_degree)
    return PartLabelSequence(session.sketch_id, session.subject_id, tuple(labels), category=session.category)


def assign_dataset(
    dataset: Dataset, annotations: Mapping[str, PartAnnotation], drop_unassigned: bool = False
) -> list[PartLabelSequence]:
    out = []
    for s in dataset.sessions:
        seq = assign_parts(s, annotations.get(s.sketch_id), dataset.geometry)
        out.append(seq.dropping_unassigned() if drop_unassigned else seq)
    return out


# --- alignment --------------------------------------------------------------

def nw_score(a: Sequence, b: Sequence) -> int:
    """Best global alignment score with match=1, mismatch=0, gap=0."""
    n, m = len(a), len(b)
    prev = [0] * (m + 1)
    for i in range(1, n + 1):
        cur = [0] * (m + 1)
        ai = a[i - 1]
        for j in range(1, m + 1):
            diag = prev[j - 1] + (1 if ai == b[j - 1] else 0)
            cur[j] = max(diag, prev[j], cur[j - 1])
        prev = cur
    return prev[m]


def _labels(seq) -> tuple:
    return tuple(seq.labels) if isinstance(seq, PartLabelSequence) else tuple(seq)


def nw_similarity(a, b) -> float:
    """Alignment score normalized by the longer sequence; 1 iff identical."""
    a, b = _labels(a), _labels(b)
    if not a or not b:
        raise ValueError("similarity is undefined for empty sequences")
    return nw_score(a, b) / max(len(a), len(b))


def _batch_nw_scores(a_codes: np.ndarray, b_batch: np.ndarray) -> np.ndarray:
    """:func:`nw_score` of ``a`` against every row of ``b_batch``."""
    k, m = b_batch.shape
    prev = np.zeros((k, m + 1), dtype=np.int32)
    for ai in a_codes:
        cur = np.zeros_like(prev)
        match = (b_batch == ai).astype(np.int32)
        diag = prev[:, :-1] + match
        # the left-neighbour recurrence is a running maximum along the row
        cur[:, 1:] = np.maximum.accumulate(np.maximum(diag, prev[:, 1:]), axis=1)
        prev = cur
    return prev[:, m]


def random_similarities(a, length: int, vocabulary: Sequence[str], rng: Rng, n_random: int) -> np.ndarray:
    vocab = sorted(set(vocabulary))
    code = {v: i for i, v in enumerate(vocab)}
    a = _labels(a)
    a_codes = np.array([code.get(x, -1) for x in a])
    batch = rng.integers(0, len(vocab), size=(n_random, length))
    return _batch_nw_scores(a_codes, batch) / max(len(a), length)


def similarity_zscore(a, b, vocabulary, rng: Rng, n_random: int = 100) -> float:
    """z-score of sim(a, b) against sim(a, r) for uniform random r with len(r) = len(b)."""
    if len(set(vocabulary)) < 2:
        raise ValueError("random label sequences need a vocabulary of at least two labels")
    if n_random < 2:
        raise ValueError("n_random must be at least 2")
    s = nw_similarity(a, b)
    rand = random_similarities(a, len(_labels(b)), vocabulary, rng, n_random)
    sd = rand.std(ddof=1)
    if sd == 0:
        raise ValueError("random similarities have zero spread")
    return float((s - rand.mean()) / sd)


@dataclass
class SimilarityReport:
    per_category_median_similarity: dict[str, float]
    per_category_median_zscore: dict[str, float]
    n_pairs: dict[str, int] = field(default_factory=dict)
    skipped_categories: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "per_category_median_similarity": self.per_category_median_similarity,
            "per_category_median_zscore": self.per_category_median_zscore,
            "n_pairs": self.n_pairs,
            "skipped_categories": self.skipped_categories,
        }


def category_vocabulary(annotations: Mapping[str, PartAnnotation], sketch_ids) -> list[str]:
    return sorted({label for sid in sketch_ids if sid in annotations for label in annotations[sid].labels})


def similarity_report(
    dataset: Dataset,
    annotations: Mapping[str, PartAnnotation],
    rng: Rng,
    n_random: int = 100,
    drop_unassigned: bool = False,
    threads: int = 1,
) -> SimilarityReport:
    """Median pairwise similarity and z-score over all sequence pairs per category.

    Each unordered pair (i, j) is scored once with i before j in
    (sketch_id, subject_id) order; its random stream is derived from the
    pair key, so results do not depend on scheduling.
    """
    seqs = assign_dataset(dataset, annotations, drop_unassigned)
    by_cat: dict[str, list[PartLabelSequence]] = {}
    for s in seqs:
        if len(s):
            by_cat.setdefault(s.category, []).append(s)

    med_sim, med_z, n_pairs, skipped = {}, {}, {}, []
    for cat in sorted({s.category for s in dataset.sessions}):
        group = sorted(by_cat.get(cat, []), key=lambda s: (s.sketch_id, s.subject_id))
        vocab = category_vocabulary(annotations, {s.sketch_id for s in group})
        if not drop_unassigned and any(UNASSIGNED in s.labels for s in group):
            vocab = vocab + [UNASSIGNED]
        if len(group) < 2 or len(vocab) < 2:
            log.warning("skipping category %s: %d sequences, %d labels", cat, len(group), len(vocab))
            skipped.append(cat)
            continue

        def score(pair, vocab=vocab):
            a, b = pair
            key = (a.sketch_id, a.subject_id, b.sketch_id, b.subject_id)
            try:
                z = similarity_zscore(a, b, vocab, rng.derive("pair", *key), n_random)
            except ValueError:
                z = None
            return nw_similarity(a, b), z

        results = parallel_map(score, list(itertools.combinations(group, 2)), threads)
        med_sim[cat] = float(statistics.median(r[0] for r in results))
        zs = [r[1] for r in results if r[1] is not None]
        med_z[cat] = float(statistics.median(zs)) if zs else float("nan")
        n_pairs[cat] = len(results)
    return SimilarityReport(med_sim, med_z, n_pairs, skipped)
