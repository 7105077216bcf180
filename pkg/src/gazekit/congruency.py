"""Inter-observer congruency scored with shuffled AUC.

For a sketch viewed by N subjects, each subject's fixations are scored
against a standardized map built from everyone else's fixations on that
sketch. Negatives are fixations recorded on *other* sketches of the same
dataset split, which cancels the shared centre bias.
"""

from __future__ import annotations

import statistics
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from gazekit._parallel import parallel_map
from gazekit.dataset import Dataset, Fixation, StimulusGeometry, ViewingSession
from gazekit.fixmap import FixationMap, sketch_map
from gazekit.rng import Rng


def roc_auc(pos_values, neg_values) -> float:
    """Area under the ROC curve swept over every distinct sampled value.

    Thresholds run from high to low; a sample counts as positive when its
    value is >= the threshold. Tied positives and negatives move the curve
    diagonally, which the trapezoid rule credits by half.
    """
    pos = np.sort(np.asarray(pos_values, float))
    neg = np.sort(np.asarray(neg_values, float))
    if pos.size == 0 or neg.size == 0:
        raise ValueError("sAUC needs at least one positive and one negative")
    thresholds = np.unique(np.concatenate([pos, neg]))[::-1]
    tp = pos.size - np.searchsorted(pos, thresholds, side="left")
    fp = neg.size - np.searchsorted(neg, thresholds, side="left")
    tpr = np.concatenate([[0.0], tp / pos.size])
    fpr = np.concatenate([[0.0], fp / neg.size])
    # the lowest threshold already reaches (1, 1)
    return float(np.sum((fpr[1:] - fpr[:-1]) * (tpr[1:] + tpr[:-1]) / 2.0))


def sauc(positives: Sequence[Fixation], negatives: Sequence[Fixation], saliency: FixationMap) -> float:
    if not len(positives) or not len(negatives):
        raise ValueError("sAUC needs non-empty positive and negative fixation sets")
    pos = saliency.sample([(f.x, f.y) for f in positives])
    neg = saliency.sample([(f.x, f.y) for f in negatives])
    return roc_auc(pos, neg)


def uniform_lattice(geometry: StimulusGeometry, n: int = 64) -> np.ndarray:
    """``n`` x ``n`` evenly spaced cell-centre points covering the stimulus."""
    xs = (np.arange(n) + 0.5) * geometry.width_px / n
    ys = (np.arange(n) + 0.5) * geometry.height_px / n
    gx, gy = np.meshgrid(xs, ys)
    return np.column_stack([gx.ravel(), gy.ravel()])


def _leave_one_out_maps(sessions, geometry, sigma_px):
    maps = []
    for i in range(len(sessions)):
        others = [f for j, s in enumerate(sessions) if j != i for f in s.fixations]
        maps.append(sketch_map(others, geometry, sigma_px))
    return maps


def ioc_sketch(
    sessions: Sequence[ViewingSession],
    negative_pool: Sequence[Fixation],
    sigma_px: float = 36.0,
    geometry: StimulusGeometry = StimulusGeometry(),
) -> float:
    """Mean sAUC of each subject against the map of the remaining subjects."""
    if len(sessions) < 2:
        raise ValueError("IOC needs at least two subjects on the sketch")
    if not len(negative_pool):
        raise ValueError("IOC needs a non-empty negative pool")
    maps = _leave_one_out_maps(sessions, geometry, sigma_px)
    return float(np.mean([sauc(s.fixations, negative_pool, m) for s, m in zip(sessions, maps)]))


@dataclass
class SketchIoc:
    sketch_id: str
    category: str
    ioc: float
    random_ioc: float
    n_subjects: int


@dataclass
class IocReport:
    per_sketch: dict[str, float]
    per_category_median: dict[str, float]
    per_category_random_median: dict[str, float]
    regime_filter: str
    per_sketch_random: dict[str, float] = field(default_factory=dict)
    skipped_sketches: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "regime_filter": self.regime_filter,
            "per_category_median": self.per_category_median,
            "per_category_random_median": self.per_category_random_median,
            "per_sketch": self.per_sketch,
            "per_sketch_random": self.per_sketch_random,
            "skipped_sketches": self.skipped_sketches,
        }


def _sketch_ioc(sketch_id, sessions, neg_xy, geometry, sigma_px, rng: Rng, n_random) -> SketchIoc:
    maps = _leave_one_out_maps(sessions, geometry, sigma_px)
    scores, random_scores = [], []
    srng = rng.derive("ioc-random", sketch_id)
    w, h = geometry.width_px, geometry.height_px
    for s, m in zip(sessions, maps):
        neg_vals = m.sample(neg_xy)
        scores.append(roc_auc(m.sample(s.xy), neg_vals))
        # held-out subject replaced by uniform sequences of matched length
        n = len(s)
        pts = np.column_stack([srng.uniform(0, w, n_random * n), srng.uniform(0, h, n_random * n)])
        vals = m.sample(pts).reshape(n_random, n)
        random_scores.append(np.mean([roc_auc(v, neg_vals) for v in vals]))
    return SketchIoc(sketch_id, sessions[0].category, float(np.mean(scores)), float(np.mean(random_scores)), len(sessions))


def ioc_report(
    dataset: Dataset,
    regime_filter: str = "both",
    sigma_px: float = 36.0,
    rng: Rng | None = None,
    n_random: int = 100,
    threads: int = 1,
) -> IocReport:
    if rng is None:
        raise ValueError("ioc_report needs an Rng for the random baseline")
    if n_random < 1:
        raise ValueError("n_random must be positive")
    data = dataset.filter(regime_filter)
    sketches = data.by_sketch()
    eligible = sorted(k for k, v in sketches.items() if len(v) >= 2)
    if not eligible:
        raise ValueError("no sketch has fixations from at least two subjects")

    all_xy = {k: np.concatenate([s.xy for s in v]) for k, v in sketches.items()}

    def work(sketch_id):
        neg = [all_xy[k] for k in sorted(sketches) if k != sketch_id]
        if not neg:
            # a lone sketch has no shuffled negatives; score against a uniform lattice instead
            neg = [uniform_lattice(data.geometry)]
        sessions = sorted(sketches[sketch_id], key=lambda s: s.subject_id)
        return _sketch_ioc(sketch_id, sessions, np.concatenate(neg), data.geometry, sigma_px, rng, n_random)

    results = parallel_map(work, eligible, threads)
    by_cat: dict[str, list[SketchIoc]] = {}
    for r in results:
        by_cat.setdefault(r.category, []).append(r)
    return IocReport(
        per_sketch={r.sketch_id: r.ioc for r in results},
        per_category_median={c: statistics.median(r.ioc for r in v) for c, v in sorted(by_cat.items())},
        per_category_random_median={
            c: statistics.median(r.random_ioc for r in v) for c, v in sorted(by_cat.items())
        },
        regime_filter=regime_filter,
        per_sketch_random={r.sketch_id: r.random_ioc for r in results},
        skipped_sketches=sorted(k for k in sketches if k not in eligible),
    )
