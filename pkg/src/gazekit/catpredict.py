"""Category prediction from fixations alone, evaluated leave-one-subject-out.

A fixation sequence scores each category by the duration-weighted mean of
that category's marginalized map at the fixation locations; the predicted
category is the best-scoring one (ties go to the lexicographically first
category and are flagged).
"""

from __future__ import annotations

import statistics
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from gazekit._parallel import parallel_map
from gazekit.dataset import Dataset, Fixation
from gazekit.fixmap import FixationMap, category_map, marginalize, sketch_map


@dataclass
class PredictionOutcome:
    sketch_id: str
    true_category: str
    predicted_category: str
    scores: dict[str, float]
    tie: bool = False

    @property
    def correct(self) -> bool:
        return self.predicted_category == self.true_category


@dataclass
class LosoReport:
    per_category_accuracy: dict[str, float]
    overall_median: float
    chance_level: float
    config: dict
    per_subject: dict[str, dict[str, float]] = field(default_factory=dict)
    skipped: list[dict] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "config": self.config,
            "chance_level": self.chance_level,
            "overall_median": self.overall_median,
            "per_category_accuracy": self.per_category_accuracy,
            "per_subject": self.per_subject,
            "skipped": self.skipped,
        }


def prediction_score(fixations: Sequence[Fixation], fmap: FixationMap, use_duration: bool = True) -> float:
    if not len(fixations):
        raise ValueError("cannot score an empty fixation sequence")
    h, w = fmap.shape
    xy = np.array([(f.x, f.y) for f in fixations], dtype=float)
    if (xy[:, 0] < 0).any() or (xy[:, 1] < 0).any() or (xy[:, 0] >= w).any() or (xy[:, 1] >= h).any():
        raise ValueError("fixation outside the map grid")
    t = np.array([f.duration_ms for f in fixations], float) if use_duration else np.ones(len(fixations))
    # normalize the weights first so equal durations reproduce the unweighted score bit for bit
    return float(np.dot(t / t.sum(), fmap.sample(xy)))


def predict_category(
    fixations: Sequence[Fixation],
    marginalized_maps: Mapping[str, FixationMap],
    use_duration: bool = True,
    sketch_id: str = "",
    true_category: str = "",
) -> PredictionOutcome:
    if not marginalized_maps:
        raise ValueError("no category maps to predict from")
    scores = {c: prediction_score(fixations, marginalized_maps[c], use_duration) for c in sorted(marginalized_maps)}
    best = max(scores.values())
    winners = [c for c in scores if scores[c] == best]
    return PredictionOutcome(sketch_id, true_category, winners[0], scores, tie=len(winners) > 1)


def build_marginalized_maps(
    dataset: Dataset, sigma_px: float = 36.0, use_duration: bool = True
) -> dict[str, FixationMap]:
    """Per-sketch standardized maps, averaged per category, then marginalized."""
    sketch_maps: dict[str, list[FixationMap]] = {}
    for sketch_id, sessions in sorted(dataset.by_sketch().items()):
        fixations = [f for s in sorted(sessions, key=lambda s: s.subject_id) for f in s.fixations]
        m = sketch_map(fixations, dataset.geometry, sigma_px, use_duration, (sketch_id,))
        sketch_maps.setdefault(sessions[0].category, []).append(m)
    return marginalize({c: category_map(v) for c, v in sorted(sketch_maps.items())})


def loso_evaluate(
    train: Dataset,
    test_regime_filter: str = "both",
    use_duration: bool = True,
    sigma_px: float = 36.0,
    train_regime_filter: str = "both",
    threads: int = 1,
) -> LosoReport:
    """Hold out each subject in turn; maps come from everyone else.

    Training sessions are ``train`` filtered by ``train_regime_filter``;
    the held-out subject's sessions are filtered by ``test_regime_filter``.
    """
    train.require_nonempty()
    subjects = train.subjects
    if len(subjects) < 2:
        raise ValueError("leave-one-subject-out needs at least two subjects")
    all_categories = train.categories
    train_pool = train.filter(train_regime_filter)
    test_pool = train.filter(test_regime_filter)

    def fold(subject):
        fit = [s for s in train_pool.sessions if s.subject_id != subject]
        held = sorted(
            (s for s in test_pool.sessions if s.subject_id == subject), key=lambda s: s.sketch_id
        )
        if not held:
            return subject, None, []
        fit_data = Dataset(train.geometry, tuple(fit))
        present = set(fit_data.categories)
        missing = [c for c in all_categories if c not in present]
        if len(present) < 2:
            return subject, None, [{"subject": subject, "reason": "fewer than two training categories"}]
        maps = build_marginalized_maps(fit_data, sigma_px, use_duration)
        hits: dict[str, list[int]] = {}
        skipped = [{"subject": subject, "category": c, "reason": "empty category in fold"} for c in missing]
        for s in held:
            if s.category not in maps:
                continue
            out = predict_category(s.fixations, maps, use_duration, s.sketch_id, s.category)
            hits.setdefault(s.category, []).append(int(out.correct))
        return subject, {c: float(np.mean(v)) for c, v in sorted(hits.items())}, skipped

    per_subject: dict[str, dict[str, float]] = {}
    skipped: list[dict] = []
    for subject, acc, skip in parallel_map(fold, subjects, threads):
        skipped.extend(skip)
        if acc:
            per_subject[subject] = acc

    per_category: dict[str, float] = {}
    for c in all_categories:
        vals = [acc[c] for _, acc in sorted(per_subject.items()) if c in acc]
        if vals:
            per_category[c] = float(np.mean(vals))
    if not per_category:
        raise ValueError("no held-out sessions matched the test regime filter")
    return LosoReport(
        per_category_accuracy=per_category,
        overall_median=float(statistics.median(per_category.values())),
        chance_level=1.0 / len(all_categories),
        config={
            "use_duration": use_duration,
            "train_regime": train_regime_filter,
            "test_regime": test_regime_filter,
            "sigma_px": sigma_px,
        },
        per_subject=per_subject,
        skipped=skipped,
    )


def duration_count_correlation(dataset: Dataset, regime_filter: str = "both") -> float:
    """Pearson correlation across categories of mean fixation duration vs count.

    Each viewing contributes its mean duration and its fixation count; these
    are averaged per sketch, then per category.
    """
    data = dataset.filter(regime_filter)
    by_cat: dict[str, list[tuple[float, float]]] = {}
    for sketch_id, sessions in data.by_sketch().items():
        dur = np.mean([s.durations.mean() for s in sessions])
        cnt = np.mean([len(s) for s in sessions])
        by_cat.setdefault(sessions[0].category, []).append((dur, cnt))
    if len(by_cat) < 3:
        raise ValueError("duration-count correlation needs at least three categories")
    stats = np.array([np.mean(v, axis=0) for _, v in sorted(by_cat.items())])
    if np.ptp(stats[:, 0]) == 0 or np.ptp(stats[:, 1]) == 0:
        raise ValueError("zero variance in mean duration or mean count across categories")
    return float(np.corrcoef(stats[:, 0], stats[:, 1])[0, 1])
