"""Part-label prediction protocol: random splits, augmentation, four decoders."""

from __future__ import annotations

import logging
import math
import statistics
from dataclasses import asdict, dataclass, field
from typing import Mapping, Sequence

import numpy as np

from gazekit._parallel import parallel_map
from gazekit.dataset import Dataset, PartAnnotation, StimulusGeometry
from gazekit.partmodel.dtw import decode_dtw
from gazekit.partmodel.hmm import featurize, train_hmm
from gazekit.partseq import UNASSIGNED, assign_parts, category_vocabulary
from gazekit.rng import Rng

log = logging.getLogger(__name__)

DECODERS = ("random", "dtw", "viterbi", "pmap")
AGGREGATIONS = ("median-mean", "mean-median")

LabeledSequence = tuple[np.ndarray, Sequence[str]]


def augment(
    sequence: LabeledSequence,
    rng: Rng,
    k: int = 50,
    max_dev_deg: float = 1.0,
    geometry: StimulusGeometry = StimulusGeometry(),
) -> list[LabeledSequence]:
    """``k`` copies with every fixation displaced uniformly within a disk.

    The disk radius is ``max_dev_deg`` degrees of visual angle. Displaced
    points are clipped to the stimulus; labels and ordinal factors are kept.
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    features, labels = sequence
    f = np.atleast_2d(np.asarray(features, float))
    n = len(f)
    radius = max_dev_deg * geometry.pixels_per_degree
    upper = np.nextafter(1.0, 0.0)
    out = []
    for _ in range(k):
        rad = radius * np.sqrt(rng.uniform(0.0, 1.0, n))
        ang = rng.uniform(0.0, 2 * math.pi, n)
        g = f.copy()
        g[:, 1] = np.clip(f[:, 1] + rad * np.cos(ang) / geometry.width_px, 0.0, upper)
        g[:, 2] = np.clip(f[:, 2] + rad * np.sin(ang) / geometry.height_px, 0.0, upper)
        out.append((g, list(labels)))
    return out


@dataclass
class PartEvalConfig:
    train_frac: float = 0.6
    trials: int = 10
    k_augment: int = 50
    max_dev_deg: float = 1.0
    smoothing: float = 1.0
    drop_unassigned: bool = True
    max_fit_points: int = 2000
    decoders: tuple[str, ...] = DECODERS
    # "median-mean": median over a trial's test sequences, then mean over trials;
    # "mean-median": mean over a trial's test sequences, then median over trials
    aggregation: str = "median-mean"


@dataclass
class PartEvalReport:
    # category -> decoder -> per-trial median accuracy, averaged over trials
    per_category: dict[str, dict[str, float]]
    # decoder -> mean accuracy over every scored test sequence in every trial
    mean_accuracy: dict[str, float]
    n_test_sequences: int
    config: dict
    skipped_categories: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "config": self.config,
            "per_category": self.per_category,
            "mean_accuracy": self.mean_accuracy,
            "n_test_sequences": self.n_test_sequences,
            "skipped_categories": self.skipped_categories,
        }


def _accuracy(pred, truth) -> float:
    return float(np.mean([p == t for p, t in zip(pred, truth)]))


def _evaluate_category(cat, seqs, vocab, rng: Rng, cfg: PartEvalConfig, geometry, n_max):
    """Per-trial lists of per-sequence accuracies, keyed by decoder."""
    n = len(seqs)
    n_train = min(n - 1, max(1, int(round(cfg.train_frac * n))))
    trials = []
    for trial in range(cfg.trials):
        order = rng.derive("split", cat, trial).permutation(n)
        train = [seqs[i] for i in order[:n_train]]
        test = [seqs[i] for i in order[n_train:]]
        arng = rng.derive("augment", cat, trial)
        augmented = list(train)
        for s in train:
            augmented.extend(augment(s, arng, cfg.k_augment, cfg.max_dev_deg, geometry))
        needs_hmm = {"pmap", "viterbi"} & set(cfg.decoders)
        hmm = (
            train_hmm(augmented, vocab, cfg.smoothing, n_max, geometry, cfg.max_fit_points)
            if needs_hmm
            else None
        )
        rrng = rng.derive("random-decoder", cat, trial)
        scores: dict[str, list[float]] = {d: [] for d in cfg.decoders}
        for feats, truth in test:
            for d in cfg.decoders:
                if d == "pmap":
                    pred = hmm.decode_pmap(feats)
                elif d == "viterbi":
                    pred = hmm.decode_viterbi(feats)
                elif d == "dtw":
                    # augmented copies sit within one degree of their source; match originals only
                    pred = decode_dtw(feats, train)
                else:
                    pred = [vocab[i] for i in rrng.integers(0, len(vocab), len(truth))]
                scores[d].append(_accuracy(pred, truth))
        trials.append(scores)
    return trials


def evaluate_labeled_sequences(
    sequences: Mapping[str, Sequence[LabeledSequence]],
    vocabularies: Mapping[str, Sequence[str]],
    rng: Rng,
    config: PartEvalConfig | None = None,
    geometry: StimulusGeometry = StimulusGeometry(),
    n_max: int | None = None,
    threads: int = 1,
) -> PartEvalReport:
    cfg = config or PartEvalConfig()
    if cfg.aggregation not in AGGREGATIONS:
        raise ValueError(f"aggregation must be one of {AGGREGATIONS}")
    unknown = set(cfg.decoders) - set(DECODERS)
    if unknown:
        raise ValueError(f"unknown decoder(s) {sorted(unknown)}")
    if n_max is None:
        n_max = max(len(l) for seqs in sequences.values() for _, l in seqs)
    cats, skipped = [], []
    for cat in sorted(sequences):
        seqs = [s for s in sequences[cat] if len(s[1])]
        if len(seqs) < 2:
            log.warning("skipping category %s: fewer than two labelled sequences", cat)
            skipped.append(cat)
        else:
            cats.append((cat, seqs))

    def work(item):
        cat, seqs = item
        vocab = sorted(set(vocabularies[cat]))
        return cat, _evaluate_category(cat, seqs, vocab, rng, cfg, geometry, n_max)

    per_category: dict[str, dict[str, float]] = {}
    pooled: dict[str, list[float]] = {d: [] for d in cfg.decoders}
    for cat, trials in parallel_map(work, cats, threads):
        if cfg.aggregation == "median-mean":
            per_category[cat] = {
                d: float(np.mean([statistics.median(t[d]) for t in trials])) for d in cfg.decoders
            }
        else:
            per_category[cat] = {
                d: float(statistics.median([np.mean(t[d]) for t in trials])) for d in cfg.decoders
            }
        for t in trials:
            for d in cfg.decoders:
                pooled[d].extend(t[d])
    n_test = len(pooled[cfg.decoders[0]]) if cfg.decoders else 0
    cfg_dict = asdict(cfg)
    cfg_dict["decoders"] = list(cfg.decoders)
    return PartEvalReport(
        per_category=per_category,
        mean_accuracy={d: float(np.mean(v)) if v else float("nan") for d, v in pooled.items()},
        n_test_sequences=n_test,
        config=cfg_dict,
        skipped_categories=skipped,
    )


def labeled_sequences(
    dataset: Dataset, annotations: Mapping[str, PartAnnotation], drop_unassigned: bool = True
) -> tuple[dict[str, list[LabeledSequence]], dict[str, list[str]]]:
    """Features and assigned part labels per category, plus each category's vocabulary."""
    n_max = dataset.max_sequence_length
    out: dict[str, list[LabeledSequence]] = {}
    sketches: dict[str, set[str]] = {}
    for s in sorted(dataset.sessions, key=lambda s: (s.category, s.sketch_id, s.subject_id)):
        seq = assign_parts(s, annotations.get(s.sketch_id), dataset.geometry)
        if drop_unassigned:
            seq = seq.dropping_unassigned()
        if not len(seq):
            continue
        feats = featurize(s, n_max, dataset.geometry, seq.source_indices)
        out.setdefault(s.category, []).append((feats, list(seq.labels)))
        sketches.setdefault(s.category, set()).add(s.sketch_id)
    vocab = {}
    for cat, seqs in out.items():
        v = category_vocabulary(annotations, sketches[cat])
        if any(UNASSIGNED in l for _, l in seqs):
            v.append(UNASSIGNED)
        vocab[cat] = v
    return out, vocab


def evaluate_part_prediction(
    dataset: Dataset,
    annotations: Mapping[str, PartAnnotation],
    rng: Rng,
    config: PartEvalConfig | None = None,
    threads: int = 1,
) -> PartEvalReport:
    cfg = config or PartEvalConfig()
    dataset.require_nonempty()
    seqs, vocab = labeled_sequences(dataset, annotations, cfg.drop_unassigned)
    return evaluate_labeled_sequences(
        seqs, vocab, rng, cfg, dataset.geometry, dataset.max_sequence_length, threads
    )
