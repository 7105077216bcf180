"""Supervised HMM part-label prediction and its baselines."""

from gazekit.partmodel.dtw import decode_dtw, dtw
from gazekit.partmodel.evaluation import (
    PartEvalConfig,
    PartEvalReport,
    augment,
    evaluate_labeled_sequences,
    evaluate_part_prediction,
    labeled_sequences,
)
from gazekit.partmodel.hmm import PartHmm, featurize, forward_backward, pmap, train_hmm, viterbi
from gazekit.partmodel.kde import Kde, fit_kde

__all__ = [
    "Kde",
    "PartEvalConfig",
    "PartEvalReport",
    "PartHmm",
    "augment",
    "decode_dtw",
    "dtw",
    "evaluate_labeled_sequences",
    "evaluate_part_prediction",
    "featurize",
    "fit_kde",
    "forward_backward",
    "labeled_sequences",
    "pmap",
    "train_hmm",
    "viterbi",
]
