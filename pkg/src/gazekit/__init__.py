"""Gaze analytics for eye fixations recorded on freehand sketches."""

__version__ = "0.1.0"

from gazekit.dataset import (
    Dataset,
    DataError,
    Fixation,
    PartAnnotation,
    StimulusGeometry,
    ViewingSession,
    load_annotations,
    load_dataset,
)
from gazekit.rng import Rng

__all__ = [
    "__version__",
    "Dataset",
    "DataError",
    "Fixation",
    "PartAnnotation",
    "Rng",
    "StimulusGeometry",
    "ViewingSession",
    "load_annotations",
    "load_dataset",
]
