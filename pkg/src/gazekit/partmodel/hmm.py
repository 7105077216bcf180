"""Fully supervised HMM over part labels with KDE observation models.

Hidden states are the category's part labels. Initial and transition
probabilities are add-``smoothing`` normalized label counts; each state's
observation density is a KDE over the features of every training fixation
carrying that label. Inference runs in the log domain throughout.

Features are ``(n, 3)`` arrays with columns ``(r, x_norm, y_norm)`` where
``r = (N_F - j + 1) / N_F`` for the 1-based position ``j`` and ``N_F`` is
the longest sequence length in the dataset.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.special import logsumexp

from gazekit import __version__
from gazekit.dataset import StimulusGeometry, ViewingSession
from gazekit.partmodel.kde import Kde, UniformDensity, fit_kde

log = logging.getLogger(__name__)


def ordinal_factors(positions, n_max: int) -> np.ndarray:
    """``(N_F - j + 1) / N_F`` for 0-based positions (so j = position + 1)."""
    j = np.asarray(positions, float) + 1.0
    return (n_max - j + 1.0) / n_max


def featurize(
    session: ViewingSession,
    n_max: int,
    geometry: StimulusGeometry = StimulusGeometry(),
    positions: Sequence[int] | None = None,
) -> np.ndarray:
    """Feature rows for a session; ``positions`` selects a subset of fixations."""
    if n_max < len(session):
        raise ValueError(f"N_F={n_max} is shorter than the session ({len(session)} fixations)")
    idx = np.arange(len(session)) if positions is None else np.asarray(positions, int)
    xy = session.xy[idx]
    return np.column_stack(
        [ordinal_factors(idx, n_max), xy[:, 0] / geometry.width_px, xy[:, 1] / geometry.height_px]
    )


# --- inference on raw log-parameters ----------------------------------------

def _check_emissions(log_b: np.ndarray):
    if log_b.ndim != 2 or len(log_b) == 0:
        raise ValueError("need a non-empty (T, S) emission table")
    dead = np.flatnonzero(~np.isfinite(log_b.max(axis=1)) | np.isneginf(log_b).all(axis=1))
    if dead.size:
        raise ValueError(f"zero observation likelihood for every state at step {int(dead[0])}")


def forward_backward(log_pi, log_a, log_b) -> tuple[np.ndarray, float, float]:
    """Posterior state marginals and the sequence log-likelihood from both passes.

    Returns ``(gamma, loglik_forward, loglik_backward)``.
    """
    log_pi, log_a, log_b = (np.asarray(v, float) for v in (log_pi, log_a, log_b))
    _check_emissions(log_b)
    T, S = log_b.shape
    alpha = np.empty((T, S))
    beta = np.zeros((T, S))
    alpha[0] = log_pi + log_b[0]
    for t in range(1, T):
        alpha[t] = logsumexp(alpha[t - 1][:, None] + log_a, axis=0) + log_b[t]
    for t in range(T - 2, -1, -1):
        beta[t] = logsumexp(log_a + (log_b[t + 1] + beta[t + 1])[None, :], axis=1)
    ll_f = float(logsumexp(alpha[-1]))
    ll_b = float(logsumexp(log_pi + log_b[0] + beta[0]))
    if not np.isfinite(ll_f):
        raise ValueError("observation sequence has zero probability under the model")
    log_gamma = alpha + beta
    log_gamma -= logsumexp(log_gamma, axis=1, keepdims=True)
    return np.exp(log_gamma), ll_f, ll_b


def viterbi(log_pi, log_a, log_b) -> np.ndarray:
    """Most probable state path; ties resolve to the lower state index."""
    log_pi, log_a, log_b = (np.asarray(v, float) for v in (log_pi, log_a, log_b))
    _check_emissions(log_b)
    T, S = log_b.shape
    delta = log_pi + log_b[0]
    back = np.zeros((T, S), dtype=int)
    for t in range(1, T):
        cand = delta[:, None] + log_a
        back[t] = np.argmax(cand, axis=0)
        delta = cand[back[t], np.arange(S)] + log_b[t]
    if not np.isfinite(delta.max()):
        raise ValueError("observation sequence has zero probability under the model")
    path = np.empty(T, dtype=int)
    path[-1] = int(np.argmax(delta))
    for t in range(T - 1, 0, -1):
        path[t - 1] = back[t, path[t]]
    return path


def pmap(gamma) -> np.ndarray:
    """Per-position posterior argmax; ties resolve to the lower state index."""
    return np.argmax(np.asarray(gamma), axis=1)


def _log(x) -> np.ndarray:
    with np.errstate(divide="ignore"):
        return np.log(np.asarray(x, float))


# --- the model --------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class PartHmm:
    states: tuple[str, ...]
    pi: np.ndarray
    A: np.ndarray
    observation_models: tuple = ()
    n_max: int = 1
    geometry: StimulusGeometry = StimulusGeometry()
    smoothing: float = 1.0
    flags: tuple[str, ...] = field(default_factory=tuple)
    category: str = ""

    def __post_init__(self):
        S = len(self.states)
        if self.pi.shape != (S,) or self.A.shape != (S, S) or len(self.observation_models) != S:
            raise ValueError("HMM parameter shapes do not match the state list")

    def log_emissions(self, features) -> np.ndarray:
        f = np.atleast_2d(np.asarray(features, float))
        return np.column_stack([m.log_density(f) for m in self.observation_models])

    def posteriors(self, features) -> np.ndarray:
        gamma, _, _ = forward_backward(_log(self.pi), _log(self.A), self.log_emissions(features))
        return gamma

    def log_likelihood(self, features) -> float:
        return forward_backward(_log(self.pi), _log(self.A), self.log_emissions(features))[1]

    def decode_pmap(self, features) -> list[str]:
        return [self.states[k] for k in pmap(self.posteriors(features))]

    def decode_viterbi(self, features) -> list[str]:
        path = viterbi(_log(self.pi), _log(self.A), self.log_emissions(features))
        return [self.states[k] for k in path]

    # serialization
    def to_dict(self) -> dict:
        kde = {}
        for s, m in zip(self.states, self.observation_models):
            if isinstance(m, Kde):
                kde[s] = {"points": m.points.tolist(), "bandwidth": m.bandwidth, "fallback": m.fallback}
            else:
                kde[s] = {"points": [], "bandwidth": None, "fallback": "uniform"}
        return {
            "states": list(self.states),
            "pi": self.pi.tolist(),
            "A": self.A.tolist(),
            "kde": kde,
            "N_F": int(self.n_max),
            "geometry": self.geometry.to_dict(),
            "smoothing": self.smoothing,
            "flags": list(self.flags),
            "category": self.category,
            "version": __version__,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PartHmm":
        models = []
        for s in d["states"]:
            entry = d["kde"][s]
            if entry.get("fallback") == "uniform" or not entry["points"]:
                models.append(UniformDensity())
            else:
                models.append(Kde(np.asarray(entry["points"], float), float(entry["bandwidth"]), bool(entry.get("fallback"))))
        return cls(
            states=tuple(d["states"]),
            pi=np.asarray(d["pi"], float),
            A=np.asarray(d["A"], float),
            observation_models=tuple(models),
            n_max=int(d["N_F"]),
            geometry=StimulusGeometry.from_dict(d["geometry"]),
            smoothing=float(d.get("smoothing", 1.0)),
            flags=tuple(d.get("flags", ())),
            category=d.get("category", ""),
        )

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict()) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path) -> "PartHmm":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def train_hmm(
    sequences: Sequence[tuple[np.ndarray, Sequence[str]]],
    vocabulary: Sequence[str],
    smoothing: float = 1.0,
    n_max: int | None = None,
    geometry: StimulusGeometry = StimulusGeometry(),
    max_fit_points: int = 2000,
    category: str = "",
) -> PartHmm:
    """Count-based initial/transition estimates plus one KDE per state."""
    if not sequences:
        raise ValueError("cannot train an HMM on zero sequences")
    if smoothing < 0:
        raise ValueError("smoothing must be non-negative")
    states = tuple(sorted(set(vocabulary)))
    index = {s: k for k, s in enumerate(states)}
    S = len(states)
    pi_counts = np.zeros(S)
    a_counts = np.zeros((S, S))
    per_state: list[list[np.ndarray]] = [[] for _ in range(S)]
    for features, labels in sequences:
        features = np.atleast_2d(np.asarray(features, float))
        if len(labels) == 0 or len(labels) != len(features):
            raise ValueError("each training sequence needs one label per feature row")
        try:
            codes = [index[l] for l in labels]
        except KeyError as exc:
            raise ValueError(f"label {exc.args[0]!r} is not in the part vocabulary") from None
        pi_counts[codes[0]] += 1
        for a, b in zip(codes[:-1], codes[1:]):
            a_counts[a, b] += 1
        for c, row in zip(codes, features):
            per_state[c].append(row)

    pi = pi_counts + smoothing
    A = a_counts + smoothing
    if pi.sum() == 0:
        raise ValueError("no initial-state counts")
    pi = pi / pi.sum()
    row_sums = A.sum(axis=1, keepdims=True)
    # rows never left (possible only without smoothing) fall back to uniform
    A = np.where(row_sums > 0, A / np.where(row_sums > 0, row_sums, 1), 1.0 / S)

    models, flags = [], []
    for s, rows in zip(states, per_state):
        pts = np.array(rows) if rows else np.empty((0, 3))
        if len(pts) == 0:
            log.warning("state %s never observed in training; using a uniform density", s)
            models.append(UniformDensity())
            flags.append(f"uniform-density:{s}")
        elif len(pts) == 1 or np.ptp(pts, axis=0).max() == 0:
            models.append(fit_kde(np.vstack([pts, pts]), max_fit_points))
            flags.append(f"fallback-bandwidth:{s}")
        else:
            models.append(fit_kde(pts, max_fit_points))
    if n_max is None:
        n_max = max(len(l) for _, l in sequences)
    return PartHmm(
        states, pi, A, tuple(models), int(n_max), geometry, float(smoothing), tuple(flags), category
    )
