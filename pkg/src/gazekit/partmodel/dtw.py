"""Nearest-sequence DTW labelling baseline.

The test sequence is aligned (classic symmetric steps, no window) against
every training sequence on normalized (x, y); the cheapest training
sequence donates labels. Along the warping path a test fixation may be
matched to several training fixations. It keeps its first match unless a
later one lies strictly closer, and takes that training fixation's label.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np


def _xy(features) -> np.ndarray:
    f = np.atleast_2d(np.asarray(features, float))
    return f[:, -2:]


def cost_matrix(a, b) -> np.ndarray:
    a, b = _xy(a), _xy(b)
    return np.sqrt(((a[:, None, :] - b[None, :, :]) ** 2).sum(axis=2))


def accumulated_cost(cost: np.ndarray) -> np.ndarray:
    n, m = cost.shape
    D = np.full((n + 1, m + 1), np.inf)
    D[0, 0] = 0.0
    for i in range(1, n + 1):
        for j in range(1, m + 1):
            D[i, j] = cost[i - 1, j - 1] + min(D[i - 1, j - 1], D[i - 1, j], D[i, j - 1])
    return D[1:, 1:]


def dtw(a, b) -> tuple[float, list[tuple[int, int]]]:
    """DTW distance and warping path as ascending (test_index, train_index) pairs."""
    cost = cost_matrix(a, b)
    D = accumulated_cost(cost)
    i, j = D.shape[0] - 1, D.shape[1] - 1
    path = [(i, j)]
    while i > 0 or j > 0:
        steps = []
        if i > 0 and j > 0:
            steps.append((D[i - 1, j - 1], i - 1, j - 1))
        if i > 0:
            steps.append((D[i - 1, j], i - 1, j))
        if j > 0:
            steps.append((D[i, j - 1], i, j - 1))
        _, i, j = min(steps, key=lambda s: s[0])
        path.append((i, j))
    path.reverse()
    return float(D[-1, -1]), path


def batch_dtw_distances(test, candidates: Sequence[np.ndarray]) -> np.ndarray:
    """DTW distance of ``test`` to each candidate; equal to :func:`dtw` elementwise."""
    t = _xy(test)
    out = np.empty(len(candidates))
    by_len: dict[int, list[int]] = {}
    for k, c in enumerate(candidates):
        by_len.setdefault(len(c), []).append(k)
    n = len(t)
    for m, idx in by_len.items():
        group = np.stack([_xy(candidates[k]) for k in idx])  # (G, m, 2)
        cost = np.sqrt(((t[None, :, None, :] - group[:, None, :, :]) ** 2).sum(axis=3))
        G = len(idx)
        D = np.full((G, n + 1, m + 1), np.inf)
        D[:, 0, 0] = 0.0
        for i in range(1, n + 1):
            for j in range(1, m + 1):
                D[:, i, j] = cost[:, i - 1, j - 1] + np.minimum(
                    np.minimum(D[:, i - 1, j - 1], D[:, i - 1, j]), D[:, i, j - 1]
                )
        out[idx] = D[:, n, m]
    return out


def refine_matches(path, test, train) -> list[int]:
    """Train index matched to each test index after the closer-later-match rule."""
    t, r = _xy(test), _xy(train)
    match: dict[int, int] = {}
    for i, j in path:
        if i not in match:
            match[i] = j
        elif j > match[i]:
            if np.linalg.norm(r[j] - t[i]) < np.linalg.norm(r[match[i]] - t[i]):
                match[i] = j
    return [match[i] for i in range(len(t))]


def decode_dtw(test_features, training: Sequence[tuple[np.ndarray, Sequence[str]]]) -> list[str]:
    if not training:
        raise ValueError("DTW decoding needs at least one training sequence")
    dists = batch_dtw_distances(test_features, [f for f, _ in training])
    best = int(np.argmin(dists))
    feats, labels = training[best]
    _, path = dtw(test_features, feats)
    return [labels[j] for j in refine_matches(path, test_features, feats)]
