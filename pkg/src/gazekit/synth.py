"""Synthetic fixation datasets with known ground truth.

Each category owns a set of parts. A part is a 2-D Gaussian fixation
cluster; its annotation polygon is the axis-aligned box spanning two
standard deviations either side of the cluster mean. A viewing session
samples a part path from the category's Markov chain, then one location
per step from the visited part's cluster.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from gazekit.dataset import Dataset, Fixation, PartAnnotation, StimulusGeometry, ViewingSession
from gazekit.rng import Rng


@dataclass(frozen=True)
class CategorySpec:
    name: str
    part_labels: tuple[str, ...]
    means: tuple[tuple[float, float], ...]
    covariances: tuple[tuple[tuple[float, float], tuple[float, float]], ...]
    initial: tuple[float, ...]
    transitions: tuple[tuple[float, ...], ...]

    def validate(self):
        n = len(self.part_labels)
        if n == 0 or len(self.initial) == 0 or len(self.transitions) == 0:
            raise ValueError(f"category {self.name!r}: empty part chain")
        if len(set(self.part_labels)) != n:
            raise ValueError(f"category {self.name!r}: duplicate part labels")
        if len(self.means) != n or len(self.covariances) != n:
            raise ValueError(f"category {self.name!r}: need one mean and covariance per part")
        pi = np.asarray(self.initial, float)
        A = np.asarray(self.transitions, float)
        if pi.shape != (n,) or A.shape != (n, n):
            raise ValueError(f"category {self.name!r}: chain shape does not match {n} parts")
        if (pi < 0).any() or not math.isclose(pi.sum(), 1.0, abs_tol=1e-9):
            raise ValueError(f"category {self.name!r}: initial distribution must sum to 1")
        if (A < 0).any() or not np.allclose(A.sum(axis=1), 1.0, atol=1e-9):
            raise ValueError(f"category {self.name!r}: transition rows must sum to 1")
        for label, cov in zip(self.part_labels, self.covariances):
            c = np.asarray(cov, float)
            if c.shape != (2, 2) or not np.allclose(c, c.T):
                raise ValueError(f"part {label!r}: covariance must be a symmetric 2x2 matrix")
            if np.linalg.eigvalsh(c).min() <= 0:
                raise ValueError(f"part {label!r}: covariance is not positive definite")


@dataclass(frozen=True)
class SynthSpec:
    categories: tuple[CategorySpec, ...]
    geometry: StimulusGeometry = StimulusGeometry()
    sketches_per_category: int = 24
    subjects_per_sketch: int = 4
    # sketches of a category are dealt round-robin into this many viewer groups,
    # each group seen by its own subjects_per_sketch subjects
    subject_groups: int = 1
    length_range: tuple[int, int] = (5, 13)
    duration_mean_ms: float = 250.0
    duration_log_sd: float = 0.4
    sketch_jitter_px: float = 0.0
    regimes: tuple[str, ...] = ("primed",)

    def validate(self):
        if not self.categories:
            raise ValueError("synthetic spec needs at least one category")
        for c in self.categories:
            c.validate()
        if self.sketches_per_category < 1 or self.subjects_per_sketch < 1 or self.subject_groups < 1:
            raise ValueError("sketch, subject and group counts must be positive")
        lo, hi = self.length_range
        if lo < 1 or hi < lo:
            raise ValueError(f"invalid length range {self.length_range}")
        if self.duration_mean_ms <= 0 or self.duration_log_sd < 0:
            raise ValueError("duration distribution parameters must be positive")


@dataclass(frozen=True)
class SynthResult:
    dataset: Dataset
    annotations: dict[str, PartAnnotation]
    # (sketch_id, subject_id) -> generating part label per fixation
    labels: dict[tuple[str, str], tuple[str, ...]] = field(default_factory=dict)


def part_box(mean, cov) -> tuple[tuple[float, float], ...]:
    """Axis-aligned box at two standard deviations around a cluster mean."""
    sx, sy = math.sqrt(cov[0][0]), math.sqrt(cov[1][1])
    x0, x1 = mean[0] - 2 * sx, mean[0] + 2 * sx
    y0, y1 = mean[1] - 2 * sy, mean[1] + 2 * sy
    return ((x0, y0), (x1, y0), (x1, y1), (x0, y1))


def _sample_path(rng: Rng, pi: np.ndarray, A: np.ndarray, n: int) -> np.ndarray:
    path = np.empty(n, dtype=int)
    path[0] = rng.choice(len(pi), p=pi)
    for t in range(1, n):
        path[t] = rng.choice(len(pi), p=A[path[t - 1]])
    return path


def synthesize_dataset(spec: SynthSpec, rng: Rng) -> SynthResult:
    spec.validate()
    geo = spec.geometry
    x_max = np.nextafter(float(geo.width_px), 0.0)
    y_max = np.nextafter(float(geo.height_px), 0.0)
    sessions = []
    annotations = {}
    labels = {}
    lo, hi = spec.length_range
    # lognormal with the requested mean
    mu = math.log(spec.duration_mean_ms) - spec.duration_log_sd**2 / 2

    for c in spec.categories:
        pi = np.asarray(c.initial, float)
        A = np.asarray(c.transitions, float)
        chols = [np.linalg.cholesky(np.asarray(cov, float)) for cov in c.covariances]
        for k in range(spec.sketches_per_category):
            sketch_id = f"{c.name}-{k:03d}"
            srng = rng.derive("sketch", sketch_id)
            offset = srng.normal(0.0, spec.sketch_jitter_px, 2) if spec.sketch_jitter_px > 0 else np.zeros(2)
            means = [np.asarray(m, float) + offset for m in c.means]
            annotations[sketch_id] = PartAnnotation(
                sketch_id,
                tuple((lab, part_box(m, cov)) for lab, m, cov in zip(c.part_labels, means, c.covariances)),
            )
            group = k % spec.subject_groups
            for regime in spec.regimes:
                for u in range(spec.subjects_per_sketch):
                    subject_id = f"{regime[0]}g{group}u{u}"
                    vrng = rng.derive("view", sketch_id, subject_id)
                    n = int(vrng.integers(lo, hi + 1))
                    path = _sample_path(vrng, pi, A, n)
                    z = vrng.normal(size=(n, 2))
                    durations = vrng.generator.lognormal(mu, spec.duration_log_sd, n) if spec.duration_log_sd > 0 else np.full(n, spec.duration_mean_ms)
                    fixations = []
                    for t in range(n):
                        p = path[t]
                        x, y = means[p] + chols[p] @ z[t]
                        fixations.append(
                            Fixation(
                                float(np.clip(x, 0.0, x_max)),
                                float(np.clip(y, 0.0, y_max)),
                                float(max(durations[t], 1e-3)),
                            )
                        )
                    sessions.append(ViewingSession(sketch_id, c.name, subject_id, regime, tuple(fixations)))
                    labels[(sketch_id, subject_id)] = tuple(c.part_labels[p] for p in path)
    return SynthResult(Dataset(geo, tuple(sessions)), annotations, labels)


def sticky_chain(rng: Rng, n: int, stay: float = 0.4) -> tuple[np.ndarray, np.ndarray]:
    """Random initial vector and transition matrix with extra self-transition mass."""
    pi = rng.generator.dirichlet(np.ones(n))
    A = rng.generator.dirichlet(np.ones(n), size=n)
    A = (1 - stay) * A + stay * np.eye(n)
    return pi, A


def desk_scale_spec(
    geometry: StimulusGeometry = StimulusGeometry(),
    rng: Rng | None = None,
    n_categories: int = 13,
    n_parts: int = 4,
    sketches_per_category: int = 24,
    subjects_per_sketch: int = 4,
    cluster_scale: float = 0.125,
    **kwargs,
) -> SynthSpec:
    """Spec with disjoint per-category hotspots laid out on a lattice.

    Defaults mirror the primed viewing scale: 13 categories of 24 sketches,
    each seen by 4 subjects. ``cluster_scale`` is the cluster standard
    deviation as a fraction of the lattice cell; at the default 1/8 the
    part boxes (4 sd wide) stay inside their own cells.
    """
    rng = rng or Rng(0)
    slots_needed = n_categories * n_parts
    side = max(2, math.ceil(math.sqrt(slots_needed)))
    cell_x = geometry.width_px / side
    cell_y = geometry.height_px / side
    order = rng.derive("layout").permutation(side * side)[:slots_needed]
    sd_x, sd_y = cell_x * cluster_scale, cell_y * cluster_scale
    cov = ((sd_x**2, 0.0), (0.0, sd_y**2))
    cats = []
    for ci in range(n_categories):
        slots = order[ci * n_parts : (ci + 1) * n_parts]
        means = tuple(((s % side + 0.5) * cell_x, (s // side + 0.5) * cell_y) for s in slots)
        pi, A = sticky_chain(rng.derive("chain", ci), n_parts)
        cats.append(
            CategorySpec(
                name=f"cat{ci:02d}",
                part_labels=tuple(f"part{p}" for p in range(n_parts)),
                means=means,
                covariances=(cov,) * n_parts,
                initial=tuple(pi),
                transitions=tuple(map(tuple, A)),
            )
        )
    return SynthSpec(
        categories=tuple(cats),
        geometry=geometry,
        sketches_per_category=sketches_per_category,
        subjects_per_sketch=subjects_per_sketch,
        **kwargs,
    )


def labels_to_jsonl(labels: dict[tuple[str, str], tuple[str, ...]]) -> str:
    return "".join(
        json.dumps({"sketch_id": sk, "subject_id": su, "labels": list(v)}) + "\n"
        for (sk, su), v in labels.items()
    )
