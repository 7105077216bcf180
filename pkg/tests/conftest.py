import json
import sys

import numpy as np
import pytest

from gazekit.dataset import Dataset, Fixation, StimulusGeometry, ViewingSession


def make_session(sketch, category, subject, points, durations=None, regime="primed"):
    points = np.asarray(points, float).reshape(-1, 2)
    if durations is None:
        durations = np.full(len(points), 200.0)
    fx = tuple(Fixation(float(x), float(y), float(t)) for (x, y), t in zip(points, durations))
    return ViewingSession(sketch, category, subject, regime, fx)


def session_line(sketch="s1", category="c", subject="u1", regime="primed", fixations=None):
    if fixations is None:
        fixations = [{"x": 10, "y": 20, "t": 100}]
    return json.dumps(
        {"sketch_id": sketch, "category": category, "subject_id": subject, "regime": regime, "fixations": fixations}
    )


@pytest.fixture
def small_geometry():
    return StimulusGeometry(64, 48, 8.0)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def toy_dataset(geometry, n_cat=3, n_sketch=3, n_subj=3, length=5, seed=0, spread=3.0):
    """Categories fixate distinct corners; each sketch/subject gets its own jitter."""
    r = np.random.default_rng(seed)
    centers = [
        (geometry.width_px * (0.2 + 0.6 * (c % 2)), geometry.height_px * (0.2 + 0.6 * ((c // 2) % 2)))
        for c in range(n_cat)
    ]
    sessions = []
    for c in range(n_cat):
        for k in range(n_sketch):
            for u in range(n_subj):
                pts = np.asarray(centers[c]) + r.normal(0, spread, (length, 2))
                pts[:, 0] = np.clip(pts[:, 0], 0, geometry.width_px - 1e-6)
                pts[:, 1] = np.clip(pts[:, 1], 0, geometry.height_px - 1e-6)
                durs = r.uniform(80, 600, length)
                sessions.append(make_session(f"c{c}-{k}", f"c{c}", f"u{u}", pts, durs))
    return Dataset(geometry, tuple(sessions))


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[n])
