import logging
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gazekit.partmodel.kde import FALLBACK_BANDWIDTH, LOG_H_BOUNDS, Kde, fit_kde, golden_section_max, loo_log_likelihood


def naive_density(points, h, q):
    total = 0.0
    for p in points:
        d2 = sum((a - b) ** 2 for a, b in zip(p, q))
        total += math.exp(-d2 / (2 * h * h)) / (2 * math.pi * h * h) ** 1.5
    return total / len(points)


def naive_loo(points, h):
    ll = 0.0
    for i, q in enumerate(points):
        others = [p for j, p in enumerate(points) if j != i]
        ll += math.log(naive_density(others, h, q))
    return ll


def test_density_matches_naive(rng):
    pts = rng.uniform(0, 1, (7, 3))
    k = Kde(pts, 0.15)
    q = rng.uniform(0, 1, (5, 3))
    for row, v in zip(q, k.density(q)):
        assert v == pytest.approx(naive_density(pts, 0.15, row), rel=1e-10)


def test_loo_matches_naive(rng):
    pts = rng.uniform(0, 1, (6, 3))
    for h in (0.05, 0.2, 0.7):
        assert loo_log_likelihood(pts, h) == pytest.approx(naive_loo(pts, h), rel=1e-10)


def test_two_points_grid_search():
    pts = np.array([[0.2, 0.3, 0.1], [0.6, 0.5, 0.4]])
    h = fit_kde(pts).bandwidth
    grid = np.linspace(*LOG_H_BOUNDS, 200)
    ll = np.array([loo_log_likelihood(pts, math.exp(g)) for g in grid])
    peak = int(np.argmax(ll))
    # unimodal: increases up to the peak, decreases after
    assert np.all(np.diff(ll[: peak + 1]) > 0) and np.all(np.diff(ll[peak:]) < 0)
    step = grid[1] - grid[0]
    assert abs(math.log(h) - grid[peak]) <= step
    # analytic optimum for two points in 3-D: h^2 = d^2 / 3
    d = np.linalg.norm(pts[0] - pts[1])
    assert h == pytest.approx(d / math.sqrt(3), rel=2e-3)


def test_integrates_to_one():
    r = np.random.default_rng(4)
    pts = r.uniform(0.25, 0.75, (30, 3))
    k = Kde(pts, 0.04)
    mc = r.uniform(0, 1, (400_000, 3))
    assert abs(k.density(mc).mean() - 1.0) < 0.05


def test_repeated_point_fallback(caplog):
    with caplog.at_level(logging.WARNING):
        k = fit_kde(np.tile([[0.5, 0.2, 0.3]], (4, 1)))
    assert k.bandwidth == FALLBACK_BANDWIDTH and k.fallback
    assert "fallback" in caplog.text
    with pytest.raises(ValueError):
        fit_kde([[0.1, 0.2, 0.3]])


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_positive_and_order_free(seed):
    r = np.random.default_rng(seed)
    pts = r.uniform(0, 1, (int(r.integers(2, 20)), 3))
    k = fit_kde(pts)
    q = r.uniform(-0.5, 1.5, (10, 3))
    assert np.all(k.density(q) > 0)
    shuffled = Kde(pts[r.permutation(len(pts))], k.bandwidth)
    assert np.max(np.abs(shuffled.log_density(q) - k.log_density(q))) < 1e-12
    assert math.exp(LOG_H_BOUNDS[0]) <= k.bandwidth <= 1.0


def test_golden_section_quadratic():
    x = golden_section_max(lambda v: -(v - 0.3) ** 2, -2.0, 2.0, tol=1e-6)
    assert abs(x - 0.3) < 1e-5
    # optimum on the boundary
    assert golden_section_max(lambda v: v, 0.0, 1.0, tol=1e-6) == 1.0


def test_subsampled_fit_keeps_all_points(rng):
    pts = rng.uniform(0, 1, (50, 3))
    k = fit_kde(pts, max_fit_points=10)
    assert len(k.points) == 50
    sub = pts[np.linspace(0, 49, 10).round().astype(int)]
    assert k.bandwidth == pytest.approx(fit_kde(sub).bandwidth, rel=1e-12)
