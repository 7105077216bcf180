"""Gaussian kernel density with a single likelihood-selected bandwidth.

The kernel is an isotropic Gaussian product over the three feature
dimensions (ordinal factor, normalized x, normalized y) sharing one
bandwidth ``h``::

    p(q) = 1/n sum_i prod_d N(q_d; p_id, h^2)

``h`` maximizes the leave-one-out log-likelihood, found by golden-section
search over ``log h`` in ``[log 1e-3, log 1]``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

log = logging.getLogger(__name__)

LOG_H_BOUNDS = (math.log(1e-3), 0.0)
FALLBACK_BANDWIDTH = 1e-2
_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True, eq=False)
class Kde:
    points: np.ndarray
    bandwidth: float
    fallback: bool = False

    def log_density(self, queries) -> np.ndarray:
        q = np.atleast_2d(np.asarray(queries, float))
        p = self.points
        h2 = self.bandwidth**2
        d = p.shape[1]
        norm = -0.5 * d * math.log(2 * math.pi * h2) - math.log(len(p))
        p_sq = (p * p).sum(axis=1)
        chunk = max(1, 2**22 // max(1, len(p)))
        out = np.empty(len(q))
        for s in range(0, len(q), chunk):
            block = q[s : s + chunk]
            d2 = (block * block).sum(axis=1)[:, None] + p_sq[None, :] - 2.0 * block @ p.T
            np.maximum(d2, 0.0, out=d2)
            out[s : s + chunk] = logsumexp(-d2 / (2 * h2), axis=1) + norm
        return out

    def density(self, queries) -> np.ndarray:
        return np.exp(self.log_density(queries))


class UniformDensity:
    """Constant density 1 over the unit feature box; stands in for unseen states."""

    fallback = True
    bandwidth = None
    points = np.empty((0, 3))

    def log_density(self, queries) -> np.ndarray:
        return np.zeros(len(np.atleast_2d(queries)))


def _sq_dists(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    # explicit differences keep exact zeros for duplicate points
    return ((a[:, None, :] - b[None, :, :]) ** 2).sum(axis=2)


def loo_log_likelihood(points, bandwidth: float, d2: np.ndarray | None = None) -> float:
    p = np.asarray(points, float)
    n, d = p.shape
    if d2 is None:
        d2 = _sq_dists(p, p)
    h2 = bandwidth**2
    z = d2 * (-0.5 / h2)
    np.fill_diagonal(z, -np.inf)
    top = z.max(axis=1, keepdims=True)
    z -= top
    np.exp(z, out=z)
    per_point = np.log(z.sum(axis=1)) + top[:, 0]
    return float(per_point.sum() - n * (math.log(n - 1) + 0.5 * d * math.log(2 * math.pi * h2)))


def golden_section_max(f, lo: float, hi: float, tol: float = 1e-3) -> float:
    a, b = lo, hi
    c = b - _GOLDEN * (b - a)
    e = a + _GOLDEN * (b - a)
    fc, fe = f(c), f(e)
    while b - a > tol:
        if fc >= fe:
            b, e, fe = e, c, fc
            c = b - _GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, e, fe
            e = a + _GOLDEN * (b - a)
            fe = f(e)
    # the bracket ends are candidates too, for optima on the boundary
    best = max((f(a), a), (fc, c), (fe, e), (f(b), b))
    return best[1]


def fit_kde(points, max_fit_points: int = 2000) -> Kde:
    """Fit a KDE; the bandwidth search uses at most ``max_fit_points`` evenly spaced points."""
    p = np.atleast_2d(np.asarray(points, float))
    if len(p) < 2:
        raise ValueError("KDE bandwidth selection needs at least two points")
    if np.ptp(p, axis=0).max() == 0:
        log.warning("all %d KDE points coincide; using fallback bandwidth %g", len(p), FALLBACK_BANDWIDTH)
        return Kde(p, FALLBACK_BANDWIDTH, fallback=True)
    sub = p
    if len(p) > max_fit_points:
        sub = p[np.linspace(0, len(p) - 1, max_fit_points).round().astype(int)]
    d2 = _sq_dists(sub, sub)
    log_h = golden_section_max(lambda lh: loo_log_likelihood(sub, math.exp(lh), d2), *LOG_H_BOUNDS)
    return Kde(p, math.exp(log_h))
