"""Fixation maps: per-sketch, standardized, category-level and marginalized.

A raw map is the duration-weighted sum of Gaussian splats at the fixation
locations, divided by the total duration::

    F'(x, y) = sum_f t_f exp(-((x_f - x)^2 + (y_f - y)^2) / sigma^2) / sum_f t_f

Note the exponent denominator is ``sigma^2`` rather than ``2 sigma^2``;
pass ``sigma_px * sqrt(2)`` to get a kernel whose standard deviation is
``sigma_px``. Grid cell ``[row, col]`` is the pixel centred at ``(x=col, y=row)``.

Splats are evaluated directly and truncated at a radius of ``CUTOFF_SIGMAS``
sigma, where the kernel has fallen below ``exp(-16)``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from gazekit import __version__
from gazekit.dataset import Fixation, StimulusGeometry

KINDS = ("raw", "standardized", "category", "marginalized")
CUTOFF_SIGMAS = 4.0


@dataclass(frozen=True, eq=False)
class FixationMap:
    grid: np.ndarray
    kind: str
    sigma_px: float
    provenance: tuple[str, ...] = field(default_factory=tuple)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown map kind {self.kind!r}")
        if self.grid.ndim != 2:
            raise ValueError("map grid must be 2-D")
        if not np.isfinite(self.grid).all():
            raise ValueError("map grid has non-finite values")

    @property
    def shape(self):
        return self.grid.shape

    def sample(self, xy: np.ndarray) -> np.ndarray:
        """Nearest-cell values at pixel locations ``xy`` (n, 2); edges clamp."""
        return self.grid[nearest_cells(xy, self.grid.shape)]


def nearest_cells(xy, shape) -> tuple[np.ndarray, np.ndarray]:
    """(rows, cols) index arrays of the cells nearest to the (x, y) points."""
    xy = np.asarray(xy, dtype=float).reshape(-1, 2)
    h, w = shape
    cols = np.clip(np.floor(xy[:, 0] + 0.5).astype(np.int64), 0, w - 1)
    rows = np.clip(np.floor(xy[:, 1] + 0.5).astype(np.int64), 0, h - 1)
    return rows, cols


def splat_sum(xy, weights, shape, sigma_px: float) -> np.ndarray:
    """Unnormalized sum of weighted Gaussian splats on a grid of ``shape``."""
    h, w = shape
    grid = np.zeros((h, w), dtype=np.float64)
    reach = CUTOFF_SIGMAS * sigma_px
    s2 = sigma_px * sigma_px
    for (fx, fy), wt in zip(np.asarray(xy, float).reshape(-1, 2), weights):
        c0, c1 = max(0, int(np.ceil(fx - reach))), min(w - 1, int(np.floor(fx + reach)))
        r0, r1 = max(0, int(np.ceil(fy - reach))), min(h - 1, int(np.floor(fy + reach)))
        if c0 > c1 or r0 > r1:
            continue
        dx2 = (np.arange(c0, c1 + 1) - fx) ** 2
        dy2 = (np.arange(r0, r1 + 1) - fy) ** 2
        d2 = dy2[:, None] + dx2[None, :]
        grid[r0 : r1 + 1, c0 : c1 + 1] += np.where(d2 <= reach * reach, wt * np.exp(-d2 / s2), 0.0)
    return grid


def raw_map(
    fixations: Sequence[Fixation],
    geometry: StimulusGeometry,
    sigma_px: float = 36.0,
    use_duration: bool = True,
    provenance: Sequence[str] = (),
) -> FixationMap:
    if not len(fixations):
        raise ValueError("cannot build a fixation map from zero fixations")
    if not sigma_px > 0:
        raise ValueError("sigma_px must be positive")
    xy = np.array([(f.x, f.y) for f in fixations], dtype=float)
    t = np.array([f.duration_ms for f in fixations], dtype=float) if use_duration else np.ones(len(fixations))
    grid = splat_sum(xy, t, geometry.shape, sigma_px) / t.sum()
    return FixationMap(grid, "raw", float(sigma_px), tuple(provenance))


def _zscore(grid: np.ndarray) -> np.ndarray:
    mean = grid.mean()
    std = grid.std()
    if not std > 1e-12 * max(1.0, abs(mean)):
        raise ValueError("cannot standardize a map with zero variance")
    return (grid - mean) / std


def standardize(fmap: FixationMap) -> FixationMap:
    """Zero mean, unit (population) standard deviation over the whole grid."""
    return FixationMap(_zscore(fmap.grid), "standardized", fmap.sigma_px, fmap.provenance)


def sketch_map(
    fixations: Sequence[Fixation],
    geometry: StimulusGeometry,
    sigma_px: float = 36.0,
    use_duration: bool = True,
    provenance: Sequence[str] = (),
) -> FixationMap:
    """Standardized map of a fixation set (raw map followed by standardize)."""
    return standardize(raw_map(fixations, geometry, sigma_px, use_duration, provenance))


def category_map(maps: Sequence[FixationMap]) -> FixationMap:
    if not maps:
        raise ValueError("category map needs at least one sketch map")
    shape = maps[0].shape
    acc = np.zeros(shape)
    prov: list[str] = []
    for m in maps:
        if m.shape != shape:
            raise ValueError(f"map shape mismatch: {m.shape} vs {shape}")
        acc += m.grid
        prov.extend(m.provenance)
    return FixationMap(acc / len(maps), "category", maps[0].sigma_px, tuple(prov))


def marginalize(category_maps: Mapping[str, FixationMap]) -> dict[str, FixationMap]:
    """Subtract the mean over all category maps from each category map."""
    if len(category_maps) < 2:
        raise ValueError("marginalization needs at least two categories")
    maps = list(category_maps.values())
    shape = maps[0].shape
    if any(m.shape != shape for m in maps):
        raise ValueError("category maps differ in shape")
    grand = sum(m.grid for m in maps) / len(maps)
    return {
        c: FixationMap(m.grid - grand, "marginalized", m.sigma_px, (c,))
        for c, m in category_maps.items()
    }


# --- image output -----------------------------------------------------------

def quantize(grid: np.ndarray) -> tuple[np.ndarray, float, float]:
    """Min-max scale to integer levels 0..255; a constant grid maps to 128."""
    lo, hi = float(grid.min()), float(grid.max())
    if hi == lo:
        return np.full(grid.shape, 128, dtype=np.uint8), lo, hi
    q = np.floor((grid - lo) / (hi - lo) * 255.0 + 0.5)
    return np.clip(q, 0, 255).astype(np.uint8), lo, hi


def dequantize(levels: np.ndarray, lo: float, hi: float) -> np.ndarray:
    if hi == lo:
        return np.full(levels.shape, lo, dtype=float)
    return lo + levels.astype(float) / 255.0 * (hi - lo)


def heat_palette() -> np.ndarray:
    """Black-red-yellow-white ramp; injective, so heat images invert exactly."""
    v = 3 * np.arange(256)
    return np.stack(
        [np.clip(v, 0, 255), np.clip(v - 255, 0, 255), np.clip(v - 510, 0, 255)], axis=1
    ).astype(np.uint8)


def _header(magic: str, shape) -> bytes:
    h, w = shape
    return f"{magic}\n# gazekit {__version__}\n{w} {h}\n255\n".encode("ascii")


def render_map(fmap: FixationMap, path, style: str = "gray") -> Path:
    """Write a binary PGM (gray) or PPM (heat) image plus ``<image>.meta.json``."""
    if style not in ("gray", "heat"):
        raise ValueError(f"unknown style {style!r}")
    path = Path(path)
    levels, lo, hi = quantize(fmap.grid)
    if style == "gray":
        payload = _header("P5", levels.shape) + levels.tobytes()
    else:
        payload = _header("P6", levels.shape) + heat_palette()[levels].tobytes()
    path.write_bytes(payload)
    meta = {"min": lo, "max": hi, "kind": fmap.kind, "style": style, "version": __version__}
    Path(str(path) + ".meta.json").write_text(json.dumps(meta, indent=1) + "\n", encoding="utf-8")
    return path


def read_netpbm(path) -> tuple[str, np.ndarray]:
    """Parse a binary PGM/PPM written by :func:`render_map`."""
    data = Path(path).read_bytes()
    fields, pos = [], 0
    while len(fields) < 4:
        while data[pos : pos + 1].isspace():
            pos += 1
        if data[pos : pos + 1] == b"#":
            pos = data.index(b"\n", pos) + 1
            continue
        end = pos
        while not data[end : end + 1].isspace():
            end += 1
        fields.append(data[pos:end].decode("ascii"))
        pos = end
    pos += 1
    magic, w, h = fields[0], int(fields[1]), int(fields[2])
    channels = {"P5": 1, "P6": 3}[magic]
    arr = np.frombuffer(data[pos : pos + w * h * channels], dtype=np.uint8)
    return magic, arr.reshape(h, w) if channels == 1 else arr.reshape(h, w, 3)


def load_rendered(path) -> np.ndarray:
    """De-scale a rendered image back to map values using its sidecar."""
    meta = json.loads(Path(str(path) + ".meta.json").read_text(encoding="utf-8"))
    magic, img = read_netpbm(path)
    if magic == "P6":
        # red channel is 3*level clipped at 255, green adds the next third, blue the last
        levels = (img.astype(int).sum(axis=2) // 3).astype(np.uint8)
    else:
        levels = img
    return dequantize(levels, meta["min"], meta["max"])
