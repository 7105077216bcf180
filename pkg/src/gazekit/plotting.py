"""Report figures, drawn with matplotlib's Agg backend straight to PNG files."""

from __future__ import annotations

from pathlib import Path
from typing import Mapping, Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

STYLE = {
    "font.size": 9,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "axes.titlesize": 10,
    "savefig.dpi": 120,
}
DECODER_COLORS = {"random": "0.2", "dtw": "tab:orange", "viterbi": "tab:green", "pmap": "tab:blue"}


def _save(fig, path: Path) -> Path:
    # no Software/timestamp metadata, so identical inputs give identical bytes
    fig.savefig(path, format="png", metadata={"Software": None})
    plt.close(fig)
    return path


def _width(n: int) -> float:
    return max(4.0, 0.45 * n + 1.5)


def ioc_figure(median: Mapping[str, float], random_median: Mapping[str, float], path: Path) -> Path:
    cats = sorted(median)
    x = np.arange(len(cats))
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(_width(len(cats)), 3.2))
        ax.plot(x, [median[c] for c in cats], "o-", color="tab:red", label="median IOC")
        ax.plot(x, [random_median[c] for c in cats], "s--", color="tab:blue", label="random median IOC")
        ax.set_xticks(x, cats, rotation=60, ha="right")
        ax.set_ylim(0, 1)
        ax.set_ylabel("sAUC")
        ax.legend(frameon=False, loc="lower right")
        fig.tight_layout()
        return _save(fig, path)


def accuracy_figure(accuracy: Mapping[str, float], chance: float, path: Path, title: str = "") -> Path:
    cats = sorted(accuracy)
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(_width(len(cats)), 3.2))
        ax.bar(np.arange(len(cats)), [accuracy[c] for c in cats], color="tab:blue")
        ax.axhline(chance, color="k", ls=":", lw=1, label=f"chance = {chance:.3f}")
        ax.set_xticks(np.arange(len(cats)), cats, rotation=60, ha="right")
        ax.set_ylim(0, 1)
        ax.set_ylabel("prediction rate")
        if title:
            ax.set_title(title)
        ax.legend(frameon=False)
        fig.tight_layout()
        return _save(fig, path)


def similarity_figure(similarity: Mapping[str, float], zscore: Mapping[str, float], path: Path) -> Path:
    cats = sorted(similarity)
    x = np.arange(len(cats))
    with plt.rc_context(STYLE):
        fig, (top, bottom) = plt.subplots(2, 1, figsize=(_width(len(cats)), 4.8), sharex=True)
        top.plot(x, [similarity[c] for c in cats], "o-", color="tab:red")
        top.set_ylim(0, 1)
        top.set_ylabel("median similarity")
        bottom.plot(x, [zscore.get(c, np.nan) for c in cats], "s-", color="tab:blue")
        bottom.axhline(2.0, color="k", ls=":", lw=1)
        bottom.set_ylabel("median z-score")
        bottom.set_xticks(x, cats, rotation=60, ha="right")
        fig.tight_layout()
        return _save(fig, path)


def decoder_figure(per_category: Mapping[str, Mapping[str, float]], decoders: Sequence[str], path: Path) -> Path:
    cats = sorted(per_category)
    x = np.arange(len(cats))
    w = 0.8 / max(1, len(decoders))
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(_width(len(cats) * max(1, len(decoders)) / 2), 3.4))
        for k, d in enumerate(decoders):
            ax.bar(x + (k - (len(decoders) - 1) / 2) * w, [per_category[c][d] for c in cats], w,
                   label=d, color=DECODER_COLORS.get(d))
        ax.set_xticks(x, cats, rotation=60, ha="right")
        ax.set_ylim(0, 1)
        ax.set_ylabel("median sequence accuracy")
        ax.legend(frameon=False, ncol=len(decoders), loc="upper center", bbox_to_anchor=(0.5, 1.15))
        fig.tight_layout()
        return _save(fig, path)


def map_panel(grids: Mapping[str, np.ndarray], path: Path, cmap: str = "inferno") -> Path:
    names = sorted(grids)
    ncol = min(5, len(names))
    nrow = int(np.ceil(len(names) / ncol))
    with plt.rc_context(STYLE):
        fig, axes = plt.subplots(nrow, ncol, figsize=(2.2 * ncol, 2.3 * nrow), squeeze=False)
        for ax in axes.flat:
            ax.axis("off")
        for ax, name in zip(axes.flat, names):
            ax.imshow(grids[name], cmap=cmap, interpolation="nearest")
            ax.set_title(name)
        fig.tight_layout()
        return _save(fig, path)
