"""Report figures. Every function writes one file and returns its path.

SVG output is byte-stable across runs: the id salt is fixed and the date
metadata is dropped.
"""
from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

CLASS_COLORS = ("#3498db", "#e74c3c")
CLASS_NAMES = ("class 0", "class 1")

STYLE = {
    "font.size": 10,
    "axes.linewidth": 0.8,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "figure.figsize": (6.4, 4.0),
    "legend.frameon": False,
    "svg.fonttype": "path",
    "svg.hashsalt": "nodesal",
    "path.simplify": False,
}


def _save(fig, path) -> Path:
    path = Path(path)
    fmt = path.suffix.lstrip(".") or "svg"
    meta = {"Date": None} if fmt == "svg" else None
    fig.savefig(path, format=fmt, metadata=meta, bbox_inches="tight")
    plt.close(fig)
    return path


def node_histogram(hist, node: int, sns_value: float, path) -> Path:
    """Grouped per-bin bars for the two classes of one node."""
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        k = hist.k
        x = np.arange(k)
        width = 0.4
        ax.bar(x - width / 2, hist.counts_class0, width, color=CLASS_COLORS[0], label=CLASS_NAMES[0])
        ax.bar(x + width / 2, hist.counts_class1, width, color=CLASS_COLORS[1], label=CLASS_NAMES[1])
        edges = hist.bin_edges()
        ax.set_xticks(x)
        ax.set_xticklabels([f"{edges[r]:.2g}-{edges[r + 1]:.2g}" for r in range(k)],
                           rotation=45, ha="right")
        ax.set_xlabel("activation")
        ax.set_ylabel("samples")
        ax.set_title(f"node {node}  SNS = {sns_value:.4f}")
        ax.legend()
        return _save(fig, path)


def sns_curve(report, path, top: int = 500) -> Path:
    ranked = report.ranked()[:top]
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        ax.plot(np.arange(1, len(ranked) + 1), [r.sns for r in ranked], color="k", lw=1.2)
        step = max(1, len(ranked) // 20)
        ticks = np.arange(1, len(ranked) + 1, step)
        ax.set_xticks(ticks)
        ax.set_xticklabels([str(ranked[t - 1].node) for t in ticks], rotation=90, fontsize=7)
        ax.set_xlabel("node (ascending SNS)")
        ax.set_ylabel("SNS")
        return _save(fig, path)


def ned_profile(report, path, top: int = 100) -> Path:
    """NED, NED_0 and NED_1 of the best-ranked nodes."""
    ranked = report.ranked()[:top]
    x = np.arange(1, len(ranked) + 1)
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        ax.plot(x, [r.ned for r in ranked], "k-", lw=1.2, label="NED")
        ax.plot(x, [r.ned0 for r in ranked], "--", color=CLASS_COLORS[0], label="NED$_0$")
        ax.plot(x, [r.ned1 for r in ranked], ":", color=CLASS_COLORS[1], label="NED$_1$")
        step = max(1, len(ranked) // 20)
        ticks = np.arange(1, len(ranked) + 1, step)
        ax.set_xticks(ticks)
        ax.set_xticklabels([str(ranked[t - 1].node) for t in ticks], rotation=90, fontsize=7)
        ax.set_xlabel("node (ascending SNS)")
        ax.set_ylabel("NED")
        ax.set_ylim(0, 1.02)
        ax.legend()
        return _save(fig, path)


def weight_histogram(profile, path) -> Path:
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        edges = profile.hist_edges
        ax.stairs(profile.hist_counts, edges, fill=True, color="0.4")
        ax.set_xlabel("weight")
        ax.set_ylabel("features")
        ax.set_title(f"input weights of node {profile.node}")
        return _save(fig, path)


def pca_scatter(scores, path, groups=None, labels=None) -> Path:
    """First two score columns, colored by group and marked by label."""
    scores = np.asarray(scores)
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(5.5, 5.0))
        y = scores[:, 1] if scores.shape[1] > 1 else np.zeros(len(scores))
        keys = sorted(set(groups)) if groups is not None else [None]
        markers = {0: "o", 1: "^"}
        for gi, g in enumerate(keys):
            gmask = np.ones(len(scores), bool) if g is None else np.array([t == g for t in groups])
            color = f"C{gi % 10}"
            if labels is None:
                ax.scatter(scores[gmask, 0], y[gmask], s=10, color=color, label=g)
                continue
            for c in (0, 1):
                m = gmask & (np.asarray(labels) == c)
                if m.any():
                    name = f"{g} / {c}" if g is not None else f"class {c}"
                    ax.scatter(scores[m, 0], y[m], s=10, color=color if g is not None else CLASS_COLORS[c],
                               marker=markers[c], label=name)
        ax.set_xlabel("PC1")
        ax.set_ylabel("PC2")
        if groups is not None or labels is not None:
            ax.legend(fontsize=7, markerscale=1.5)
        return _save(fig, path)


def training_history(history, path) -> Path:
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        ax.plot(history.epoch, history.train_mse, "k-", label="train MSE")
        ax.plot(history.epoch, history.val_mse, "--", color=CLASS_COLORS[0], label="validation MSE")
        ax.set_xlabel("epoch")
        ax.set_ylabel("MSE")
        ax2 = ax.twinx()
        ax2.plot(history.epoch, history.val_pearson, ":", color=CLASS_COLORS[1], label="validation Pearson")
        ax2.set_ylabel("Pearson")
        ax2.grid(False)
        lines = ax.get_lines() + ax2.get_lines()
        ax.legend(lines, [ln.get_label() for ln in lines], loc="center right")
        return _save(fig, path)


def scaling(rows, path) -> Path:
    workers = [r.workers for r in rows]
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        ax.plot(workers, [r.speedup for r in rows], "ko-", label="measured")
        ax.plot(workers, workers, "--", color="0.6", label="ideal")
        ax.set_xlabel("workers")
        ax.set_ylabel("speedup")
        ax.legend()
        return _save(fig, path)
