"""Histogram-based node saliency for two-class data.

For one hidden node the activations are binned into ``k`` equal bins over
[0, 1] (bin r covers [(r-1)/k, r/k), the last bin is closed). From the bin
counts we derive

* NED, the normalized entropy difference of the combined histogram,
  ``1 + sum_r p_r log2 p_r / log2 k_hat`` with ``k_hat`` occupied bins;
* NED_0 and NED_1, the same quantity on each class's own distribution;
* WCE_0 and WCE_1, occupancy-weighted cross entropies between the per-bin
  class-1 proportion and a step reference that puts one class in the lower
  bins and the other in the upper bins;
* SNS = min(WCE_0, WCE_1). Lower SNS means better class separation.

Node numbers are 1-based throughout reports.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

DEFAULT_BINS = 10
CLAMP_EPS = 1e-12
REPORT_COLUMNS = ("node", "sns", "wce0", "wce1", "ned", "ned0", "ned1", "good_classifier", "rank")
HISTOGRAM_COLUMNS = ("bin_lo", "bin_hi", "count_class0", "count_class1")


@dataclass(frozen=True, eq=False)
class ActivationHistogram:
    counts_class0: np.ndarray
    counts_class1: np.ndarray

    def __post_init__(self):
        c0 = np.asarray(self.counts_class0, dtype=np.int64)
        c1 = np.asarray(self.counts_class1, dtype=np.int64)
        if c0.ndim != 1 or c0.shape != c1.shape or c0.size < 2:
            raise ValueError("class count vectors must be 1-D, equal length, k >= 2")
        if (c0 < 0).any() or (c1 < 0).any():
            raise ValueError("counts must be non-negative")
        object.__setattr__(self, "counts_class0", c0)
        object.__setattr__(self, "counts_class1", c1)

    @property
    def k(self) -> int:
        return self.counts_class0.size

    @property
    def counts(self) -> np.ndarray:
        return self.counts_class0 + self.counts_class1

    @property
    def n(self) -> int:
        return int(self.counts.sum())

    @property
    def n0(self) -> int:
        return int(self.counts_class0.sum())

    @property
    def n1(self) -> int:
        return int(self.counts_class1.sum())

    @property
    def occupied(self) -> int:
        """Number of nonempty bins (k-hat)."""
        return int(np.count_nonzero(self.counts))

    def class_counts(self, c: int) -> np.ndarray:
        if c == 0:
            return self.counts_class0
        if c == 1:
            return self.counts_class1
        raise ValueError(f"class must be 0 or 1, got {c!r}")

    def swapped(self) -> "ActivationHistogram":
        return ActivationHistogram(self.counts_class1, self.counts_class0)

    def bin_edges(self) -> np.ndarray:
        return np.arange(self.k + 1) / self.k

    def to_csv(self, path) -> None:
        edges = self.bin_edges()
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(HISTOGRAM_COLUMNS)
            for r in range(self.k):
                w.writerow([repr(float(edges[r])), repr(float(edges[r + 1])),
                            int(self.counts_class0[r]), int(self.counts_class1[r])])


def bin_index(a, k: int) -> np.ndarray:
    """0-based bin of each value; 1.0 falls in the last bin."""
    # compare against the edges themselves; floor(a * k) can round across an edge
    edges = np.arange(k + 1) / k
    idx = np.searchsorted(edges, np.asarray(a, dtype=np.float64), side="right") - 1
    return np.clip(idx, 0, k - 1).astype(np.int64)


def build_histogram(a, labels, k: int = DEFAULT_BINS) -> ActivationHistogram:
    a = np.asarray(a, dtype=np.float64).ravel()
    labels = np.asarray(labels).ravel()
    if k < 2:
        raise ValueError(f"need k >= 2 bins, got {k}")
    if a.size == 0:
        raise ValueError("empty activation vector")
    if labels.shape != a.shape:
        raise ValueError(f"{labels.size} labels for {a.size} activations")
    if not np.all((a >= 0.0) & (a <= 1.0)):
        raise ValueError("activations must lie in [0, 1]")
    if not np.all((labels == 0) | (labels == 1)):
        raise ValueError("labels must be 0 or 1")
    idx = bin_index(a, k)
    is1 = labels == 1
    return ActivationHistogram(
        np.bincount(idx[~is1], minlength=k), np.bincount(idx[is1], minlength=k)
    )


def _normalized_entropy_difference(counts: np.ndarray, k_hat: int) -> float:
    if k_hat == 1:
        # a single occupied bin: formula is 0/0, treated as maximal concentration
        return 1.0
    nz = counts[counts > 0]
    p = nz / nz.sum()
    value = 1.0 + float(np.sum(p * np.log2(p))) / float(np.log2(k_hat))
    return min(max(value, 0.0), 1.0)


def ned(hist: ActivationHistogram) -> float:
    if hist.n == 0:
        raise ValueError("empty histogram")
    return _normalized_entropy_difference(hist.counts, hist.occupied)


def ned_class(hist: ActivationHistogram, c: int) -> float:
    """NED of class ``c`` alone, normalized by the combined histogram's k-hat."""
    counts = hist.class_counts(c)
    if counts.sum() == 0:
        raise ValueError(f"class {c} is empty")
    return _normalized_entropy_difference(counts, hist.occupied)


def binomial_proportions(hist: ActivationHistogram) -> np.ndarray:
    """Fraction of class-1 samples per bin; NaN marks empty bins."""
    counts = hist.counts
    q = np.full(hist.k, np.nan)
    occ = counts > 0
    q[occ] = hist.counts_class1[occ] / counts[occ]
    return q


def reference_distribution(k: int) -> np.ndarray:
    """Step reference: 0 for 1-based bins r < k/2, 1 for r >= k/2.

    The first bin is always 0, which only matters for k = 2 where the literal
    rule would mark both bins.
    """
    if k < 2:
        raise ValueError(f"need k >= 2 bins, got {k}")
    r = np.arange(1, k + 1)
    p = (r >= k / 2).astype(np.float64)
    p[0] = 0.0
    return p


def _clamped_logs(hist: ActivationHistogram):
    occ = hist.counts > 0
    counts = hist.counts[occ]
    weight = counts / hist.n
    q1 = np.clip(hist.counts_class1[occ] / counts, CLAMP_EPS, 1.0 - CLAMP_EPS)
    q0 = np.clip(hist.counts_class0[occ] / counts, CLAMP_EPS, 1.0 - CLAMP_EPS)
    return occ, weight, np.log2(q1), np.log2(q0)


def _weighted_ce(weight, p, log_hi, log_lo) -> float:
    return float(np.sum(weight * -(p * log_hi + (1.0 - p) * log_lo)))


def wce(hist: ActivationHistogram, orientation: int) -> float:
    """Weighted cross entropy against the reference.

    ``orientation=1`` expects class 1 in the upper bins, ``orientation=0``
    expects class 0 there. Empty bins carry zero weight.
    """
    if hist.n == 0:
        raise ValueError("empty histogram")
    occ, weight, log_q1, log_q0 = _clamped_logs(hist)
    p = reference_distribution(hist.k)[occ]
    if orientation == 1:
        return _weighted_ce(weight, p, log_q1, log_q0)
    if orientation == 0:
        return _weighted_ce(weight, p, log_q0, log_q1)
    raise ValueError(f"orientation must be 0 or 1, got {orientation!r}")


@dataclass(frozen=True)
class NodeSaliency:
    node: int
    sns: float
    wce0: float
    wce1: float
    ned: float
    ned0: float
    ned1: float
    good_classifier: bool


def sns(hist: ActivationHistogram, node: int = 1) -> NodeSaliency:
    if hist.n0 == 0 or hist.n1 == 0:
        raise ValueError("supervised saliency needs samples from both classes")
    w0 = wce(hist, 0)
    w1 = wce(hist, 1)
    e = ned(hist)
    e0 = ned_class(hist, 0)
    e1 = ned_class(hist, 1)
    return NodeSaliency(
        node=node, sns=min(w0, w1), wce0=w0, wce1=w1,
        ned=e, ned0=e0, ned1=e1, good_classifier=(e < e0 and e < e1),
    )


@dataclass
class SaliencyReport:
    nodes: list          # NodeSaliency in node order
    ranking: list        # node numbers, ascending SNS
    histograms: list     # ActivationHistogram in node order
    k: int

    def __len__(self):
        return len(self.nodes)

    def by_node(self, s: int) -> NodeSaliency:
        return self.nodes[s - 1]

    def histogram(self, s: int) -> ActivationHistogram:
        return self.histograms[s - 1]

    def ranked(self) -> list:
        return [self.nodes[s - 1] for s in self.ranking]

    def rank_of(self) -> dict:
        return {s: i for i, s in enumerate(self.ranking, start=1)}

    def to_csv(self, path) -> None:
        rank = self.rank_of()
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(REPORT_COLUMNS)
            for ns in self.nodes:
                w.writerow([ns.node, repr(ns.sns), repr(ns.wce0), repr(ns.wce1),
                            repr(ns.ned), repr(ns.ned0), repr(ns.ned1),
                            int(ns.good_classifier), rank[ns.node]])


def rank_nodes(A, labels, k: int = DEFAULT_BINS) -> SaliencyReport:
    """Saliency of every row of the (m, n) activation matrix ``A``."""
    A = np.atleast_2d(np.asarray(A, dtype=np.float64))
    labels = np.asarray(labels)
    if A.shape[1] != labels.size:
        raise ValueError(f"A has {A.shape[1]} samples but {labels.size} labels given")
    hists = [build_histogram(A[s], labels, k) for s in range(A.shape[0])]
    nodes = [sns(h, node=s + 1) for s, h in enumerate(hists)]
    # stable sort on SNS keeps ties in node order
    ranking = sorted(range(1, len(nodes) + 1), key=lambda s: nodes[s - 1].sns)
    return SaliencyReport(nodes, ranking, hists, k)


@dataclass(frozen=True)
class WeightProfile:
    node: int
    weights: np.ndarray
    hist_counts: np.ndarray
    hist_edges: np.ndarray
    top_indices: np.ndarray
    top_features: tuple

    def to_csv(self, path, feature_ids: Optional[Sequence[str]] = None) -> None:
        """All features ordered by |weight| descending."""
        order = np.argsort(-np.abs(self.weights), kind="stable")
        ids = feature_ids or [f"f{j}" for j in range(self.weights.size)]
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(("rank", "feature", "weight"))
            for r, j in enumerate(order, start=1):
                w.writerow([r, ids[j], repr(float(self.weights[j]))])


def node_weight_profile(model, s: int, top_n: int = 20, feature_ids=None, bins: int = 50) -> WeightProfile:
    """Input weights of node ``s`` (1-based): 50-bin histogram plus the top
    ``top_n`` features by absolute weight."""
    if not 1 <= s <= model.m:
        raise ValueError(f"node {s} out of range 1..{model.m}")
    w = np.array(model.W[s - 1])
    counts, edges = np.histogram(w, bins=bins)
    order = np.argsort(-np.abs(w), kind="stable")[: max(top_n, 0)]
    ids = feature_ids if feature_ids is not None else [f"f{j}" for j in range(model.d)]
    return WeightProfile(s, w, counts, edges, order, tuple(ids[j] for j in order))
