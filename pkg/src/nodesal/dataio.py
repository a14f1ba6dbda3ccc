"""Labeled feature matrices: loading, min-max normalization, splitting, subsetting
and a synthetic two-class generator.

File layout (tab or comma delimited, detected from the header line)::

    sample  f1   f2   ...  [group]  [label]
    s1      0.3  0.1  ...  breast   1

The first column holds sample identifiers. A column headed ``group`` holds an
optional category tag; when labels are requested they are the last column.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional, Sequence, Union

import numpy as np

NORMALIZER_VERSION = "v1"


class DatasetError(ValueError):
    """Raised for structurally invalid datasets."""


class ParseError(DatasetError):
    pass


class LabelError(DatasetError):
    pass


@dataclass(frozen=True)
class LabeledDataset:
    values: np.ndarray
    sample_ids: tuple
    feature_ids: tuple
    labels: Optional[np.ndarray] = None
    group_tags: Optional[tuple] = None

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64, copy=True)
        if values.ndim != 2:
            raise DatasetError(f"values must be 2-D, got shape {values.shape}")
        n, d = values.shape
        values.flags.writeable = False
        object.__setattr__(self, "values", values)

        sample_ids = tuple(str(s) for s in self.sample_ids)
        feature_ids = tuple(str(f) for f in self.feature_ids)
        if len(sample_ids) != n:
            raise DatasetError(f"{len(sample_ids)} sample ids for {n} rows")
        if len(feature_ids) != d:
            raise DatasetError(f"{len(feature_ids)} feature ids for {d} columns")
        _check_unique(sample_ids, "sample")
        _check_unique(feature_ids, "feature")
        object.__setattr__(self, "sample_ids", sample_ids)
        object.__setattr__(self, "feature_ids", feature_ids)

        if self.labels is not None:
            labels = np.asarray(self.labels)
            if labels.shape != (n,):
                raise LabelError(f"expected {n} labels, got shape {labels.shape}")
            bad = ~np.isin(labels, (0, 1))
            if bad.any():
                i = int(np.flatnonzero(bad)[0])
                raise LabelError(f"label {labels[i]!r} of sample {sample_ids[i]!r} is not 0 or 1")
            labels = labels.astype(np.int64)
            labels.flags.writeable = False
            object.__setattr__(self, "labels", labels)

        if self.group_tags is not None:
            tags = tuple(str(t) for t in self.group_tags)
            if len(tags) != n:
                raise DatasetError(f"{len(tags)} group tags for {n} rows")
            object.__setattr__(self, "group_tags", tags)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def d(self) -> int:
        return self.values.shape[1]

    def is_normalized(self) -> bool:
        return bool(np.all((self.values >= 0.0) & (self.values <= 1.0)))

    def take(self, indices) -> "LabeledDataset":
        """Row subset in the order given by ``indices``."""
        idx = np.asarray(indices, dtype=np.intp)
        return LabeledDataset(
            values=self.values[idx],
            sample_ids=[self.sample_ids[i] for i in idx],
            feature_ids=self.feature_ids,
            labels=None if self.labels is None else self.labels[idx],
            group_tags=None if self.group_tags is None else [self.group_tags[i] for i in idx],
        )

    def with_values(self, values) -> "LabeledDataset":
        return LabeledDataset(values, self.sample_ids, self.feature_ids, self.labels, self.group_tags)


def _check_unique(ids: Sequence[str], axis: str) -> None:
    if len(set(ids)) != len(ids):
        seen = set()
        for s in ids:
            if s in seen:
                raise DatasetError(f"duplicate {axis} id {s!r}")
            seen.add(s)


@dataclass(frozen=True)
class NormalizationRecord:
    feature_ids: tuple
    minimum: np.ndarray
    maximum: np.ndarray

    def __post_init__(self):
        lo = np.asarray(self.minimum, dtype=np.float64)
        hi = np.asarray(self.maximum, dtype=np.float64)
        if lo.shape != hi.shape or lo.shape != (len(self.feature_ids),):
            raise DatasetError("normalization record dimensions disagree")
        if np.any(hi < lo):
            raise DatasetError("normalization record has max < min")
        object.__setattr__(self, "feature_ids", tuple(self.feature_ids))
        object.__setattr__(self, "minimum", lo)
        object.__setattr__(self, "maximum", hi)

    def save(self, path) -> None:
        lines = [NORMALIZER_VERSION]
        for f, lo, hi in zip(self.feature_ids, self.minimum, self.maximum):
            lines.append(f"{f}\t{float(lo)!r}\t{float(hi)!r}")
        Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path) -> "NormalizationRecord":
        lines = Path(path).read_text(encoding="utf-8").splitlines()
        if not lines or lines[0].strip() != NORMALIZER_VERSION:
            raise ParseError(f"{path}: not a {NORMALIZER_VERSION} normalization record")
        ids, lo, hi = [], [], []
        for lineno, line in enumerate(lines[1:], start=2):
            if not line.strip():
                continue
            parts = line.split("\t")
            if len(parts) != 3:
                raise ParseError(f"{path}:{lineno}: expected 3 fields, got {len(parts)}")
            try:
                lo.append(float(parts[1]))
                hi.append(float(parts[2]))
            except ValueError:
                raise ParseError(f"{path}:{lineno}: non-numeric bound") from None
            ids.append(parts[0])
        return cls(tuple(ids), np.array(lo), np.array(hi))


def _scale(values: np.ndarray, record: NormalizationRecord) -> np.ndarray:
    span = record.maximum - record.minimum
    constant = span == 0
    out = (values - record.minimum) / np.where(constant, 1.0, span)
    out[:, constant] = 0.0
    return np.clip(out, 0.0, 1.0)


def fit_normalizer(dataset: LabeledDataset):
    """Per-feature min-max scaling fitted on ``dataset``.

    Returns ``(record, normalized_dataset)``. Constant features map to 0.
    """
    if dataset.n < 1:
        raise DatasetError("cannot fit a normalizer on an empty dataset")
    record = NormalizationRecord(
        dataset.feature_ids, dataset.values.min(axis=0), dataset.values.max(axis=0)
    )
    return record, dataset.with_values(_scale(dataset.values, record))


def apply_normalizer(record: NormalizationRecord, dataset: LabeledDataset) -> LabeledDataset:
    # values outside the fitted range are clamped into [0, 1]
    if dataset.d != len(record.feature_ids):
        raise DatasetError(
            f"dataset has {dataset.d} features, normalization record has {len(record.feature_ids)}"
        )
    return dataset.with_values(_scale(dataset.values, record))


def split_indices(n: int, fraction: float, seed) -> tuple[np.ndarray, np.ndarray]:
    if not 0.0 < fraction < 1.0:
        raise ValueError(f"validation fraction must lie in (0, 1), got {fraction}")
    if n < 2:
        raise DatasetError("need at least 2 samples to split")
    n_val = int(math.floor(fraction * n + 0.5))
    n_val = min(max(n_val, 1), n - 1)
    perm = np.random.default_rng(seed).permutation(n)
    return np.sort(perm[n_val:]), np.sort(perm[:n_val])


def split_train_validation(dataset: LabeledDataset, fraction: float, seed):
    """Random disjoint train/validation partition, deterministic in ``seed``.

    Both parts keep the original row order.
    """
    train_idx, val_idx = split_indices(dataset.n, fraction, seed)
    return dataset.take(train_idx), dataset.take(val_idx)


def select_subset(
    dataset: LabeledDataset, predicate: Union[str, Callable[[str], bool]]
) -> LabeledDataset:
    """Rows whose group tag equals ``predicate`` (a string) or satisfies it (a callable)."""
    if dataset.group_tags is None:
        raise DatasetError("dataset has no group column")
    if isinstance(predicate, str):
        wanted = predicate
        predicate = lambda tag: tag == wanted  # noqa: E731
    idx = [i for i, tag in enumerate(dataset.group_tags) if predicate(tag)]
    if not idx:
        raise DatasetError("group selection matched no samples")
    return dataset.take(idx)


def generate_synthetic(
    n_per_class: int,
    d: int,
    n_informative: int,
    separation: float,
    seed,
    n_groups: int = 0,
) -> LabeledDataset:
    """Two Gaussian classes with a planted signal, min-max scaled to [0, 1].

    Every feature is unit-variance Gaussian noise; the first ``n_informative``
    features of class 1 are shifted by ``separation``. Rows are class 0 then
    class 1. With ``n_groups > 0`` samples get round-robin tags ``g0, g1, ...``.
    """
    if n_per_class < 1 or d < 1:
        raise ValueError("n_per_class and d must be positive")
    if not 0 <= n_informative <= d:
        raise ValueError(f"n_informative must lie in [0, d={d}], got {n_informative}")
    if not separation >= 0:
        raise ValueError("separation must be non-negative")
    if n_groups < 0:
        raise ValueError("n_groups must be non-negative")

    rng = np.random.default_rng(seed)
    n = 2 * n_per_class
    labels = np.repeat([0, 1], n_per_class)
    raw = rng.standard_normal((n, d))
    raw[:, :n_informative] += separation * labels[:, None]

    width = len(str(n - 1))
    raw_ds = LabeledDataset(
        values=raw,
        sample_ids=[f"s{i:0{width}d}" for i in range(n)],
        feature_ids=[f"f{j:0{len(str(d - 1))}d}" for j in range(d)],
        labels=labels,
        group_tags=None if n_groups == 0 else [f"g{i % n_groups}" for i in range(n)],
    )
    return fit_normalizer(raw_ds)[1]


def _detect_delimiter(header: str) -> str:
    return "\t" if "\t" in header else ","


def load_matrix(path, has_labels: Optional[bool] = None) -> LabeledDataset:
    """Read a delimited dataset file.

    ``has_labels=None`` treats the last column as labels when its header is
    ``label``. Ragged rows, non-numeric or missing feature cells and labels
    other than 0/1 raise with the offending row (1-based, header excluded).
    """
    path = Path(path)
    with path.open(encoding="utf-8") as fh:
        lines = [line.rstrip("\r\n") for line in fh]
    while lines and not lines[-1].strip():
        lines.pop()
    if not lines:
        raise ParseError(f"{path}: empty file")

    delim = _detect_delimiter(lines[0])
    header = lines[0].split(delim)
    if has_labels is None:
        has_labels = header[-1].strip().lower() == "label"
    ncol = len(header)
    label_col = ncol - 1 if has_labels else None
    group_col = None
    tail = ncol - 1 if has_labels else ncol
    if tail - 1 >= 1 and header[tail - 1].strip().lower() == "group":
        group_col = tail - 1
    feat_end = group_col if group_col is not None else tail
    if feat_end < 2:
        raise ParseError(f"{path}: header has no feature columns")
    feature_ids = [h.strip() for h in header[1:feat_end]]

    n = len(lines) - 1
    values = np.empty((n, feat_end - 1))
    sample_ids, tags, labels = [], [], []
    for i, line in enumerate(lines[1:]):
        lineno = i + 2
        cells = line.split(delim)
        if len(cells) != ncol:
            raise ParseError(
                f"{path}: row {i + 1} (line {lineno}) has {len(cells)} cells, expected {ncol}"
            )
        sample_ids.append(cells[0].strip())
        for j in range(1, feat_end):
            cell = cells[j].strip()
            try:
                v = float(cell)
            except ValueError:
                v = math.nan
            if not math.isfinite(v):
                raise ParseError(
                    f"{path}: row {i + 1}, column {j + 1} ({header[j].strip()!r}): "
                    f"non-numeric value {cell!r}"
                )
            values[i, j - 1] = v
        if group_col is not None:
            tags.append(cells[group_col].strip())
        if label_col is not None:
            cell = cells[label_col].strip()
            if cell not in ("0", "1", "0.0", "1.0"):
                raise LabelError(f"{path}: row {i + 1}: label {cell!r} is not 0 or 1")
            labels.append(int(float(cell)))

    return LabeledDataset(
        values=values,
        sample_ids=sample_ids,
        feature_ids=feature_ids,
        labels=np.array(labels, dtype=np.int64) if has_labels else None,
        group_tags=tags if group_col is not None else None,
    )


def save_matrix(dataset: LabeledDataset, path, delimiter: str = "\t") -> None:
    """Write ``dataset`` in the layout read by :func:`load_matrix`.

    Floats use their shortest round-trip representation, so a save/load
    cycle is lossless.
    """
    header = ["sample", *dataset.feature_ids]
    if dataset.group_tags is not None:
        header.append("group")
    if dataset.labels is not None:
        header.append("label")
    rows = [delimiter.join(header)]
    for i in range(dataset.n):
        cells = [dataset.sample_ids[i], *(repr(float(v)) for v in dataset.values[i])]
        if dataset.group_tags is not None:
            cells.append(dataset.group_tags[i])
        if dataset.labels is not None:
            cells.append(str(int(dataset.labels[i])))
        rows.append(delimiter.join(cells))
    Path(path).write_text("\n".join(rows) + "\n", encoding="utf-8")
