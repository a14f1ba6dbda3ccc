"""Minibatch SGD for the tied-weight autoencoder, serial or data-parallel.

Data parallelism splits each minibatch into contiguous shards, computes the
per-shard gradient sums on a thread pool and adds them in ascending shard
order before averaging. The reduction order is fixed, so a run with a given
worker count is bit-reproducible and agrees with the serial run up to
floating-point reassociation.
"""
from __future__ import annotations

import contextlib
import csv
import logging
import time
from concurrent.futures import Executor, ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np
from threadpoolctl import threadpool_limits

from .autoencoder import (
    AutoencoderModel,
    Gradients,
    gradient_sums,
    mse_loss,
    pearson,
    reconstruct,
    scale_sums,
)
from .dataio import LabeledDataset, split_indices

log = logging.getLogger(__name__)

HISTORY_COLUMNS = ("epoch", "train_mse", "val_mse", "val_pearson", "seconds")
BENCHMARK_COLUMNS = ("workers", "mean_epoch_seconds", "speedup")


class DivergenceError(RuntimeError):
    def __init__(self, epoch: int, batch: int, loss: float):
        super().__init__(f"non-finite loss {loss} at epoch {epoch}, batch {batch}")
        self.epoch = epoch
        self.batch = batch


@dataclass(frozen=True)
class TrainConfig:
    # MSE is averaged over every entry, so gradients are ~1/d of a per-sample
    # sum; the default step size is sized for that.
    hidden_width: int = 64
    learning_rate: float = 1.0
    batch_size: int = 32
    epochs: int = 300
    seed: int = 0
    workers: int = 1
    validation_fraction: float = 0.2
    shuffle: bool = True

    def __post_init__(self):
        if self.hidden_width < 1:
            raise ValueError("hidden_width must be >= 1")
        if not (self.learning_rate >= 0 and np.isfinite(self.learning_rate)):
            raise ValueError("learning_rate must be finite and non-negative")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")
        if not 0.0 < self.validation_fraction < 1.0:
            raise ValueError("validation_fraction must lie in (0, 1)")


@dataclass
class TrainHistory:
    epoch: list = field(default_factory=list)
    train_mse: list = field(default_factory=list)
    val_mse: list = field(default_factory=list)
    val_pearson: list = field(default_factory=list)
    seconds: list = field(default_factory=list)
    initial_train_mse: float = float("nan")

    def __len__(self):
        return len(self.epoch)

    def append(self, epoch, train_mse, val_mse, val_pearson, seconds):
        self.epoch.append(epoch)
        self.train_mse.append(train_mse)
        self.val_mse.append(val_mse)
        self.val_pearson.append(val_pearson)
        self.seconds.append(seconds)

    def rows(self):
        return zip(self.epoch, self.train_mse, self.val_mse, self.val_pearson, self.seconds)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(HISTORY_COLUMNS)
            for e, tr, va, vp, sec in self.rows():
                w.writerow([e, repr(tr), repr(va), repr(vp), f"{sec:.6f}"])


def init_weights(m: int, d: int, seed) -> AutoencoderModel:
    """Glorot-uniform W, zero biases."""
    if m < 1 or d < 1:
        raise ValueError("m and d must be >= 1")
    limit = np.sqrt(6.0 / (m + d))
    W = np.random.default_rng(seed).uniform(-limit, limit, size=(m, d))
    return AutoencoderModel(W, np.zeros(m), np.zeros(d))


def _shard_bounds(n: int, workers: int):
    # contiguous, as equal as possible; trailing shards may be empty
    edges = [(n * i) // workers for i in range(workers + 1)]
    if n < workers:
        edges = list(range(n + 1)) + [n] * (workers - n)
    return list(zip(edges[:-1], edges[1:]))


def _parallel_sums(W, b, b_dec, X, workers: int, executor: Optional[Executor] = None):
    if workers == 1:
        return gradient_sums(W, b, b_dec, X)

    def shard(bounds):
        lo, hi = bounds
        if hi == lo:
            return np.zeros_like(W), np.zeros_like(b), np.zeros_like(b_dec), 0.0
        return gradient_sums(W, b, b_dec, X[lo:hi])

    bounds = _shard_bounds(X.shape[0], workers)
    if executor is None:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(shard, bounds))
    else:
        parts = list(executor.map(shard, bounds))

    dW, db, db_dec, sse = parts[0]
    dW, db, db_dec = dW.copy(), db.copy(), db_dec.copy()
    for pW, pb, pbd, psse in parts[1:]:
        dW += pW
        db += pb
        db_dec += pbd
        sse += psse
    return dW, db, db_dec, sse


def parallel_gradient(
    model: AutoencoderModel, batch, workers: int, executor: Optional[Executor] = None
) -> Gradients:
    """Mean-loss gradient of ``batch`` computed over ``workers`` contiguous shards."""
    if workers < 1:
        raise ValueError("workers must be >= 1")
    X = np.asarray(batch, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != model.d:
        raise ValueError(f"batch must have shape (n, {model.d}), got {X.shape}")
    if X.shape[0] == 0:
        raise ValueError("empty batch")
    sums = _parallel_sums(model.W, model.b, model.b_dec, X, workers, executor)
    return scale_sums(sums, X.size)


def _evaluate(model, X) -> tuple[float, float]:
    rec = reconstruct(model, X)
    try:
        r = pearson(X, rec)
    except ValueError:
        r = float("nan")
    return mse_loss(X, rec), r


@contextlib.contextmanager
def _blas_limit(workers: int):
    # keep BLAS single-threaded when we fan out ourselves
    if workers > 1:
        with threadpool_limits(limits=1, user_api="blas"):
            yield
    else:
        yield


def train(
    dataset: LabeledDataset,
    config: TrainConfig,
    initial: Optional[AutoencoderModel] = None,
    callback: Optional[Callable[[int, TrainHistory], None]] = None,
):
    """Run ``config.epochs`` epochs of minibatch SGD.

    The train/validation split and the initial weights are drawn from
    ``config.seed``; epoch ``e`` shuffles with the seed pair ``(seed, e)``. The
    trailing short batch of each epoch is used. Returns ``(model, history)``.
    """
    if not dataset.is_normalized():
        raise ValueError("training data must lie in [0, 1]; normalize it first")
    train_idx, val_idx = split_indices(dataset.n, config.validation_fraction, config.seed)
    X_train = dataset.values[train_idx]
    X_val = dataset.values[val_idx]
    n_train = X_train.shape[0]
    if config.batch_size > n_train:
        raise ValueError(f"batch_size {config.batch_size} exceeds {n_train} training samples")

    model = initial if initial is not None else init_weights(config.hidden_width, dataset.d, config.seed)
    if model.d != dataset.d or model.m != config.hidden_width:
        raise ValueError("initial model does not match the data width / hidden width")
    W, b, b_dec = model.W.copy(), model.b.copy(), model.b_dec.copy()
    lr = config.learning_rate
    bs = config.batch_size

    history = TrainHistory()
    history.initial_train_mse = mse_loss(X_train, reconstruct(model, X_train))

    pool = ThreadPoolExecutor(max_workers=config.workers) if config.workers > 1 else None
    try:
        with _blas_limit(config.workers):
            for epoch in range(1, config.epochs + 1):
                t0 = time.perf_counter()
                if config.shuffle:
                    order = np.random.default_rng([config.seed, epoch]).permutation(n_train)
                else:
                    order = np.arange(n_train)
                for k, start in enumerate(range(0, n_train, bs), start=1):
                    batch = X_train[order[start : start + bs]]
                    dW, db, db_dec, sse = _parallel_sums(W, b, b_dec, batch, config.workers, pool)
                    if not np.isfinite(sse):
                        raise DivergenceError(epoch, k, sse)
                    scale = lr / batch.size
                    W -= scale * dW
                    b -= scale * db
                    b_dec -= scale * db_dec
                    if not (np.isfinite(W).all() and np.isfinite(b).all() and np.isfinite(b_dec).all()):
                        raise DivergenceError(epoch, k, float("nan"))
                seconds = time.perf_counter() - t0
                current = AutoencoderModel(W, b, b_dec)
                train_mse = mse_loss(X_train, reconstruct(current, X_train))
                if not np.isfinite(train_mse):
                    raise DivergenceError(epoch, k, train_mse)
                val_mse, val_r = _evaluate(current, X_val)
                history.append(epoch, train_mse, val_mse, val_r, seconds)
                if callback is not None:
                    callback(epoch, history)
    finally:
        if pool is not None:
            pool.shutdown()

    return AutoencoderModel(W, b, b_dec), history


@dataclass(frozen=True)
class BenchmarkRow:
    workers: int
    mean_epoch_seconds: float
    speedup: float


def benchmark_scaling(
    dataset: LabeledDataset, config: TrainConfig, worker_counts: Sequence[int]
) -> list[BenchmarkRow]:
    """Strong scaling: same data and config, varying worker count.

    Speedup is relative to the ``workers=1`` row, which is measured even when
    it is not requested (and then left out of the result).
    """
    counts = list(worker_counts)
    if not counts:
        raise ValueError("worker_counts must be nonempty")
    if any(w < 1 for w in counts):
        raise ValueError("worker counts must be >= 1")

    timings = {}
    for w in ([1] if 1 not in counts else []) + counts:
        if w in timings:
            continue
        cfg = TrainConfig(**{**asdict(config), "workers": w})
        # BLAS pinned to one thread for every row so the comparison isolates our fan-out
        with threadpool_limits(limits=1, user_api="blas"):
            _, hist = train(dataset, cfg)
        timings[w] = float(np.mean(hist.seconds))
        log.info("workers=%d mean epoch %.4fs", w, timings[w])

    base = timings[1]
    return [BenchmarkRow(w, timings[w], base / timings[w] if w != 1 else 1.0) for w in counts]


def write_benchmark_csv(rows: Sequence[BenchmarkRow], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(BENCHMARK_COLUMNS)
        for r in rows:
            w.writerow([r.workers, f"{r.mean_epoch_seconds:.6f}", f"{r.speedup:.4f}"])
