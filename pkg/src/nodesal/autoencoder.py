"""Single-hidden-layer sigmoid autoencoder with tied weights.

Encoder ``A = sigmoid(W X^T + b)`` gives an m x n activation matrix whose row s
holds node s's activations. Decoder ``X' = sigmoid(W^T A + b_dec)^T`` reuses the
encoder matrix transposed. Training minimizes the mean squared error averaged
over every entry of the batch.
"""
from __future__ import annotations

import struct
import zlib
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple

import numpy as np

MAGIC = b"ANSM"
FORMAT_VERSION = 1
_HEADER = struct.Struct("<4sIQQ")


class ModelFormatError(ValueError):
    """Base class for unreadable model files."""


class ModelVersionError(ModelFormatError):
    pass


class ModelTruncatedError(ModelFormatError):
    pass


class ModelDimensionError(ModelFormatError):
    pass


class ModelChecksumError(ModelFormatError):
    pass


@dataclass(frozen=True, eq=False)
class AutoencoderModel:
    W: np.ndarray
    b: np.ndarray
    b_dec: np.ndarray

    def __post_init__(self):
        W = np.array(self.W, dtype=np.float64)
        b = np.array(self.b, dtype=np.float64)
        b_dec = np.array(self.b_dec, dtype=np.float64)
        if W.ndim != 2:
            raise ValueError(f"W must be 2-D, got shape {W.shape}")
        m, d = W.shape
        if b.shape != (m,) or b_dec.shape != (d,):
            raise ValueError(
                f"inconsistent shapes: W {W.shape}, b {b.shape}, b_dec {b_dec.shape}"
            )
        if not (np.isfinite(W).all() and np.isfinite(b).all() and np.isfinite(b_dec).all()):
            raise ValueError("model parameters must be finite")
        for name, arr in (("W", W), ("b", b), ("b_dec", b_dec)):
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    @property
    def m(self) -> int:
        return self.W.shape[0]

    @property
    def d(self) -> int:
        return self.W.shape[1]

    def node(self, s: int) -> "AutoencoderModel":
        """Single-node encoder for 0-based row ``s`` (decoder bias kept)."""
        return AutoencoderModel(self.W[s : s + 1], self.b[s : s + 1], self.b_dec)


def sigmoid(z):
    """Logistic function, evaluated without overflow for large |z|."""
    z = np.asarray(z, dtype=np.float64)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out[()] if out.ndim == 0 else out


def _check_cols(X: np.ndarray, d: int, what: str) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != d:
        raise ValueError(f"{what} must have shape (n, {d}), got {X.shape}")
    return X


def encode(model: AutoencoderModel, X) -> np.ndarray:
    """Hidden activations, shape (m, n)."""
    X = _check_cols(X, model.d, "X")
    return sigmoid(model.W @ X.T + model.b[:, None])


def decode(model: AutoencoderModel, A) -> np.ndarray:
    """Reconstruction from an (m, n) activation matrix, shape (n, d)."""
    A = np.asarray(A, dtype=np.float64)
    if A.ndim != 2 or A.shape[0] != model.m:
        raise ValueError(f"A must have shape ({model.m}, n), got {A.shape}")
    return sigmoid(model.W.T @ A + model.b_dec[:, None]).T


def reconstruct(model: AutoencoderModel, X) -> np.ndarray:
    return decode(model, encode(model, X))


def mse_loss(X, X_rec) -> float:
    X = np.asarray(X, dtype=np.float64)
    X_rec = np.asarray(X_rec, dtype=np.float64)
    if X.shape != X_rec.shape:
        raise ValueError(f"shape mismatch: {X.shape} vs {X_rec.shape}")
    return float(np.mean((X - X_rec) ** 2))


def pearson(X, X_rec) -> float:
    """Pearson correlation between two equally shaped arrays, both flattened."""
    x = np.asarray(X, dtype=np.float64).ravel()
    y = np.asarray(X_rec, dtype=np.float64).ravel()
    if np.shape(X) != np.shape(X_rec):
        raise ValueError(f"shape mismatch: {np.shape(X)} vs {np.shape(X_rec)}")
    if x.size < 2:
        raise ValueError("pearson needs at least two entries")
    xc = x - x.mean()
    yc = y - y.mean()
    sxx = float(xc @ xc)
    syy = float(yc @ yc)
    if sxx == 0.0 or syy == 0.0:
        raise ValueError("pearson undefined for zero-variance input")
    r = float(xc @ yc) / np.sqrt(sxx * syy)
    return float(np.clip(r, -1.0, 1.0))


class Gradients(NamedTuple):
    W: np.ndarray
    b: np.ndarray
    b_dec: np.ndarray
    loss: float


def gradient_sums(W, b, b_dec, X):
    """Gradient of the *summed* squared error over ``X`` (not averaged).

    Returns ``(dW, db, db_dec, sse)``. Shards of a batch can be summed and
    scaled once, which is what the data-parallel path relies on.
    """
    H = sigmoid(X @ W.T + b)          # (n, m)
    Y = sigmoid(H @ W + b_dec)        # (n, d)
    R = Y - X
    sse = float(np.sum(R * R))
    dZ2 = 2.0 * R * Y * (1.0 - Y)
    dZ1 = (dZ2 @ W.T) * H * (1.0 - H)
    # tied weights: decoder and encoder contributions land on the same matrix
    dW = H.T @ dZ2 + dZ1.T @ X
    return dW, dZ1.sum(axis=0), dZ2.sum(axis=0), sse


def scale_sums(sums, n_entries: int) -> Gradients:
    dW, db, db_dec, sse = sums
    scale = 1.0 / n_entries
    return Gradients(dW * scale, db * scale, db_dec * scale, sse * scale)


def gradients(model: AutoencoderModel, X) -> Gradients:
    """Analytic gradient of ``mse_loss(X, reconstruct(model, X))``."""
    X = _check_cols(X, model.d, "batch")
    if X.shape[0] == 0:
        raise ValueError("empty batch")
    return scale_sums(gradient_sums(model.W, model.b, model.b_dec, X), X.size)


def save_model(model: AutoencoderModel, path) -> None:
    payload = b"".join(
        np.ascontiguousarray(a, dtype="<f8").tobytes() for a in (model.W, model.b, model.b_dec)
    )
    header = _HEADER.pack(MAGIC, FORMAT_VERSION, model.m, model.d)
    crc = struct.pack("<I", zlib.crc32(payload))
    Path(path).write_bytes(header + payload + crc)


def load_model(path) -> AutoencoderModel:
    blob = Path(path).read_bytes()
    if len(blob) < 4 or blob[:4] != MAGIC:
        raise ModelVersionError(f"{path}: not a model file (bad magic)")
    if len(blob) < _HEADER.size:
        raise ModelTruncatedError(f"{path}: truncated header")
    _, version, m, d = _HEADER.unpack_from(blob)
    if version != FORMAT_VERSION:
        raise ModelVersionError(f"{path}: unsupported format version {version}")
    if m < 1 or d < 1:
        raise ModelDimensionError(f"{path}: invalid dimensions m={m}, d={d}")
    n_values = m * d + m + d
    expected = _HEADER.size + 8 * n_values + 4
    if len(blob) < expected:
        raise ModelTruncatedError(
            f"{path}: {len(blob)} bytes, header (m={m}, d={d}) requires {expected}"
        )
    if len(blob) > expected:
        raise ModelDimensionError(
            f"{path}: {len(blob) - expected} trailing bytes beyond header dimensions m={m}, d={d}"
        )
    payload = blob[_HEADER.size : expected - 4]
    (crc,) = struct.unpack_from("<I", blob, expected - 4)
    if zlib.crc32(payload) != crc:
        raise ModelChecksumError(f"{path}: payload checksum mismatch")
    flat = np.frombuffer(payload, dtype="<f8").astype(np.float64)
    W = flat[: m * d].reshape(m, d)
    b = flat[m * d : m * d + m]
    b_dec = flat[m * d + m :]
    return AutoencoderModel(W, b, b_dec)
