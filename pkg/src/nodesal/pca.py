"""Principal components by power iteration with deflation.

The covariance is never formed: each iteration applies ``Xc^T (Xc v) / (n-1)``
and projects out the components already found, so memory stays O(n d).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class ConvergenceError(RuntimeError):
    pass


@dataclass(frozen=True, eq=False)
class PcaModel:
    mean: np.ndarray
    components: np.ndarray   # (c, d), orthonormal rows
    eigenvalues: np.ndarray  # (c,), descending

    @property
    def n_components(self) -> int:
        return self.components.shape[0]

    @property
    def d(self) -> int:
        return self.mean.size


def _start_vector(d: int, j: int) -> np.ndarray:
    # all-ones with a deterministic per-component ripple
    v = np.ones(d) + 0.1 * np.cos((j + 1) * np.arange(1, d + 1))
    return v / np.linalg.norm(v)


def _orthogonalize(v, basis):
    for _ in range(2):
        for u in basis:
            v = v - (u @ v) * u
    return v


def _fix_sign(v):
    i = int(np.argmax(np.abs(v)))
    return -v if v[i] < 0 else v


def _axis_component(d: int, basis) -> np.ndarray:
    for i in range(d):
        e = np.zeros(d)
        e[i] = 1.0
        v = _orthogonalize(e, basis)
        norm = np.linalg.norm(v)
        if norm > 1e-8:
            return v / norm
    raise ConvergenceError("no direction left orthogonal to the found components")


def fit_pca(X, c: int = 2, tol: float = 1e-12, max_iter: int = 100_000) -> PcaModel:
    """Top-``c`` eigenpairs of the sample covariance (1/(n-1) convention).

    Iteration for a component stops when the eigen-residual
    ``||C v - lambda v||`` falls to ``tol`` times the total variance.
    Components with zero remaining variance come back as axis-aligned unit
    vectors with eigenvalue 0.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError("X must be 2-D")
    n, d = X.shape
    if n < 2:
        raise ValueError("PCA needs at least 2 samples")
    if not 1 <= c <= min(n - 1, d):
        raise ValueError(f"components must lie in [1, {min(n - 1, d)}], got {c}")

    mean = X.mean(axis=0)
    Xc = X - mean
    scale = 1.0 / (n - 1)
    total_var = float(np.sum(Xc * Xc)) * scale

    def cov(v):
        return Xc.T @ (Xc @ v) * scale

    comps, vals = [], []
    for j in range(c):
        if total_var == 0.0:
            comps.append(_axis_component(d, comps))
            vals.append(0.0)
            continue
        v = _orthogonalize(_start_vector(d, j), comps)
        norm = np.linalg.norm(v)
        v = v / norm if norm > 1e-8 else _axis_component(d, comps)
        lam = 0.0
        for it in range(max_iter):
            w = _orthogonalize(cov(v), comps)
            lam = float(v @ w)
            wn = np.linalg.norm(w)
            if wn <= 1e-14 * total_var:
                # deflated operator is numerically zero: v is already a null direction
                lam = max(lam, 0.0)
                break
            if np.linalg.norm(w - lam * v) <= tol * total_var:
                v = w / wn
                lam = float(v @ _orthogonalize(cov(v), comps))
                break
            v = w / wn
        else:
            raise ConvergenceError(f"component {j + 1} did not converge in {max_iter} iterations")
        comps.append(_fix_sign(v))
        vals.append(lam)

    order = np.argsort(-np.asarray(vals), kind="stable")
    return PcaModel(mean, np.array(comps)[order], np.asarray(vals)[order])


def project(model: PcaModel, X) -> np.ndarray:
    """Scores ``(X - mean) @ components.T``, shape (n, c)."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != model.d:
        raise ValueError(f"X must have shape (n, {model.d}), got {X.shape}")
    return (X - model.mean) @ model.components.T
