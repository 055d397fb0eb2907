"""Shared generators for tests."""

from __future__ import annotations

import numpy as np

from kernelfeatures.dataio import LabeledDataset, SparseVector


def random_sparse(rng: np.random.Generator, d: int, nnz: int, low=-1.0, high=1.0) -> SparseVector:
    nnz = min(nnz, d)
    idx = np.sort(rng.choice(d, size=nnz, replace=False))
    vals = rng.uniform(low, high, size=nnz)
    vals[vals == 0.0] = 0.5
    return SparseVector(idx, vals, d)


def random_dataset(rng: np.random.Generator, m: int, d: int, nnz: int, low=-1.0, high=1.0) -> LabeledDataset:
    xs = [random_sparse(rng, d, nnz, low, high) for _ in range(m)]
    ys = rng.choice([-1, 1], size=m)
    return LabeledDataset(xs, ys, d)


def gaussian_dataset(rng: np.random.Generator, m: int, d: int, max_norm: float) -> LabeledDataset:
    """Dense Gaussian inputs rescaled so the largest norm equals ``max_norm``."""
    X = rng.normal(size=(m, d))
    X *= max_norm / np.linalg.norm(X, axis=1).max()
    y = np.where(X[:, 0] + 0.5 * X[:, 1] + 0.3 * rng.normal(size=m) >= 0, 1, -1)
    return LabeledDataset([SparseVector.from_dense(row) for row in X], y, d)
