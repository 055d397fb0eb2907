"""Sparse feature vectors and the exact Gaussian kernel."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dataio import SparseVector


@dataclass(frozen=True, eq=False)
class SparseFeatures:
    """A computed feature vector as sorted (rank, value) arrays.

    ``flops`` is the number of budget units spent producing it: one per
    monomial feature, ``nnz(x)`` per Fourier feature.
    """

    ranks: np.ndarray
    values: np.ndarray
    flops: int

    def __len__(self) -> int:
        return int(self.ranks.size)

    @property
    def sqnorm(self) -> float:
        return float(np.dot(self.values, self.values))

    def dot(self, other: "SparseFeatures") -> float:
        return sparse_dot(self, other)

    def to_dense(self, size: int) -> np.ndarray:
        out = np.zeros(size)
        out[self.ranks] = self.values
        return out


def sparse_dot(a: SparseFeatures, b: SparseFeatures) -> float:
    if len(a) == len(b) and np.array_equal(a.ranks, b.ranks):
        return float(np.dot(a.values, b.values))
    _, ia, ib = np.intersect1d(a.ranks, b.ranks, assume_unique=True, return_indices=True)
    return float(np.dot(a.values[ia], b.values[ib]))


def exact_gaussian_kernel(sigma2: float, x: SparseVector, x2: SparseVector) -> float:
    """exp(-||x - x2||^2 / (2 sigma2)), summing over the union of nonzeros.

    Differencing coordinate-wise (rather than ||x||^2 + ||x2||^2 - 2<x, x2>)
    keeps the distance exactly zero for identical inputs.
    """
    if not sigma2 > 0:
        raise ValueError("sigma2 must be positive")
    return math.exp(-squared_distance(x, x2) / (2.0 * sigma2))


def squared_distance(x: SparseVector, x2: SparseVector) -> float:
    union = np.union1d(x.indices, x2.indices)
    diff = np.zeros(union.size)
    diff[np.searchsorted(union, x.indices)] += x.values
    diff[np.searchsorted(union, x2.indices)] -= x2.values
    return float(np.dot(diff, diff))
