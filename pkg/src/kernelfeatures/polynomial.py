"""Explicit features of the inhomogeneous polynomial kernel (<x, x'> + c)^r."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dataio import SparseVector
from .features import SparseFeatures
from .taylor import MAX_DEGREE, MAX_RANK_SPACE, collected_monomials, num_monomials


@dataclass(frozen=True)
class PolynomialMap:
    degree: int
    constant: float
    input_dim: int

    def __post_init__(self):
        if self.constant < 0:
            raise ValueError("constant c must be non-negative")
        if not 0 <= self.degree <= MAX_DEGREE:
            raise ValueError(f"degree must be in [0, {MAX_DEGREE}]")
        if self.total_features >= MAX_RANK_SPACE:
            raise ValueError(f"C(d+r, r) = {self.total_features} exceeds the supported rank space")

    @property
    def total_features(self) -> int:
        return num_monomials(self.input_dim, self.degree)

    def degree_factor(self, k: int) -> float:
        """sqrt(C(r, k) c^(r-k) k!), the factor shared by all degree-k features."""
        r, c = self.degree, self.constant
        if c == 0.0 and k < r:
            return 0.0
        return math.sqrt(math.comb(r, k) * c ** (r - k) * math.factorial(k))

    def map(self, x: SparseVector) -> SparseFeatures:
        return polynomial_map(self, x)

    def kernel(self, x: SparseVector, x2: SparseVector) -> float:
        return (x.dot(x2) + self.constant) ** self.degree


def polynomial_map(pm: PolynomialMap, x: SparseVector) -> SparseFeatures:
    """Collected monomials scaled so the inner product is (<x, x'> + c)^r.

    With ``c = 0`` only degree-r features are emitted, but the cost still
    counts every lower-degree monomial since each degree is built from the
    one below it.
    """
    if x.dim > pm.input_dim:
        raise ValueError(f"input has dim {x.dim} > map input_dim {pm.input_dim}")
    ranks, values = [], []
    flops = 0
    for k, rk, vals in collected_monomials(x, pm.degree, 1.0, pm.input_dim):
        flops += rk.size
        factor = pm.degree_factor(k)
        if factor == 0.0:
            continue
        ranks.append(rk)
        values.append(vals * factor)
    if not ranks:
        return SparseFeatures(np.zeros(0, dtype=np.int64), np.zeros(0), flops)
    return SparseFeatures(np.concatenate(ranks), np.concatenate(values), flops)
