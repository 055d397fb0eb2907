"""Truncated-Taylor features of the Gaussian kernel.

Features are collected monomials over the nonzero coordinates of ``x``:
the monomial with multiplicities ``m_i`` (total degree ``k``) has value

    exp(-||x||^2 / (2 sigma^2)) * sigma^-k * prod(x_i^m_i) / sqrt(prod(m_i!))

so that the inner product of two maps is the Taylor series of
``exp(<x, x'>/sigma^2)`` truncated at degree ``r``, times the two norm
prefactors.  Each monomial is identified by a rank in graded-colex order
over all ``C(d + r, r)`` monomials of degree at most ``r``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import NamedTuple

import numpy as np

from .dataio import SparseVector
from .features import SparseFeatures

# 1/sqrt(64!) is about 1e-45, far from underflow
MAX_DEGREE = 64
# ranks are int64; leave headroom for the incremental binomial products
MAX_RANK_SPACE = 1 << 56


# ---------------------------------------------------------------------------
# monomial ranking


def _check_key(key, d: int) -> tuple[int, ...]:
    key = tuple(int(j) for j in key)
    if any(b < a for a, b in zip(key, key[1:])):
        raise ValueError(f"monomial key {key} is not non-decreasing")
    if key and (key[0] < 0 or key[-1] >= d):
        raise ValueError(f"monomial key {key} out of range for d={d}")
    return key


def num_monomials(d: int, r: int) -> int:
    """Number of monomials in ``d`` variables with degree at most ``r``."""
    return math.comb(d + r, r)


def degree_offset(d: int, k: int) -> int:
    """Rank of the first degree-``k`` monomial."""
    return math.comb(d + k - 1, k - 1) if k > 0 else 0


def monomial_rank(key, d: int) -> int:
    """Graded-colex rank of the multiset ``key`` (a non-decreasing tuple).

    Within one degree the key is mapped to the strictly increasing tuple
    ``j_t + t`` (0-based ``t``) whose colex rank is ``sum C(j_t + t, t + 1)``.
    """
    key = _check_key(key, d)
    k = len(key)
    return degree_offset(d, k) + sum(math.comb(j + t, t + 1) for t, j in enumerate(key))


def monomial_unrank(rank: int, d: int, r: int) -> tuple[int, ...]:
    if not 0 <= rank < num_monomials(d, r):
        raise ValueError(f"rank {rank} out of range for d={d}, r={r}")
    k = 0
    while rank >= degree_offset(d, k + 1):
        k += 1
    rem = rank - degree_offset(d, k)
    key = [0] * k
    for t in range(k, 0, -1):
        # largest i with C(i, t) <= rem
        i = t - 1
        while math.comb(i + 1, t) <= rem:
            i += 1
        rem -= math.comb(i, t)
        key[t - 1] = i - (t - 1)
    return tuple(key)


def iter_monomials(d: int, r: int):
    """All monomial keys of degree <= r, in rank order."""
    for k in range(r + 1):
        yield from _colex_multisets(d, k)


def _colex_multisets(d: int, k: int):
    if k == 0:
        yield ()
        return
    for last in range(d):
        for head in _colex_multisets(last + 1, k - 1):
            yield head + (last,)


# ---------------------------------------------------------------------------
# collected-monomial templates


class _Level(NamedTuple):
    positions: np.ndarray  # (n_k, k) non-decreasing positions into x's nonzeros
    parent: np.ndarray  # row in the previous level (the key minus its last element)
    last: np.ndarray  # position appended to the parent
    inv_sqrt_mult: np.ndarray  # 1/sqrt(multiplicity of `last` in the new key)


@lru_cache(maxsize=256)
def _template(n: int, r: int) -> tuple[_Level, ...]:
    """Monomials over ``n`` positions, one level per degree, colex-sorted.

    Every degree-k key is its parent (a degree k-1 key) plus one position
    no smaller than the parent's last one, so evaluating a level costs one
    multiply per feature.
    """
    levels = [
        _Level(
            np.zeros((1, 0), dtype=np.int64),
            np.zeros(0, dtype=np.int64),
            np.zeros(0, dtype=np.int64),
            np.zeros(0),
        )
    ]
    mult = np.zeros(1, dtype=np.int64)
    for k in range(1, r + 1):
        prev = levels[-1].positions
        start = prev[:, -1] if k > 1 else np.zeros(1, dtype=np.int64)
        counts = n - start
        parent = np.repeat(np.arange(prev.shape[0]), counts)
        offsets = np.arange(parent.size) - np.repeat(np.cumsum(counts) - counts, counts)
        last = np.repeat(start, counts) + offsets
        positions = np.concatenate([prev[parent], last[:, None]], axis=1)
        if k > 1:
            new_mult = np.where(last == prev[parent, -1], mult[parent] + 1, 1)
        else:
            new_mult = np.ones(parent.size, dtype=np.int64)
        order = np.lexsort(positions.T) if k > 1 else np.arange(parent.size)
        positions, parent, last, new_mult = positions[order], parent[order], last[order], new_mult[order]
        for arr in (positions, parent, last):
            arr.flags.writeable = False
        inv = 1.0 / np.sqrt(new_mult)
        inv.flags.writeable = False
        levels.append(_Level(positions, parent, last, inv))
        mult = new_mult
    return tuple(levels)


def _binom_column(n: np.ndarray, t: int) -> np.ndarray:
    """Exact C(n, t) elementwise for int64 ``n`` (results below MAX_RANK_SPACE)."""
    out = np.ones_like(n)
    for s in range(t):
        out = out * (n - s) // (s + 1)
    return out


def collected_monomials(x: SparseVector, r: int, step: float = 1.0, d: int | None = None):
    """Yield ``(k, ranks, values)`` per degree for the monomials of ``x``.

    ``values`` carry ``step^k * prod(x_i^m_i) / sqrt(prod(m_i!))``; callers
    apply their own per-degree and per-example factors.
    """
    d = x.dim if d is None else d
    idx, xv = x.indices, x.values
    levels = _template(x.nnz, r)
    vals = np.ones(1)
    for k, level in enumerate(levels):
        if k == 0:
            ranks = np.zeros(1, dtype=np.int64)
        else:
            vals = vals[level.parent] * xv[level.last] * (step * level.inv_sqrt_mult)
            coords = idx[level.positions]
            ranks = np.full(level.parent.size, degree_offset(d, k), dtype=np.int64)
            for t in range(k):
                ranks += _binom_column(coords[:, t] + t, t + 1)
        yield k, ranks, vals


# ---------------------------------------------------------------------------
# the map


@dataclass(frozen=True)
class TaylorMap:
    sigma2: float
    degree: int
    input_dim: int

    def __post_init__(self):
        if not self.sigma2 > 0:
            raise ValueError("sigma2 must be positive")
        if not 0 <= self.degree <= MAX_DEGREE:
            raise ValueError(f"degree must be in [0, {MAX_DEGREE}]")
        if self.input_dim < 0:
            raise ValueError("input_dim must be non-negative")
        if self.total_features >= MAX_RANK_SPACE:
            raise ValueError(f"C(d+r, r) = {self.total_features} exceeds the supported rank space")

    @property
    def total_features(self) -> int:
        return num_monomials(self.input_dim, self.degree)

    def map(self, x: SparseVector) -> SparseFeatures:
        return taylor_map(self, x)


def taylor_map(tm: TaylorMap, x: SparseVector) -> SparseFeatures:
    if x.dim > tm.input_dim:
        raise ValueError(f"input has dim {x.dim} > map input_dim {tm.input_dim}")
    step = 1.0 / math.sqrt(tm.sigma2)
    ranks, values = [], []
    for _, rk, vals in collected_monomials(x, tm.degree, step, tm.input_dim):
        ranks.append(rk)
        values.append(vals)
    prefactor = math.exp(-x.sqnorm / (2.0 * tm.sigma2))
    ranks = np.concatenate(ranks)
    return SparseFeatures(ranks, np.concatenate(values) * prefactor, flops=int(ranks.size))


def truncated_kernel(tm: TaylorMap, x: SparseVector, x2: SparseVector) -> float:
    """Closed-form truncated series, without building features."""
    z = x.dot(x2) / tm.sigma2
    term, total = 1.0, 1.0
    for k in range(1, tm.degree + 1):
        term *= z / k
        total += term
    return math.exp(-(x.sqnorm + x2.sqnorm) / (2.0 * tm.sigma2)) * total


def taylor_error_bound(tm: TaylorMap, normx: float, normx2: float) -> float:
    """(normx * normx2 / sigma^2)^(r+1) / (r+1)!"""
    if normx < 0 or normx2 < 0:
        raise ValueError("norms must be non-negative")
    r1 = tm.degree + 1
    return (normx * normx2 / tm.sigma2) ** r1 / math.factorial(r1)
