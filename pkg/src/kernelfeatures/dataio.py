"""Sparse labeled datasets in LIBSVM text format."""

from __future__ import annotations

import gzip
import io
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np


class ParseError(ValueError):
    """Malformed LIBSVM input; ``lineno`` is 1-based."""

    def __init__(self, lineno: int, message: str):
        super().__init__(f"line {lineno}: {message}")
        self.lineno = lineno


@dataclass(frozen=True, eq=False)
class SparseVector:
    """One input example.

    ``indices`` are 0-based and strictly increasing; on disk they are
    1-based.  ``dim`` is the declared dimensionality.
    """

    indices: np.ndarray
    values: np.ndarray
    dim: int
    sqnorm: float = field(init=False)

    def __post_init__(self):
        idx = np.ascontiguousarray(self.indices, dtype=np.int64)
        val = np.ascontiguousarray(self.values, dtype=np.float64)
        if idx.shape != val.shape or idx.ndim != 1:
            raise ValueError("indices and values must be 1-d arrays of equal length")
        if idx.size:
            if np.any(np.diff(idx) <= 0):
                raise ValueError("indices must be strictly increasing")
            if idx[0] < 0 or idx[-1] >= self.dim:
                raise ValueError(f"index out of range for dim={self.dim}")
        if not np.all(np.isfinite(val)):
            raise ValueError("values must be finite")
        idx.flags.writeable = False
        val.flags.writeable = False
        object.__setattr__(self, "indices", idx)
        object.__setattr__(self, "values", val)
        # left-to-right summation, so the value is reproducible
        s = 0.0
        for v in val.tolist():
            s += v * v
        object.__setattr__(self, "sqnorm", s)

    @classmethod
    def from_dense(cls, x: Sequence[float]) -> "SparseVector":
        x = np.asarray(x, dtype=np.float64)
        (nz,) = np.nonzero(x)
        return cls(nz, x[nz], x.size)

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[int, float]], dim: int) -> "SparseVector":
        """Build from 0-based (index, value) pairs in increasing index order."""
        pairs = list(pairs)
        idx = [i for i, _ in pairs]
        val = [v for _, v in pairs]
        return cls(np.array(idx, dtype=np.int64), np.array(val, dtype=np.float64), dim)

    @property
    def nnz(self) -> int:
        return int(self.indices.size)

    @property
    def norm(self) -> float:
        return math.sqrt(self.sqnorm)

    def dot(self, other: "SparseVector") -> float:
        _, ia, ib = np.intersect1d(self.indices, other.indices, assume_unique=True, return_indices=True)
        return float(np.dot(self.values[ia], other.values[ib]))

    def scaled(self, factor: float) -> "SparseVector":
        return SparseVector(self.indices, self.values * factor, self.dim)

    def with_dim(self, dim: int) -> "SparseVector":
        return SparseVector(self.indices, self.values, dim)

    def to_dense(self) -> np.ndarray:
        out = np.zeros(self.dim)
        out[self.indices] = self.values
        return out

    def __eq__(self, other):
        if not isinstance(other, SparseVector):
            return NotImplemented
        return (
            self.dim == other.dim
            and np.array_equal(self.indices, other.indices)
            and np.array_equal(self.values, other.values)
        )

    def __hash__(self):
        return hash((self.dim, self.indices.tobytes(), self.values.tobytes()))


@dataclass(frozen=True)
class LabeledDataset:
    examples: tuple[SparseVector, ...]
    labels: np.ndarray
    dim: int

    def __post_init__(self):
        labels = np.asarray(self.labels, dtype=np.int8)
        if len(self.examples) != labels.size:
            raise ValueError("number of examples and labels differ")
        if not np.all(np.abs(labels) == 1):
            raise ValueError("labels must be +1 or -1")
        labels.flags.writeable = False
        object.__setattr__(self, "examples", tuple(self.examples))
        object.__setattr__(self, "labels", labels)

    def __len__(self) -> int:
        return len(self.examples)

    @property
    def radius(self) -> float:
        return max((x.norm for x in self.examples), default=0.0)

    def subset(self, rows: Sequence[int]) -> "LabeledDataset":
        return LabeledDataset(tuple(self.examples[i] for i in rows), self.labels[list(rows)], self.dim)

    def scaled(self, factor: float) -> "LabeledDataset":
        return LabeledDataset(tuple(x.scaled(factor) for x in self.examples), self.labels, self.dim)

    def with_dim(self, dim: int) -> "LabeledDataset":
        if dim < self.dim:
            raise ValueError(f"cannot shrink dataset from dim {self.dim} to {dim}")
        return LabeledDataset(tuple(x.with_dim(dim) for x in self.examples), self.labels, dim)

    def __eq__(self, other):
        if not isinstance(other, LabeledDataset):
            return NotImplemented
        return (
            self.dim == other.dim
            and np.array_equal(self.labels, other.labels)
            and self.examples == other.examples
        )


@dataclass(frozen=True)
class DatasetStats:
    m: int
    d: int
    mean_nnz: float
    radius: float


_LABELS = {1.0: 1, -1.0: -1, 0.0: -1}


def _parse_label(tok: str, lineno: int) -> int:
    try:
        value = float(tok)
    except ValueError:
        raise ParseError(lineno, f"bad label {tok!r}") from None
    if value not in _LABELS:
        raise ParseError(lineno, f"label {tok!r} not in {{+1, -1, 1, 0}}")
    return _LABELS[value]


def parse_libsvm(source, dim: int | None = None) -> LabeledDataset:
    """Parse LIBSVM text from bytes, str, or a binary/text stream.

    Labels ``+1``/``1`` map to +1, ``-1``/``0`` to -1.  Without ``dim`` the
    dimensionality is the largest index seen.
    """
    if isinstance(source, bytes):
        source = source.decode("utf-8")
    if isinstance(source, str):
        lines = io.StringIO(source)
    else:
        lines = source

    rows: list[tuple[list[int], list[float]]] = []
    labels: list[int] = []
    max_index = 0
    for lineno, raw in enumerate(lines, start=1):
        line = raw.decode("utf-8") if isinstance(raw, bytes) else raw
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        labels.append(_parse_label(tokens[0], lineno))
        idx: list[int] = []
        val: list[float] = []
        prev = 0
        for tok in tokens[1:]:
            key, sep, value = tok.partition(":")
            if not sep:
                raise ParseError(lineno, f"expected idx:value, got {tok!r}")
            try:
                i = int(key)
                v = float(value)
            except ValueError:
                raise ParseError(lineno, f"bad entry {tok!r}") from None
            if i <= 0:
                raise ParseError(lineno, f"index {i} is not positive")
            if i <= prev:
                raise ParseError(lineno, f"indices not increasing at {tok!r}")
            if not math.isfinite(v):
                raise ParseError(lineno, f"non-finite value in {tok!r}")
            prev = i
            idx.append(i - 1)
            val.append(v)
        max_index = max(max_index, prev)
        rows.append((idx, val))

    if dim is None:
        dim = max_index
    elif max_index > dim:
        raise ValueError(f"index {max_index} exceeds dim override {dim}")
    examples = tuple(
        SparseVector(np.array(i, dtype=np.int64), np.array(v, dtype=np.float64), dim) for i, v in rows
    )
    return LabeledDataset(examples, np.array(labels, dtype=np.int8), dim)


def load_libsvm(path: str | Path, dim: int | None = None) -> LabeledDataset:
    path = Path(path)
    opener = gzip.open if path.suffix == ".gz" else open
    with opener(path, "rt", encoding="utf-8") as fh:
        return parse_libsvm(fh, dim=dim)


def format_libsvm(ds: LabeledDataset) -> str:
    out = []
    for x, y in zip(ds.examples, ds.labels):
        parts = ["+1" if y > 0 else "-1"]
        parts += [f"{i + 1}:{v!r}" for i, v in zip(x.indices.tolist(), x.values.tolist())]
        out.append(" ".join(parts))
    return "\n".join(out) + ("\n" if out else "")


def save_libsvm(ds: LabeledDataset, path: str | Path) -> None:
    Path(path).write_text(format_libsvm(ds), encoding="utf-8")


def dataset_stats(ds: LabeledDataset) -> DatasetStats:
    if len(ds) == 0:
        raise ValueError("dataset is empty")
    nnz = sum(x.nnz for x in ds.examples)
    return DatasetStats(m=len(ds), d=ds.dim, mean_nnz=nnz / len(ds), radius=ds.radius)


def unit_norm_scale(ds: LabeledDataset) -> float:
    """Factor that rescales ``ds`` to unit average squared norm."""
    mean_sq = sum(x.sqnorm for x in ds.examples) / len(ds)
    if mean_sq == 0.0:
        return 1.0
    return 1.0 / math.sqrt(mean_sq)
