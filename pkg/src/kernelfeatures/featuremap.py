"""Uniform construction and use of the Taylor, Fourier, and polynomial maps."""

from __future__ import annotations

import enum
from dataclasses import dataclass, fields, replace
from functools import lru_cache

from .dataio import SparseVector
from .features import SparseFeatures, exact_gaussian_kernel, sparse_dot
from .fourier import FourierMap, sample_frequencies
from .polynomial import PolynomialMap
from .taylor import TaylorMap

__all__ = [
    "MapKind",
    "FeatureMapSpec",
    "build_map",
    "map_features",
    "approx_kernel",
    "exact_gaussian_kernel",
]


class MapKind(str, enum.Enum):
    TAYLOR = "taylor"
    FOURIER = "fourier"
    POLYNOMIAL = "poly"

    @classmethod
    def parse(cls, value: "str | MapKind") -> "MapKind":
        if isinstance(value, MapKind):
            return value
        value = value.strip().lower()
        aliases = {"polynomial": "poly"}
        return cls(aliases.get(value, value))


@dataclass(frozen=True)
class FeatureMapSpec:
    """Configuration of one feature map.

    Only the fields relevant to ``kind`` are used: Taylor needs
    ``sigma2``/``degree``, Fourier ``sigma2``/``num_features``/``seed``,
    polynomial ``degree``/``constant``.
    """

    kind: MapKind
    input_dim: int
    sigma2: float = 1.0
    degree: int = 2
    num_features: int = 1
    constant: float = 1.0
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "kind", MapKind.parse(self.kind))

    def relevant(self) -> dict:
        keys = {
            MapKind.TAYLOR: ("kind", "input_dim", "sigma2", "degree"),
            MapKind.FOURIER: ("kind", "input_dim", "sigma2", "num_features", "seed"),
            MapKind.POLYNOMIAL: ("kind", "input_dim", "degree", "constant"),
        }[self.kind]
        return {k: getattr(self, k) for k in keys}

    def to_config(self) -> str:
        lines = []
        for f in fields(self):
            value = getattr(self, f.name)
            if isinstance(value, MapKind):
                value = value.value
            elif isinstance(value, float):
                value = repr(value)
            lines.append(f"{f.name}={value}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_config(cls, text: str) -> "FeatureMapSpec":
        casts = {"kind": MapKind.parse, "input_dim": int, "sigma2": float, "degree": int,
                 "num_features": int, "constant": float, "seed": int}
        values = {}
        for raw in text.splitlines():
            line = raw.strip().lstrip("#").strip()
            if not line or "=" not in line:
                continue
            key, _, value = line.partition("=")
            key = key.strip()
            if key in casts:
                values[key] = casts[key](value.strip())
        missing = {"kind", "input_dim"} - values.keys()
        if missing:
            raise ValueError(f"feature map config missing {sorted(missing)}")
        return cls(**values)

    def with_input_dim(self, d: int) -> "FeatureMapSpec":
        return replace(self, input_dim=d)


@lru_cache(maxsize=64)
def build_map(spec: FeatureMapSpec):
    """Concrete map object for ``spec``; cached, so Fourier samples are drawn once."""
    if spec.kind is MapKind.TAYLOR:
        return TaylorMap(spec.sigma2, spec.degree, spec.input_dim)
    if spec.kind is MapKind.FOURIER:
        return sample_frequencies(spec.input_dim, spec.num_features, spec.sigma2, spec.seed)
    return PolynomialMap(spec.degree, spec.constant, spec.input_dim)


def map_features(spec: FeatureMapSpec, x: SparseVector) -> SparseFeatures:
    return build_map(spec).map(x)


def approx_kernel(spec: FeatureMapSpec, x: SparseVector, x2: SparseVector) -> float:
    m = build_map(spec)
    return sparse_dot(m.map(x), m.map(x2))


def rank_space(spec: FeatureMapSpec) -> int:
    return build_map(spec).total_features


def is_projection(spec: FeatureMapSpec) -> bool:
    """Whether the map is a projection of the Gaussian feature space."""
    return spec.kind is MapKind.TAYLOR


__all__ += ["rank_space", "is_projection", "TaylorMap", "FourierMap", "PolynomialMap"]
