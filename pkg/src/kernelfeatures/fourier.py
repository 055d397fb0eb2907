"""Random Fourier features for the Gaussian kernel.

Sampling stream (bit-exact for a given seed on any platform): a PCG64
generator seeded with ``seed`` produces ``D`` uniforms for the phases
(``theta = 2*pi*u``), then uniforms in pairs ``(u1, u2)`` for Box-Muller
normals ``sqrt(-2 log(1 - u1)) * (cos, sin)(2*pi*u2)``, which fill the
``D x d`` frequency matrix row-major and are scaled by ``1/sigma``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .dataio import SparseVector
from .features import SparseFeatures

TWO_PI = 2.0 * math.pi


def _uniforms(rng: np.random.Generator, n: int) -> np.ndarray:
    return rng.random(n, dtype=np.float64)


def box_muller(u1: np.ndarray, u2: np.ndarray) -> np.ndarray:
    """Standard normals, two per uniform pair, interleaved (cos, sin)."""
    radius = np.sqrt(-2.0 * np.log1p(-u1))
    angle = TWO_PI * u2
    return np.column_stack([radius * np.cos(angle), radius * np.sin(angle)]).ravel()


@dataclass(frozen=True, eq=False)
class FourierMap:
    omegas: np.ndarray  # (D, d)
    thetas: np.ndarray  # (D,)
    sigma2: float
    seed: int
    scale: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "scale", math.sqrt(2.0 / self.num_features))

    @property
    def num_features(self) -> int:
        return int(self.thetas.size)

    @property
    def input_dim(self) -> int:
        return int(self.omegas.shape[1])

    @property
    def total_features(self) -> int:
        return self.num_features

    def map(self, x: SparseVector) -> SparseFeatures:
        return fourier_map(self, x)


def sample_frequencies(d: int, D: int, sigma2: float, seed: int) -> FourierMap:
    if D < 1:
        raise ValueError("need at least one Fourier feature")
    if not sigma2 > 0:
        raise ValueError("sigma2 must be positive")
    if d < 0:
        raise ValueError("d must be non-negative")
    rng = np.random.Generator(np.random.PCG64(seed))
    thetas = TWO_PI * _uniforms(rng, D)
    # 2*pi*u can round up to exactly 2*pi
    thetas = np.minimum(thetas, np.nextafter(TWO_PI, 0.0))
    n = D * d
    pairs = (n + 1) // 2
    u = _uniforms(rng, 2 * pairs)
    normals = box_muller(u[0::2], u[1::2])[:n]
    omegas = normals.reshape(D, d) / math.sqrt(sigma2)
    omegas.flags.writeable = False
    thetas.flags.writeable = False
    return FourierMap(omegas, thetas, float(sigma2), int(seed))


def fourier_map(fm: FourierMap, x: SparseVector) -> SparseFeatures:
    """Entry j is sqrt(2/D) * cos(omega_j . x + theta_j).

    The projection only reads the columns of x's nonzeros.
    """
    if x.dim > fm.input_dim:
        raise ValueError(f"input has dim {x.dim} > map input_dim {fm.input_dim}")
    proj = fm.omegas[:, x.indices] @ x.values
    values = fm.scale * np.cos(proj + fm.thetas)
    return SparseFeatures(np.arange(fm.num_features, dtype=np.int64), values, flops=fm.num_features * x.nnz)
