"""Pegasos training of linear SVMs over on-the-fly feature maps."""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .dataio import LabeledDataset
from .featuremap import FeatureMapSpec, build_map
from .features import SparseFeatures

DENSE_LIMIT = 1 << 26
# fold the scale into the stored vector once it gets this small
_RESCALE_BELOW = 1e-9


def num_threads() -> int:
    """Evaluation thread count from ``KERNELFEATURES_THREADS`` (default 1)."""
    try:
        return max(1, int(os.environ.get("KERNELFEATURES_THREADS", "1")))
    except ValueError:
        return 1


@dataclass
class LinearModel:
    """Weight vector ``scale * weights`` over a feature-rank space.

    ``weights`` is a dense array when the rank space has at most
    ``DENSE_LIMIT`` entries and a ``{rank: value}`` dict otherwise.
    """

    weights: np.ndarray | dict
    lam: float
    scale: float = 1.0
    size: int = 0

    @classmethod
    def zeros(cls, size: int, lam: float) -> "LinearModel":
        weights = np.zeros(size) if size <= DENSE_LIMIT else {}
        return cls(weights, lam, 1.0, size)

    @property
    def dense(self) -> bool:
        return isinstance(self.weights, np.ndarray)

    def gather(self, ranks: np.ndarray) -> np.ndarray:
        if self.dense:
            return self.weights[ranks]
        get = self.weights.get
        return np.array([get(r, 0.0) for r in ranks.tolist()])

    def _add(self, ranks: np.ndarray, current: np.ndarray, delta: np.ndarray) -> None:
        if self.dense:
            self.weights[ranks] = current + delta
        else:
            for r, v in zip(ranks.tolist(), (current + delta).tolist()):
                self.weights[r] = v

    def _clear(self) -> None:
        if self.dense:
            self.weights.fill(0.0)
        else:
            self.weights.clear()

    def _raw_sqnorm(self) -> float:
        vals = self.weights if self.dense else np.fromiter(self.weights.values(), float)
        return float(np.dot(vals, vals))

    def _fold_scale(self) -> None:
        if self.scale == 1.0:
            return
        if self.dense:
            self.weights *= self.scale
        else:
            for r in self.weights:
                self.weights[r] *= self.scale
        self.scale = 1.0

    def score(self, f: SparseFeatures) -> float:
        return self.scale * float(np.dot(self.gather(f.ranks), f.values))

    def sqnorm(self) -> float:
        return self.scale * self.scale * self._raw_sqnorm()

    def finalize(self) -> "LinearModel":
        self._fold_scale()
        return self

    def effective_weights(self) -> np.ndarray:
        """Dense copy of ``scale * weights`` (dense storage only)."""
        if not self.dense:
            raise ValueError("model uses sparse storage")
        return self.scale * self.weights

    def nonzero_items(self):
        if self.dense:
            (nz,) = np.nonzero(self.weights)
            return zip(nz.tolist(), (self.scale * self.weights[nz]).tolist())
        return ((r, self.scale * v) for r, v in sorted(self.weights.items()) if v != 0.0)


@dataclass(frozen=True)
class TrainConfig:
    lam: float
    epochs: int = 100
    seed: int = 0
    project: bool = True

    def __post_init__(self):
        if not self.lam > 0:
            raise ValueError("lambda must be positive")
        if self.epochs < 1:
            raise ValueError("epochs must be at least 1")

    @classmethod
    def from_C(cls, C: float, m: int, **kw) -> "TrainConfig":
        """lambda = 1 / (C m)."""
        if not C > 0:
            raise ValueError("C must be positive")
        return cls(lam=1.0 / (C * m), **kw)


@dataclass
class TrainTrace:
    """Optional per-step record filled in by :func:`train_pegasos`."""

    touched: list[int] = field(default_factory=list)
    updates: int = 0


def train_pegasos(
    ds: LabeledDataset,
    spec: FeatureMapSpec,
    cfg: TrainConfig,
    trace: TrainTrace | None = None,
) -> tuple[LinearModel, int]:
    """Stochastic subgradient descent on the SVM primal.

    Step ``t`` (1-based, over ``epochs * m`` steps on a seeded per-epoch
    shuffle) uses ``eta = 1/(lam t)``: the weights decay by ``1 - 1/t`` and,
    when the margin ``y <w, phi(x)>`` computed before the decay is strictly
    below 1, ``eta y phi(x)`` is added.  The decay only touches the scalar
    scale, so a step costs ``O(nnz(phi(x)))``.  With ``cfg.project`` the
    weights are then clipped to the ball of radius ``1/sqrt(lam)``.

    Returns the finalized model and the total feature-map flops.
    """
    if len(ds) == 0:
        raise ValueError("dataset is empty")
    fmap = build_map(spec)
    model = LinearModel.zeros(fmap.total_features, cfg.lam)
    lam = cfg.lam
    radius = 1.0 / math.sqrt(lam)
    rng = np.random.Generator(np.random.PCG64(cfg.seed))
    labels = ds.labels.astype(np.float64)
    vnorm2 = 0.0
    flops = 0
    t = 0
    for _ in range(cfg.epochs):
        for i in rng.permutation(len(ds)).tolist():
            t += 1
            f = fmap.map(ds.examples[i])
            flops += f.flops
            y = labels[i]
            current = model.gather(f.ranks)
            margin = y * model.scale * float(np.dot(current, f.values))

            model.scale *= 1.0 - 1.0 / t
            if model.scale == 0.0:
                model._clear()
                model.scale = 1.0
                vnorm2 = 0.0
                current = np.zeros_like(current)

            if margin < 1.0:
                delta = (y / (lam * t * model.scale)) * f.values
                vnorm2 += 2.0 * float(np.dot(current, delta)) + float(np.dot(delta, delta))
                model._add(f.ranks, current, delta)
                if trace is not None:
                    trace.updates += 1
            if trace is not None:
                trace.touched.append(len(f))

            if cfg.project:
                wnorm = model.scale * math.sqrt(max(vnorm2, 0.0))
                if wnorm > radius:
                    model.scale *= radius / wnorm
            if model.scale < _RESCALE_BELOW:
                model._fold_scale()
                vnorm2 = model._raw_sqnorm()
    return model.finalize(), flops


def _scores(ds: LabeledDataset, spec: FeatureMapSpec, model: LinearModel) -> np.ndarray:
    fmap = build_map(spec)

    def chunk(rows):
        return [model.score(fmap.map(ds.examples[i])) for i in rows]

    n = num_threads()
    rows = list(range(len(ds)))
    if n == 1 or len(rows) < 2 * n:
        return np.array(chunk(rows))
    parts = [rows[k::n] for k in range(n)]
    out = np.empty(len(rows))
    with ThreadPoolExecutor(n) as pool:
        for part, res in zip(parts, pool.map(chunk, parts)):
            out[part] = res
    return out


def primal_objective(ds: LabeledDataset, spec: FeatureMapSpec, model: LinearModel) -> float:
    """lam/2 ||w||^2 + mean hinge loss, summed exactly (order-independent)."""
    scores = _scores(ds, spec, model)
    hinge = np.maximum(0.0, 1.0 - ds.labels * scores)
    return 0.5 * model.lam * model.sqnorm() + math.fsum(hinge.tolist()) / len(ds)


def predict(ds: LabeledDataset, spec: FeatureMapSpec, model: LinearModel) -> np.ndarray:
    """Labels in {-1, +1}; a zero score predicts +1."""
    return np.where(_scores(ds, spec, model) >= 0.0, 1, -1)


def test_error(ds: LabeledDataset, spec: FeatureMapSpec, model: LinearModel) -> float:
    return float(np.mean(predict(ds, spec, model) != ds.labels))


test_error.__test__ = False  # not a pytest test when imported into test modules


# ---------------------------------------------------------------------------
# serialization

_MODEL_MAGIC = "# kernelfeatures linear model"


def save_model(model: LinearModel, spec: FeatureMapSpec, path: str | Path, header: dict | None = None) -> None:
    lines = [_MODEL_MAGIC]
    lines += [f"# {line}" for line in spec.to_config().splitlines()]
    lines.append(f"# lambda={model.lam!r}")
    lines.append(f"# rank_space={model.size}")
    for key, value in (header or {}).items():
        lines.append(f"# {key}={value}")
    lines += [f"{r} {v!r}" for r, v in model.nonzero_items()]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_model(path: str | Path) -> tuple[LinearModel, FeatureMapSpec]:
    text = Path(path).read_text(encoding="utf-8")
    lines = text.splitlines()
    if not lines or lines[0] != _MODEL_MAGIC:
        raise ValueError(f"{path} is not a model file")
    header = [ln[1:].strip() for ln in lines if ln.startswith("#")]
    spec = FeatureMapSpec.from_config("\n".join(header))
    meta = dict(h.split("=", 1) for h in header if "=" in h)
    model = LinearModel.zeros(int(meta["rank_space"]), float(meta["lambda"]))
    for ln in lines:
        if ln and not ln.startswith("#"):
            r, v = ln.split()
            model.weights[int(r)] = float(v)
    return model, spec
