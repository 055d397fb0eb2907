"""Approximation-error estimates, the objective sandwich, and budget curves."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp

from .dataio import LabeledDataset, dataset_stats
from .featuremap import FeatureMapSpec, MapKind, build_map, is_projection
from .svm import TrainConfig, primal_objective, test_error, train_pegasos
from .taylor import MAX_DEGREE

# diagonal gaps above this negative value are rounding noise and clamp to 0
DIAG_TOLERANCE = 1e-8
ORACLE_MAX_EXAMPLES = 200


class NotProjectionError(ValueError):
    """The feature map is not a projection, so the sandwich bound does not apply."""


class OracleError(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# matrices


def data_matrix(ds: LabeledDataset, rows: Sequence[int] | None = None) -> sp.csr_matrix:
    rows = range(len(ds)) if rows is None else rows
    xs = [ds.examples[i] for i in rows]
    indptr = np.cumsum([0] + [x.nnz for x in xs])
    indices = np.concatenate([x.indices for x in xs]) if xs else np.zeros(0, np.int64)
    data = np.concatenate([x.values for x in xs]) if xs else np.zeros(0)
    return sp.csr_matrix((data, indices, indptr), shape=(len(xs), ds.dim))


def feature_matrix(ds: LabeledDataset, spec: FeatureMapSpec, rows: Sequence[int] | None = None):
    """Stacked feature vectors as CSR, plus the per-row flop counts."""
    fmap = build_map(spec)
    rows = range(len(ds)) if rows is None else rows
    feats = [fmap.map(ds.examples[i]) for i in rows]
    indptr = np.cumsum([0] + [len(f) for f in feats])
    indices = np.concatenate([f.ranks for f in feats])
    data = np.concatenate([f.values for f in feats])
    mat = sp.csr_matrix((data, indices, indptr), shape=(len(feats), fmap.total_features))
    return mat, np.array([f.flops for f in feats])


def gaussian_gram(ds: LabeledDataset, sigma2: float) -> np.ndarray:
    X = data_matrix(ds).toarray()
    sq = np.einsum("ij,ij->i", X, X)
    dist2 = np.maximum(sq[:, None] + sq[None, :] - 2.0 * X @ X.T, 0.0)
    np.fill_diagonal(dist2, 0.0)
    return np.exp(-dist2 / (2.0 * sigma2))


def approx_gram(ds: LabeledDataset, spec: FeatureMapSpec) -> np.ndarray:
    phi, _ = feature_matrix(ds, spec)
    return (phi @ phi.T).toarray()


# ---------------------------------------------------------------------------
# pair sampling and kernel error


@dataclass(frozen=True)
class PairSample:
    pairs: np.ndarray  # (N, 2), indices into the dataset
    seed: int

    def __len__(self) -> int:
        return int(self.pairs.shape[0])


def sample_pairs(m: int, n_pairs: int, seed: int) -> PairSample:
    """Uniform pairs drawn with replacement."""
    if m < 1 or n_pairs < 1:
        raise ValueError("need a nonempty dataset and at least one pair")
    rng = np.random.Generator(np.random.PCG64(seed))
    return PairSample(rng.integers(0, m, size=(n_pairs, 2)), seed)


def pair_kernels(ds: LabeledDataset, spec: FeatureMapSpec, sample: PairSample) -> tuple[np.ndarray, np.ndarray]:
    """Exact and approximate kernel values for each sampled pair."""
    sigma2 = spec.sigma2
    uniq, inv = np.unique(sample.pairs, return_inverse=True)
    inv = inv.reshape(sample.pairs.shape)
    X = data_matrix(ds, uniq.tolist())
    diff = X[inv[:, 0]] - X[inv[:, 1]]
    dist2 = np.asarray(diff.multiply(diff).sum(axis=1)).ravel()
    exact = np.exp(-dist2 / (2.0 * sigma2))
    phi, _ = feature_matrix(ds, spec, uniq.tolist())
    approx = np.asarray(phi[inv[:, 0]].multiply(phi[inv[:, 1]]).sum(axis=1)).ravel()
    return exact, approx


def avg_kernel_error(ds: LabeledDataset, spec: FeatureMapSpec, sample: PairSample) -> float:
    """Mean |K - K~| over the sampled pairs (Gaussian K with ``spec.sigma2``)."""
    if len(sample) == 0:
        raise ValueError("pair sample is empty")
    exact, approx = pair_kernels(ds, spec, sample)
    return math.fsum(np.abs(exact - approx).tolist()) / len(sample)


# ---------------------------------------------------------------------------
# the objective sandwich


def diagonal_gaps(ds: LabeledDataset, spec: FeatureMapSpec) -> np.ndarray:
    """K(x_i, x_i) - K~(x_i, x_i) = 1 - ||phi~(x_i)||^2."""
    fmap = build_map(spec)
    return np.array([1.0 - fmap.map(x).sqnorm for x in ds.examples])


def theorem1_bound(ds: LabeledDataset, spec: FeatureMapSpec, lam: float) -> float:
    """(1 / (m sqrt(lam))) * sum_i sqrt(K(x_i, x_i) - K~(x_i, x_i))."""
    if not is_projection(spec):
        raise NotProjectionError(f"{spec.kind.value} features are not a projection map")
    gaps = diagonal_gaps(ds, spec)
    if np.any(gaps < -DIAG_TOLERANCE):
        raise NotProjectionError(f"negative diagonal gap {gaps.min():.3g}: not a projection map")
    return gap_bound(gaps, lam)


def gap_bound(gaps: np.ndarray, lam: float) -> float:
    gaps = np.maximum(np.asarray(gaps, dtype=float), 0.0)
    return math.fsum(np.sqrt(gaps).tolist()) / (gaps.size * math.sqrt(lam))


@dataclass(frozen=True)
class DualSolution:
    alphas: np.ndarray  # predictor is sum_i alphas[i] K(x_i, .)
    primal: float
    dual: float
    epochs: int

    @property
    def gap(self) -> float:
        return self.primal - self.dual


def dual_svm(gram: np.ndarray, labels: np.ndarray, lam: float, tol: float = 1e-6,
             max_epochs: int = 200_000) -> DualSolution:
    """Exact solve of the bias-free SVM primal through its dual.

    With ``w = (1/(lam m)) sum_i b_i y_i phi(x_i)`` and ``0 <= b_i <= 1`` the
    dual is ``mean(b) - (1/(2 lam m^2)) b'Qb``, ``Q = yy' * gram``.  Cyclic
    projected coordinate ascent with exact line search runs until the
    duality gap is at most ``tol``.
    """
    gram = np.asarray(gram, dtype=float)
    y = np.asarray(labels, dtype=float)
    m = y.size
    if gram.shape != (m, m):
        raise ValueError("gram matrix and labels disagree in size")
    c = 1.0 / (lam * m)
    Q = gram * np.outer(y, y)
    diag = np.diag(Q).copy()
    beta = np.zeros(m)
    qb = np.zeros(m)  # Q @ beta
    primal = dual = math.nan
    for epoch in range(1, max_epochs + 1):
        for i in range(m):
            if diag[i] <= 0.0:
                new = 1.0 if qb[i] * c < 1.0 else 0.0
            else:
                new = min(1.0, max(0.0, beta[i] + (1.0 - c * qb[i]) / (c * diag[i])))
            step = new - beta[i]
            if step != 0.0:
                beta[i] = new
                qb += step * Q[:, i]
        margins = c * qb
        quad = c * float(beta @ qb) / m  # = lam * ||w||^2
        primal = 0.5 * quad + float(np.maximum(0.0, 1.0 - margins).sum()) / m
        dual = float(beta.sum()) / m - 0.5 * quad
        if primal - dual <= tol:
            return DualSolution(c * beta * y, primal, dual, epoch)
    raise OracleError(
        f"dual solver stopped after {max_epochs} epochs with gap {primal - dual:.3g} "
        f"(primal {primal:.9g}, dual {dual:.9g})"
    )


def exact_kernel_svm(ds: LabeledDataset, sigma2: float, lam: float, tol: float = 1e-6) -> tuple[np.ndarray, float]:
    """Representer coefficients and optimum of the Gaussian-kernel SVM."""
    if len(ds) > ORACLE_MAX_EXAMPLES:
        raise ValueError(f"oracle limited to {ORACLE_MAX_EXAMPLES} examples")
    sol = dual_svm(gaussian_gram(ds, sigma2), ds.labels, lam, tol)
    return sol.alphas, sol.primal


def approx_kernel_svm(ds: LabeledDataset, spec: FeatureMapSpec, lam: float, tol: float = 1e-6) -> tuple[np.ndarray, float]:
    if len(ds) > ORACLE_MAX_EXAMPLES:
        raise ValueError(f"oracle limited to {ORACLE_MAX_EXAMPLES} examples")
    sol = dual_svm(approx_gram(ds, spec), ds.labels, lam, tol)
    return sol.alphas, sol.primal


@dataclass(frozen=True)
class SandwichReport:
    p_star: float
    p_tilde_star: float
    bound: float
    tolerance: float = 1e-3

    @property
    def lower_ok(self) -> bool:
        return self.p_star <= self.p_tilde_star + self.tolerance

    @property
    def upper_ok(self) -> bool:
        return self.p_tilde_star <= self.p_star + self.bound + self.tolerance

    @property
    def holds(self) -> bool:
        return self.lower_ok and self.upper_ok


def verify_sandwich(ds: LabeledDataset, spec: FeatureMapSpec, lam: float, tol: float = 1e-6) -> SandwichReport:
    """p* <= p~* <= p* + bound, with both optima from the dual solver."""
    bound = theorem1_bound(ds, spec, lam)
    _, p_star = exact_kernel_svm(ds, spec.sigma2, lam, tol)
    _, p_tilde = approx_kernel_svm(ds, spec, lam, tol)
    return SandwichReport(p_star, p_tilde, bound)


# ---------------------------------------------------------------------------
# budget curves


def taylor_degree_for_budget(mean_nnz: int, budget: float) -> int:
    """Largest r with C(mean_nnz + r, r) <= budget (0 if none fits)."""
    r = 0
    while r < MAX_DEGREE and math.comb(mean_nnz + r + 1, r + 1) <= budget:
        r += 1
    return r


def fourier_features_for_budget(mean_nnz: int, budget: float) -> int:
    """floor(budget / mean_nnz), at least one feature."""
    return max(1, int(budget // max(mean_nnz, 1)))


BUDGET_COLUMNS = ("kind", "B", "param", "num_features", "avg_err", "objective", "test_err", "flops")


def budget_curve(
    ds: LabeledDataset,
    kinds: Iterable[str | MapKind],
    budgets: Sequence[float],
    sigma2: float,
    *,
    sample: PairSample,
    train: TrainConfig | None = None,
    test_ds: LabeledDataset | None = None,
    seed: int = 0,
) -> list[dict]:
    """One row per (kind, budget): the budget-matched map and its quality.

    Taylor takes the largest degree whose monomial count over the rounded
    mean nonzero count fits the budget; Fourier takes ``B // d~`` features.
    Objective and test error are filled in only when ``train`` is given
    (test error on ``test_ds``, or on ``ds`` if that is absent).
    """
    budgets = list(budgets)
    if not budgets or any(b <= 0 for b in budgets) or budgets != sorted(budgets):
        raise ValueError("budgets must be positive and ascending")
    mean_nnz = max(1, round(dataset_stats(ds).mean_nnz))
    rows = []
    for kind in kinds:
        kind = MapKind.parse(kind)
        for B in budgets:
            if kind is MapKind.TAYLOR:
                param = taylor_degree_for_budget(mean_nnz, B)
                spec = FeatureMapSpec(kind, ds.dim, sigma2=sigma2, degree=param)
            elif kind is MapKind.FOURIER:
                param = fourier_features_for_budget(mean_nnz, B)
                spec = FeatureMapSpec(kind, ds.dim, sigma2=sigma2, num_features=param, seed=seed)
            else:
                raise ValueError("budget curves compare taylor and fourier maps only")
            _, flops = feature_matrix(ds, spec)
            row = {
                "kind": kind.value,
                "B": B,
                "param": param,
                "num_features": build_map(spec).total_features,
                "avg_err": avg_kernel_error(ds, spec, sample),
                "objective": math.nan,
                "test_err": math.nan,
                "flops": float(flops.mean()),
            }
            if train is not None:
                model, _ = train_pegasos(ds, spec, train)
                row["objective"] = primal_objective(ds, spec, model)
                row["test_err"] = test_error(test_ds if test_ds is not None else ds, spec, model)
            rows.append(row)
    return rows
