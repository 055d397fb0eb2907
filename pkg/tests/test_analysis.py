import math

import numpy as np
import pytest

from helpers import gaussian_dataset, random_dataset
from kernelfeatures import analysis
from kernelfeatures.analysis import (
    NotProjectionError,
    OracleError,
    PairSample,
    approx_gram,
    avg_kernel_error,
    budget_curve,
    dual_svm,
    exact_kernel_svm,
    fourier_features_for_budget,
    gap_bound,
    gaussian_gram,
    pair_kernels,
    sample_pairs,
    taylor_degree_for_budget,
    theorem1_bound,
    verify_sandwich,
)
from kernelfeatures.dataio import LabeledDataset, SparseVector
from kernelfeatures.featuremap import FeatureMapSpec, approx_kernel, exact_gaussian_kernel
from kernelfeatures.svm import TrainConfig
from kernelfeatures.taylor import TaylorMap, taylor_error_bound


def brute_primal(gram, labels, lam, alphas):
    """Primal objective of f = sum_i alpha_i K(x_i, .)."""
    scores = gram @ alphas
    return 0.5 * lam * alphas @ gram @ alphas + np.mean(np.maximum(0, 1 - labels * scores))


# -- pairs ----------------------------------------------------------------------


def test_sample_pairs_bounds_and_seed():
    s = sample_pairs(7, 1000, 3)
    assert s.pairs.shape == (1000, 2) and s.pairs.min() >= 0 and s.pairs.max() < 7
    assert np.array_equal(s.pairs, sample_pairs(7, 1000, 3).pairs)
    # with replacement: a pair may repeat an index
    assert np.any(s.pairs[:, 0] == s.pairs[:, 1])
    with pytest.raises(ValueError):
        sample_pairs(0, 10, 0)


def test_pair_kernels_match_pointwise():
    rng = np.random.default_rng(0)
    ds = random_dataset(rng, 30, 8, 4)
    for spec in (FeatureMapSpec("taylor", 8, sigma2=2.0, degree=3),
                 FeatureMapSpec("fourier", 8, sigma2=2.0, num_features=20, seed=1)):
        s = sample_pairs(len(ds), 50, 1)
        exact, approx = pair_kernels(ds, spec, s)
        for (i, j), e, a in zip(s.pairs, exact, approx):
            x, x2 = ds.examples[i], ds.examples[j]
            assert e == pytest.approx(exact_gaussian_kernel(2.0, x, x2), rel=1e-12)
            assert a == pytest.approx(approx_kernel(spec, x, x2), rel=1e-12, abs=1e-15)


def test_high_degree_error_vanishes():
    rng = np.random.default_rng(1)
    ds = random_dataset(rng, 40, 5, 3, -0.5, 0.5)
    assert ds.radius <= 1.0
    err = avg_kernel_error(ds, FeatureMapSpec("taylor", 5, degree=40), sample_pairs(40, 2000, 0))
    assert err <= 1e-9


def test_repeated_point():
    x = SparseVector.from_dense([0.8, -0.6])
    ds = LabeledDataset([x] * 5, [1, -1, 1, -1, 1], 2)
    spec = FeatureMapSpec("fourier", 2, num_features=16, seed=3)
    expected = abs(1.0 - approx_kernel(spec, x, x))
    assert avg_kernel_error(ds, spec, sample_pairs(5, 300, 0)) == pytest.approx(expected, rel=1e-12)


def test_error_below_mean_bound():
    rng = np.random.default_rng(2)
    ds = random_dataset(rng, 60, 6, 4, 0.0, 1.0)
    spec = FeatureMapSpec("taylor", 6, degree=2)
    s = sample_pairs(60, 5000, 1)
    tm = TaylorMap(1.0, 2, 6)
    bounds = [taylor_error_bound(tm, ds.examples[i].norm, ds.examples[j].norm) for i, j in s.pairs]
    assert avg_kernel_error(ds, spec, s) <= np.mean(bounds)


def test_taylor_error_monotone_in_degree():
    rng = np.random.default_rng(3)
    ds = random_dataset(rng, 50, 6, 4, 0.0, 1.0)  # nonnegative inner products
    s = sample_pairs(50, 3000, 2)
    errs = [avg_kernel_error(ds, FeatureMapSpec("taylor", 6, degree=r), s) for r in range(7)]
    assert all(b <= a for a, b in zip(errs, errs[1:]))


def test_fourier_error_median_trend():
    rng = np.random.default_rng(4)
    ds = random_dataset(rng, 60, 6, 4)
    s = sample_pairs(60, 2000, 3)
    medians = []
    for D in (16, 32, 64, 128, 256):
        errs = [avg_kernel_error(ds, FeatureMapSpec("fourier", 6, num_features=D, seed=seed), s) for seed in range(10)]
        medians.append(np.median(errs))
    assert all(b <= a for a, b in zip(medians, medians[1:]))


def test_empty_sample_rejected():
    ds = LabeledDataset([SparseVector.from_dense([1.0])], [1], 1)
    with pytest.raises(ValueError):
        avg_kernel_error(ds, FeatureMapSpec("taylor", 1), PairSample(np.zeros((0, 2), dtype=int), 0))


# -- Theorem 1 bound ------------------------------------------------------------


def test_bound_arithmetic():
    assert gap_bound(np.array([0.04]), 1.0) == pytest.approx(0.2, rel=1e-15)
    gaps = np.array([0.04, 0.09, 0.0])
    assert gap_bound(gaps, 2.0) == pytest.approx(gap_bound(gaps, 1.0) / math.sqrt(2), rel=1e-15)
    assert gap_bound(np.array([-1e-12]), 1.0) == 0.0


def test_bound_vanishes_at_high_degree():
    rng = np.random.default_rng(5)
    ds = random_dataset(rng, 30, 4, 3, -0.3, 0.3)
    assert theorem1_bound(ds, FeatureMapSpec("taylor", 4, degree=40), 0.1) <= 1e-4


def test_bound_single_example():
    # choose x with 1 - K~(x, x) = 0.04 at r = 0: e^{-||x||^2} = 0.96
    x = SparseVector.from_dense([math.sqrt(-math.log(0.96))])
    ds = LabeledDataset([x], [1], 1)
    assert theorem1_bound(ds, FeatureMapSpec("taylor", 1, degree=0), 1.0) == pytest.approx(0.2, rel=1e-12)


def test_bound_rejects_non_projection():
    rng = np.random.default_rng(6)
    ds = random_dataset(rng, 20, 4, 3)
    with pytest.raises(NotProjectionError):
        theorem1_bound(ds, FeatureMapSpec("fourier", 4, num_features=8), 1.0)
    with pytest.raises(NotProjectionError):
        theorem1_bound(ds, FeatureMapSpec("poly", 4, degree=2), 1.0)


def test_lambda_scaling():
    rng = np.random.default_rng(7)
    ds = random_dataset(rng, 20, 4, 3)
    spec = FeatureMapSpec("taylor", 4, degree=2)
    assert theorem1_bound(ds, spec, 0.2) == pytest.approx(theorem1_bound(ds, spec, 0.1) / math.sqrt(2), rel=1e-14)


# -- dual oracle -----------------------------------------------------------------


def test_single_example_optimum():
    x = SparseVector.from_dense([0.4])
    ds = LabeledDataset([x], [1], 1)
    alphas, p_star = exact_kernel_svm(ds, 1.0, 1.0)
    assert p_star == pytest.approx(0.5, abs=1e-6)
    assert alphas[0] == pytest.approx(1.0, abs=1e-6)


def test_duplicate_equals_weight_two():
    # a duplicated example enters the objective exactly like one example of weight 2
    rng = np.random.default_rng(8)
    ds = gaussian_dataset(rng, 6, 3, 1.0)
    dup = ds.subset([0, 0, 1, 2, 3, 4, 5])
    y = dup.labels.astype(float)
    gram = gaussian_gram(dup, 1.0)
    sol = dual_svm(gram, dup.labels, 0.1, tol=1e-9)
    # only the sum of the two copies' coefficients matters
    merged = sol.alphas.copy()
    merged[0], merged[1] = sol.alphas[0] + sol.alphas[1], 0.0
    assert brute_primal(gram, y, 0.1, merged) == pytest.approx(sol.primal, abs=1e-9)
    g6 = gaussian_gram(ds, 1.0)
    a6 = np.concatenate([[merged[0]], merged[2:]])
    hinge = np.maximum(0, 1 - ds.labels * (g6 @ a6))
    weighted = 0.5 * 0.1 * a6 @ g6 @ a6 + (2 * hinge[0] + hinge[1:].sum()) / 7
    assert weighted == pytest.approx(sol.primal, abs=1e-9)


def test_dual_gap_and_brute_force_primal():
    rng = np.random.default_rng(9)
    ds = gaussian_dataset(rng, 40, 4, 1.5)
    gram = gaussian_gram(ds, 1.0)
    sol = dual_svm(gram, ds.labels, 0.05)
    assert 0 <= sol.gap <= 1e-6
    assert brute_primal(gram, ds.labels.astype(float), 0.05, sol.alphas) == pytest.approx(sol.primal, abs=1e-12)
    # no other coefficient vector does better than the dual certificate allows
    for _ in range(20):
        other = sol.alphas + rng.normal(scale=0.05, size=sol.alphas.size)
        assert brute_primal(gram, ds.labels.astype(float), 0.05, other) >= sol.dual - 1e-12


def test_separable_pair_minimal_norm():
    # x = +-a in 1-d, linear kernel: separator w = 1/a, and for small lam p* = lam / (2 a^2)
    a, lam = 3.0, 1e-3
    gram = np.array([[a * a, -a * a], [-a * a, a * a]])
    sol = dual_svm(gram, np.array([1, -1]), lam, tol=1e-12)
    assert sol.primal == pytest.approx(lam / (2 * a * a), rel=1e-6)


def test_oracle_errors():
    gram = np.eye(3)
    with pytest.raises(ValueError):
        dual_svm(gram, np.array([1, -1]), 0.1)
    rng = np.random.default_rng(10)
    ds = gaussian_dataset(rng, 30, 3, 1.0)
    with pytest.raises(OracleError):
        dual_svm(gaussian_gram(ds, 1.0), ds.labels, 1e-4, tol=1e-12, max_epochs=2)
    big = gaussian_dataset(rng, 201, 2, 1.0)
    with pytest.raises(ValueError):
        exact_kernel_svm(big, 1.0, 0.1)


def test_gram_matrices():
    rng = np.random.default_rng(11)
    ds = random_dataset(rng, 15, 6, 3)
    G = gaussian_gram(ds, 1.5)
    assert np.allclose(np.diag(G), 1.0)
    assert G[2, 7] == pytest.approx(exact_gaussian_kernel(1.5, ds.examples[2], ds.examples[7]), rel=1e-12)
    spec = FeatureMapSpec("taylor", 6, sigma2=1.5, degree=2)
    A = approx_gram(ds, spec)
    assert A[3, 9] == pytest.approx(approx_kernel(spec, ds.examples[3], ds.examples[9]), rel=1e-12)


# -- sandwich -----------------------------------------------------------------


def test_sandwich_high_degree_collapses():
    rng = np.random.default_rng(12)
    ds = gaussian_dataset(rng, 30, 3, 0.8)
    rep = verify_sandwich(ds, FeatureMapSpec("taylor", 3, degree=30), 0.1)
    assert rep.holds
    assert rep.bound <= 1e-6
    assert rep.p_tilde_star == pytest.approx(rep.p_star, abs=1e-5)


@pytest.mark.parametrize("r", [1, 2, 3])
def test_sandwich_holds(r):
    rng = np.random.default_rng(100 + r)
    ds = gaussian_dataset(rng, 50, 5, 1.5)
    for lam in (0.01, 0.1, 1.0):
        rep = verify_sandwich(ds, FeatureMapSpec("taylor", 5, degree=r), lam)
        assert rep.lower_ok and rep.upper_ok


# -- budgets ------------------------------------------------------------------


def test_budget_arithmetic():
    assert taylor_degree_for_budget(12, 1820) == 4
    assert math.comb(16, 4) == 1820
    assert fourier_features_for_budget(12, 1820) == 151
    assert taylor_degree_for_budget(12, 12) == 0
    assert fourier_features_for_budget(12, 5) == 1


def test_budget_curve_rows():
    rng = np.random.default_rng(13)
    ds = random_dataset(rng, 80, 30, 6, 0.0, 1.0)
    s = sample_pairs(80, 500, 0)
    rows = budget_curve(ds, ["taylor", "fourier"], [30, 100, 400], 4.0, sample=s)
    assert [(r["kind"], r["B"]) for r in rows] == [
        (k, b) for k in ("taylor", "fourier") for b in (30, 100, 400)
    ]
    for row in rows:
        assert set(row) == set(analysis.BUDGET_COLUMNS)
        assert row["flops"] <= row["B"]
        assert math.isnan(row["objective"]) and math.isnan(row["test_err"])
    trained = budget_curve(ds, ["taylor"], [100], 4.0, sample=s, train=TrainConfig(lam=0.01, epochs=2))
    assert 0 <= trained[0]["test_err"] <= 1 and trained[0]["objective"] > 0
    with pytest.raises(ValueError):
        budget_curve(ds, ["taylor"], [100, 30], 4.0, sample=s)
    with pytest.raises(ValueError):
        budget_curve(ds, ["poly"], [100], 4.0, sample=s)
