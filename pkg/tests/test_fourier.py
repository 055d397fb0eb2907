import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import random_sparse
from kernelfeatures.dataio import SparseVector
from kernelfeatures.features import exact_gaussian_kernel
from kernelfeatures.fourier import box_muller, fourier_map, sample_frequencies


def test_stream_contract():
    # rebuild the documented stream by hand: D phase uniforms, then Box-Muller pairs
    d, D, sigma2, seed = 3, 5, 2.0, 42
    rng = np.random.Generator(np.random.PCG64(seed))
    u = rng.random(D + 2 * 8)
    thetas = 2 * math.pi * u[:D]
    normals = []
    for u1, u2 in zip(u[D::2], u[D + 1::2]):
        rad = math.sqrt(-2 * math.log(1 - u1))
        normals += [rad * math.cos(2 * math.pi * u2), rad * math.sin(2 * math.pi * u2)]
    omegas = np.array(normals[: D * d]).reshape(D, d) / math.sqrt(sigma2)
    fm = sample_frequencies(d, D, sigma2, seed)
    np.testing.assert_allclose(fm.thetas, thetas, rtol=0, atol=1e-15)
    np.testing.assert_allclose(fm.omegas, omegas, rtol=1e-14, atol=1e-15)


def test_same_seed_bit_identical():
    a, b = sample_frequencies(7, 33, 1.3, 9), sample_frequencies(7, 33, 1.3, 9)
    assert a.omegas.tobytes() == b.omegas.tobytes()
    assert a.thetas.tobytes() == b.thetas.tobytes()
    assert sample_frequencies(7, 33, 1.3, 10).thetas.tobytes() != a.thetas.tobytes()


def test_shapes_and_theta_range():
    fm = sample_frequencies(4, 1000, 1.0, 0)
    assert fm.omegas.shape == (1000, 4) and fm.thetas.shape == (1000,)
    assert np.all(fm.thetas >= 0) and np.all(fm.thetas < 2 * math.pi)


def test_box_muller_edge():
    out = box_muller(np.array([0.0]), np.array([0.25]))
    assert out.tolist() == [0.0, 0.0]


def test_frequency_variance():
    fm = sample_frequencies(1, 100_000, 4.0, 1)
    assert np.var(fm.omegas) == pytest.approx(0.25, rel=0.05)


def test_single_feature():
    fm = sample_frequencies(2, 1, 1.0, 3)
    x = SparseVector.from_dense([0.4, -1.1])
    f = fourier_map(fm, x)
    expected = math.sqrt(2) * math.cos(float(fm.omegas[0] @ x.to_dense()) + fm.thetas[0])
    assert f.values.tolist() == pytest.approx([expected], rel=1e-14)


def test_zero_vector():
    fm = sample_frequencies(3, 16, 1.0, 0)
    f = fourier_map(fm, SparseVector([], [], 3))
    np.testing.assert_array_equal(f.values, math.sqrt(2 / 16) * np.cos(fm.thetas))
    assert f.flops == 0


def test_flops_and_ranks():
    rng = np.random.default_rng(0)
    fm = sample_frequencies(30, 64, 1.0, 0)
    for _ in range(10):
        x = random_sparse(rng, 30, int(rng.integers(1, 10)))
        f = fourier_map(fm, x)
        assert f.flops == 64 * x.nnz
        assert f.ranks.tolist() == list(range(64))


def test_large_D_estimate():
    fm = sample_frequencies(2, 100_000, 1.0, 0)
    x, x2 = SparseVector.from_dense([1.0, 0.0]), SparseVector.from_dense([0.0, 1.0])
    assert abs(fourier_map(fm, x).dot(fourier_map(fm, x2)) - math.exp(-1)) <= 0.02


def test_not_a_projection():
    # some x has a self inner product above K(x, x) = 1
    rng = np.random.default_rng(1)
    fm = sample_frequencies(5, 8, 1.0, 0)
    diag = [fourier_map(fm, random_sparse(rng, 5, 5, -2, 2)).sqnorm for _ in range(200)]
    assert max(diag) > 1.0


def test_invalid_arguments():
    with pytest.raises(ValueError):
        sample_frequencies(3, 0, 1.0, 0)
    with pytest.raises(ValueError):
        sample_frequencies(3, 4, 0.0, 0)
    with pytest.raises(ValueError):
        fourier_map(sample_frequencies(2, 4, 1.0, 0), SparseVector([2], [1.0], 3))


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_features_bounded(seed):
    rng = np.random.default_rng(seed)
    fm = sample_frequencies(6, 32, 1.0, seed % 1000)
    f = fourier_map(fm, random_sparse(rng, 6, 4, -5, 5))
    assert np.all(np.abs(f.values) <= math.sqrt(2 / 32) + 1e-15)
    assert f.sqnorm <= 2.0 + 1e-12


def test_mean_over_seeds_is_unbiased():
    x, x2 = SparseVector.from_dense([0.5, 0.2, -0.1]), SparseVector.from_dense([0.1, 0.6, 0.3])
    k = exact_gaussian_kernel(1.0, x, x2)
    est = []
    for s in range(30):
        fm = sample_frequencies(3, 1024, 1.0, s)
        est.append(fourier_map(fm, x).dot(fourier_map(fm, x2)))
    assert abs(np.mean(est) - k) <= 0.01
