import math

import numpy as np
import pytest

from wprox.estimators import kernel_score, kernel_score_at, kl_entropy_estimate
from wprox.measures import ParticleCloud, SeededRng, sample_gaussian_cloud


def test_entropy_estimate_standard_gaussian_1d():
    # int(rho log rho) for N(0,1) is -0.5 ln(2 pi e)
    target = -0.5 * math.log(2 * math.pi * math.e)
    values = []
    for seed in (1, 2, 3):
        cloud = sample_gaussian_cloud(np.zeros(1), 1.0, 4000, SeededRng(seed))
        values.append(kl_entropy_estimate(cloud))
    assert np.mean(values) == pytest.approx(target, abs=0.1)


def test_entropy_estimate_scaling_with_stddev():
    # scaling points by s shifts int(rho log rho) by -d ln(s)
    rng = SeededRng(12)
    cloud = sample_gaussian_cloud(np.zeros(2), 1.0, 3000, rng)
    wide = ParticleCloud(2.0 * cloud.points)
    shift = kl_entropy_estimate(wide) - kl_entropy_estimate(cloud)
    assert shift == pytest.approx(-2.0 * math.log(2.0), abs=0.1)


def test_entropy_estimate_rejects_duplicates_and_tiny_clouds():
    pts = np.array([[0.0, 0.0], [1.0, 1.0], [0.0, 0.0]])
    with pytest.raises(ValueError, match="indices"):
        kl_entropy_estimate(ParticleCloud(pts))
    with pytest.raises(ValueError):
        kl_entropy_estimate(ParticleCloud(np.array([[1.0, 2.0]])))


def test_kernel_score_matches_direct_computation():
    # independent dumb evaluation of the same KDE score
    rng = np.random.default_rng(3)
    pts = rng.normal(size=(12, 2))
    cloud = ParticleCloud(pts)
    h = 0.7
    field = kernel_score(cloud, h).vectors
    for j in range(12):
        w = np.exp(-np.sum((pts[j] - pts) ** 2, axis=1) / h**2)
        w /= w.sum()
        expected = -(2.0 / h**2) * (pts[j] - w @ pts)
        assert np.allclose(field[j], expected, atol=1e-12)


def test_kernel_score_translation_equivariance():
    rng = np.random.default_rng(8)
    pts = rng.normal(size=(30, 3))
    shift = np.array([5.0, -2.0, 1.0])
    a = kernel_score(ParticleCloud(pts), 0.5).vectors
    b = kernel_score(ParticleCloud(pts + shift), 0.5).vectors
    assert np.allclose(a, b, atol=1e-9)


def test_kernel_score_at_single_query():
    rng = np.random.default_rng(4)
    cloud = ParticleCloud(rng.normal(size=(20, 2)))
    single = kernel_score_at(cloud, np.array([0.1, -0.3]), 0.5)
    batch = kernel_score_at(cloud, np.array([[0.1, -0.3]]), 0.5)
    assert single.shape == (2,)
    assert np.allclose(single, batch[0], atol=1e-15)


def test_kernel_score_validation():
    cloud = ParticleCloud(np.zeros((3, 2)) + np.arange(3)[:, None])
    with pytest.raises(ValueError):
        kernel_score(cloud, 0.0)
    with pytest.raises(ValueError):
        kernel_score_at(cloud, np.zeros((2, 5)), 0.5)


def test_kernel_score_pull_toward_mass():
    # far from the cloud the estimated score points back toward the points
    cloud = ParticleCloud(np.zeros((5, 2)) + 0.01 * np.arange(5)[:, None])
    far = np.array([10.0, 0.0])
    vec = kernel_score_at(cloud, far, 1.0)
    assert vec[0] < 0.0
