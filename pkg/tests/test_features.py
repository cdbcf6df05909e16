import math

import numpy as np
import pytest

from lwr.features import (
    RffMap, Standardizer, apply_rff, apply_standardizer, fit_standardizer, median_heuristic_gamma,
    rbf_kernel, sample_rff,
)
from lwr.numerics import RandomStream


def test_constant_columns_get_unit_std():
    s = fit_standardizer(np.array([[1.0, 2.0, 3.0], [1.0, 2.0, 3.0]]))
    np.testing.assert_array_equal(s.mean, [1.0, 2.0, 3.0])
    np.testing.assert_array_equal(s.std, [1.0, 1.0, 1.0])


def test_population_std():
    s = fit_standardizer(np.array([[0.0], [2.0]]))
    assert s.mean[0] == 1.0 and s.std[0] == 1.0


def test_standardized_moments(np_rng):
    X = np_rng.normal(3.0, 5.0, size=(200, 4))
    Z = fit_standardizer(X).apply(X)
    assert np.all(np.abs(Z.mean(axis=0)) <= 1e-12)
    assert np.all(np.abs(Z.std(axis=0) - 1.0) <= 1e-12)


def test_apply_cases(np_rng):
    X = np_rng.normal(size=(10, 3))
    s = fit_standardizer(X)
    np.testing.assert_allclose(apply_standardizer(s, s.mean), 0.0, atol=1e-15)
    ident = Standardizer(np.zeros(3), np.ones(3))
    x = np_rng.normal(size=3)
    np.testing.assert_array_equal(apply_standardizer(ident, x), x)
    np.testing.assert_allclose(s.inverse(s.apply(x)), x, rtol=0, atol=1e-12)


def test_fit_errors():
    with pytest.raises(ValueError):
        fit_standardizer(np.empty((0, 3)))
    with pytest.raises(ValueError):
        fit_standardizer(np.ones((1, 3)))


def test_rff_deterministic_and_shapes():
    a, b = sample_rff(3, 16, 0.5, RandomStream(4)), sample_rff(3, 16, 0.5, RandomStream(4))
    np.testing.assert_array_equal(a.omega, b.omega)
    np.testing.assert_array_equal(a.phase, b.phase)
    tiny = sample_rff(1, 1, 1.0, RandomStream(0))
    assert tiny.omega.shape == (1, 1) and tiny.phase.shape == (1,)


def test_rff_frequency_scale():
    a = sample_rff(10, 10_000, 0.5, RandomStream(1)).omega.ravel()
    b = sample_rff(10, 10_000, 2.0, RandomStream(2)).omega.ravel()
    assert abs(b.std() / a.std() - 2.0) < 0.04
    assert abs(a.std() - 1.0) < 0.02  # sqrt(2 gamma)


def test_rff_phase_range():
    p = sample_rff(2, 5000, 1.0, RandomStream(3)).phase
    assert p.min() >= 0 and p.max() < 2 * math.pi


def test_rff_bad_gamma():
    with pytest.raises(ValueError):
        sample_rff(2, 4, 0.0, RandomStream(0))


def test_rff_zero_frequency():
    m = RffMap(np.zeros((2, 3)), np.zeros(2), 1.0)
    np.testing.assert_allclose(apply_rff(m, np.array([1.0, 2.0, 3.0])), [1.0, 1.0], rtol=0, atol=1e-15)


def test_rff_norm_bound(np_rng):
    m = sample_rff(4, 64, 0.7, RandomStream(5))
    Z = m.apply(np_rng.normal(size=(100, 4)) * 3)
    assert np.all(np.sum(Z * Z, axis=1) <= 2.0 + 1e-12)


def test_rff_gram_fidelity(np_rng):
    gamma = 0.5
    m = sample_rff(6, 4096, gamma, RandomStream(6))
    X, Y = np_rng.normal(size=(100, 6)) * 0.6, np_rng.normal(size=(100, 6)) * 0.6
    approx = np.sum(m.apply(X) * m.apply(Y), axis=1)
    exact = np.array([rbf_kernel(x, y, gamma) for x, y in zip(X, Y)])
    assert np.max(np.abs(approx - exact)) <= 0.05


def test_rff_unbiased(np_rng):
    gamma = 0.5
    X, Y = np_rng.normal(size=(20, 3)) * 0.7, np_rng.normal(size=(20, 3)) * 0.7
    acc = np.zeros(20)
    for s in range(50):
        m = sample_rff(3, 512, gamma, RandomStream(100 + s))
        acc += np.sum(m.apply(X) * m.apply(Y), axis=1)
    exact = np.array([rbf_kernel(x, y, gamma) for x, y in zip(X, Y)])
    assert np.max(np.abs(acc / 50 - exact)) <= 0.02


def test_median_heuristic():
    X = np.array([[0.0], [1.0], [3.0]])  # distances 1, 2, 3 -> median 2
    assert median_heuristic_gamma(X) == pytest.approx(1.0 / 8.0)


def test_round_trip_dicts(np_rng):
    s = fit_standardizer(np_rng.normal(size=(5, 2)))
    s2 = Standardizer.from_dict(s.to_dict())
    np.testing.assert_array_equal(s.std, s2.std)
    m = sample_rff(2, 8, 0.3, RandomStream(0))
    m2 = RffMap.from_dict(m.to_dict())
    np.testing.assert_array_equal(m.omega, m2.omega)
