import numpy as np
import pytest
from scipy import stats

from promptforge.numerics.rng import RngStream, sample_beta, sample_gaussian


def test_same_seed_and_label_reproduce_exactly():
    a = RngStream(123, "alpha").sample_gaussian((32, 4))
    b = RngStream(123, "alpha").sample_gaussian((32, 4))
    assert np.array_equal(a, b)


def test_different_labels_differ():
    a = RngStream(123, "alpha").sample_gaussian((64,))
    b = RngStream(123, "beta").sample_gaussian((64,))
    assert not np.array_equal(a, b)


def test_stream_independent_of_sibling_order():
    root = RngStream(9, "root")
    first = root.child("a").sample_gaussian((16,))
    # interleave: drawing from b before a must not change a's sequence
    root2 = RngStream(9, "root")
    _ = root2.child("b").sample_gaussian((1000,))
    second = root2.child("a").sample_gaussian((16,))
    assert np.array_equal(first, second)


def test_gaussian_moments():
    draws = sample_gaussian(RngStream(7, "moments"), (100_000,))
    assert abs(draws.mean()) < 0.02
    assert abs(draws.var() - 1.0) < 0.05


def test_beta_support_and_alpha_validation():
    stream = RngStream(11, "beta")
    for _ in range(100):
        x = sample_beta(stream, 2.5)
        assert 0.0 <= x <= 1.0
    with pytest.raises(ValueError):
        sample_beta(stream, 0.0)
    with pytest.raises(ValueError):
        sample_beta(stream, -1.0)


def test_beta_alpha_one_is_uniform():
    stream = RngStream(13, "beta-uniform")
    draws = np.asarray([sample_beta(stream, 1.0) for _ in range(10_000)])
    _, pvalue = stats.kstest(draws, "uniform")
    assert pvalue > 0.01
    assert abs(draws.mean() - 0.5) < 0.02


def test_draw_counter_advances():
    stream = RngStream(1, "count")
    assert stream.draws == 0
    stream.sample_gaussian((3,))
    stream.sample_beta(1.0)
    assert stream.draws == 2
