"""
Test the entmax module.
"""

import numpy as np
import pytest

from sparseseq.entmax import (
    SimplexDistribution,
    beta_exp,
    tsallis_probabilities,
    softmax,
    sparsemax,
    entmax15,
    entmax_bisect,
    transform
)
from sparseseq.exceptions import IterationLimitExceeded

RANDOM_STATE = np.random.RandomState(0)
LOGITS = [RANDOM_STATE.uniform(-10, 10, size=size) for size in (2, 3, 7, 20, 64)]


@pytest.mark.parametrize('v, beta, expected', [
    (0.0, 0.5, 1.0),
    (0.0, 1.0, 1.0),
    (-3.0, 0.5, 0.0),
    (1.0, 0.5, 2.25)
])
def test_beta_exp(v, beta, expected):
    """Test the beta-exponential function."""
    assert beta_exp(v, beta) == pytest.approx(expected)


def test_beta_exp_limit():
    """Test that the beta-exponential approaches the exponential."""
    assert beta_exp(0.7, 1.0 - 1e-7) == pytest.approx(np.exp(0.7), rel=1e-5)


@pytest.mark.parametrize('z, expected', [
    ([0.0, 0.0, 0.0], [1 / 3, 1 / 3, 1 / 3]),
    ([2.0, 2.0 + np.log(2.0)], [1 / 3, 2 / 3]),
    ([-7.0, -7.0 + np.log(2.0)], [1 / 3, 2 / 3]),
    ([1000.0, 0.0], [1.0, 0.0])
])
def test_softmax(z, expected):
    """Test the softmax probabilities."""
    distribution = softmax(z)
    np.testing.assert_allclose(distribution.probabilities, expected, atol=1e-12)
    assert np.isfinite(distribution.probabilities).all()


def test_softmax_threshold():
    """Test that the softmax threshold is the log-partition function."""
    assert softmax([0.0, 0.0]).threshold == pytest.approx(np.log(2.0))
    assert softmax([-30.0, 5.0, 1.0]).support_size == 3


@pytest.mark.parametrize('z, expected, threshold', [
    ([1.0, 0.5], [0.75, 0.25], 0.25),
    ([3.0, 1.0, 0.2], [1.0, 0.0, 0.0], 2.0),
    ([4.0, 4.0], [0.5, 0.5], 3.5)
])
def test_sparsemax(z, expected, threshold):
    """Test the sparsemax probabilities and threshold."""
    distribution = sparsemax(z)
    np.testing.assert_allclose(distribution.probabilities, expected, atol=1e-12)
    assert distribution.threshold == pytest.approx(threshold)
    np.testing.assert_allclose(entmax_bisect(z, 2.0).probabilities, expected, atol=1e-6)


def test_sparsemax_exact_zeros():
    """Test that entries outside of the support are exactly zero."""
    distribution = sparsemax([3.0, 1.0, 0.2])
    assert distribution.probabilities[1] == 0.0
    assert distribution.probabilities[2] == 0.0
    np.testing.assert_array_equal(distribution.support, [0])


@pytest.mark.parametrize('z, expected', [
    ([0.0, 0.0], [0.5, 0.5]),
    ([1.0, 0.0], [0.8307, 0.1693]),
    ([2.0, 0.0], [1.0, 0.0])
])
def test_entmax15(z, expected):
    """Test the sort-based 1.5-entmax probabilities."""
    np.testing.assert_allclose(entmax15(z).probabilities, expected, atol=1e-4)
    np.testing.assert_allclose(entmax_bisect(z, 1.5).probabilities, expected, atol=1e-4)


def test_entmax15_one_hot_gap():
    """Test that a score gap of two gives an exact zero."""
    assert entmax15([2.0, 0.0]).probabilities[1] == 0.0


def test_entmax_bisect():
    """Test bisection on examples without closed form."""
    np.testing.assert_array_equal(entmax_bisect([5.0, -5.0], 2.0).probabilities, [1.0, 0.0])
    probabilities = entmax_bisect([0.3, -0.1, 1.2], 1.3, 1e-12, 200).probabilities
    assert probabilities.sum() == pytest.approx(1.0, abs=1e-9)
    assert (probabilities >= 0.0).all()


def test_entmax_bisect_softmax():
    """Test that bisection delegates to softmax for alpha equal to one."""
    np.testing.assert_allclose(entmax_bisect([1.0, 2.0], 1.0).probabilities, softmax([1.0, 2.0]).probabilities)


def test_entmax_bisect_iteration_limit():
    """Test the iteration limit of bisection."""
    with pytest.raises(IterationLimitExceeded):
        entmax_bisect([0.3, -0.1, 1.2], 1.3, 1e-12, 2)


@pytest.mark.parametrize('tol, max_iter', [(0.0, 100), (-1e-3, 100), (1e-12, 0)])
def test_entmax_bisect_errors(tol, max_iter):
    """Test the bisection parameters errors."""
    with pytest.raises(ValueError):
        entmax_bisect([1.0, 0.0], 1.5, tol, max_iter)


@pytest.mark.parametrize('z', LOGITS)
@pytest.mark.parametrize('alpha', [1.0, 1.3, 1.5, 2.0, 4.0])
def test_transform_simplex(z, alpha):
    """Test that transformations are points of the simplex."""
    distribution = transform(z, alpha)
    assert isinstance(distribution, SimplexDistribution)
    assert distribution.probabilities.sum() == pytest.approx(1.0, abs=1e-9)
    assert (distribution.probabilities >= 0.0).all()
    np.testing.assert_array_equal(distribution.support, np.flatnonzero(distribution.probabilities > 0.0))
    assert distribution.probabilities[np.argmax(z)] == distribution.probabilities.max()


@pytest.mark.parametrize('z', LOGITS)
@pytest.mark.parametrize('alpha', [1.0, 1.3, 1.5, 2.0, 4.0])
def test_transform_threshold(z, alpha):
    """Test that the threshold reconstructs the probabilities."""
    distribution = transform(z, alpha)
    np.testing.assert_allclose(tsallis_probabilities(z, distribution.threshold, alpha), distribution.probabilities, atol=1e-9)


@pytest.mark.parametrize('z', LOGITS)
@pytest.mark.parametrize('alpha', [1.0, 1.5, 2.0, 3.0])
def test_transform_invariances(z, alpha):
    """Test translation invariance and permutation equivariance."""
    permutation = np.random.RandomState(1).permutation(len(z))
    probabilities = transform(z, alpha).probabilities
    np.testing.assert_allclose(transform(z + 42.5, alpha).probabilities, probabilities, atol=1e-9)
    np.testing.assert_allclose(transform(z[permutation], alpha).probabilities, probabilities[permutation], atol=1e-12)


@pytest.mark.parametrize('z', LOGITS)
def test_closed_forms_agree_with_bisection(z):
    """Test the closed forms against bisection."""
    np.testing.assert_allclose(sparsemax(z).probabilities, entmax_bisect(z, 2.0).probabilities, atol=1e-6)
    np.testing.assert_allclose(entmax15(z).probabilities, entmax_bisect(z, 1.5).probabilities, atol=1e-6)


@pytest.mark.parametrize('z, alpha, expected', [
    ([0.0, 0.0], 1.0, [0.5, 0.5]),
    ([1.0, 0.5], 2.0, [0.75, 0.25]),
    ([1.0, 0.0], 1.5, [0.8307, 0.1693])
])
def test_transform(z, alpha, expected):
    """Test the dispatch of the transformation."""
    np.testing.assert_allclose(transform(z, alpha).probabilities, expected, atol=1e-4)


@pytest.mark.parametrize('z, alpha', [
    ([], 1.5),
    ([1.0, np.nan], 1.5),
    ([1.0, np.inf], 1.5),
    ([[1.0, 0.0]], 1.5),
    ([1.0, 0.0], 0.5)
])
def test_transform_value_errors(z, alpha):
    """Test the transformation input errors."""
    with pytest.raises(ValueError):
        transform(z, alpha)


@pytest.mark.parametrize('alpha', ['1.5', None, True])
def test_transform_type_errors(alpha):
    """Test the alpha type errors."""
    with pytest.raises(TypeError):
        transform([1.0, 0.0], alpha)
