"""
Includes the input validators shared by the transformations, the losses
and the experiments.
"""

# License: BSD 3 clause

from numbers import Real

import numpy as np
from sklearn.utils import check_array, check_random_state

SIMPLEX_TOL = 1e-9


def check_logits(z):
    """Check a vector of scores.

    Parameters
    ----------
    z : array-like of shape (n_labels,)
        Finite real scores, at least one.

    Returns
    -------
    z : ndarray of shape (n_labels,), dtype float64

    Examples
    --------
    >>> check_logits([1, 0])
    array([1., 0.])
    """
    z = check_array(z, dtype=np.float64, ensure_2d=False)
    if z.ndim != 1:
        raise ValueError(f'Scores should be a one-dimensional vector. Got an array with shape {z.shape}.')
    return z


def check_distribution(p, name='q'):
    """Check a point of the probability simplex."""
    p = check_array(p, dtype=np.float64, ensure_2d=False)
    if p.ndim != 1:
        raise ValueError(f'Parameter `{name}` should be a one-dimensional vector. Got an array with shape {p.shape}.')
    if (p < 0.0).any() or abs(p.sum() - 1.0) > SIMPLEX_TOL:
        raise ValueError(f'Parameter `{name}` should be nonnegative and sum to one. Got {p}.')
    return p


def check_alpha(alpha):
    """Check the entmax parameter, which should be a real number not less than one."""
    if isinstance(alpha, bool) or not isinstance(alpha, Real):
        raise TypeError(f'Parameter `alpha` should be a real number. Got {alpha!r} instead.')
    if not np.isfinite(alpha) or alpha < 1.0:
        raise ValueError(f'Parameter `alpha` should be a finite number greater or equal to 1.0. Got {alpha}.')
    return float(alpha)


def check_random_states(random_state, repetitions):
    """Create random states for independent repetitions."""
    random_state = check_random_state(random_state)
    return [int(random_state.randint(0, 2 ** 32 - 1, dtype='uint32')) for _ in range(repetitions)]
