"""
Includes the entmax family of transformations, mapping scores
to sparse points of the probability simplex.

For ``alpha > 1`` the returned probabilities satisfy
``p_y = [(alpha - 1) * z_y - threshold]_+ ** (1 / (alpha - 1))`` and for
``alpha = 1`` they satisfy ``p_y = exp(z_y - threshold)``.
"""

# License: BSD 3 clause

import logging
from dataclasses import dataclass
from numbers import Integral

import numpy as np
from scipy.special import logsumexp

from .exceptions import IterationLimitExceeded
from .externals import check_logits, check_alpha

logger = logging.getLogger(__name__)

BISECT_TOL = 1e-12
BISECT_MAX_ITER = 100


@dataclass(frozen=True)
class SimplexDistribution:
    """Probability vector with exact zeros outside of its support.

    Parameters
    ----------
    probabilities : ndarray of shape (n_labels,)
        Nonnegative probabilities summing to one.

    threshold : float
        The normalizing constant of the transformation that produced the
        probabilities.
    """

    probabilities: np.ndarray
    threshold: float

    @property
    def support(self):
        """Indices with strictly positive probability."""
        return np.flatnonzero(self.probabilities > 0.0)

    @property
    def support_size(self):
        return int(np.count_nonzero(self.probabilities > 0.0))

    def __len__(self):
        return self.probabilities.size


def beta_exp(v, beta):
    """The beta-exponential function.

    Examples
    --------
    >>> float(beta_exp(0.0, 0.5))
    1.0
    >>> float(beta_exp(-3.0, 0.5))
    0.0
    """
    v = np.asarray(v, dtype=np.float64)
    if beta == 1.0:
        return np.exp(v)
    base = np.maximum(1.0 + (1.0 - beta) * v, 0.0)
    with np.errstate(divide='ignore'):
        return base ** (1.0 / (1.0 - beta))


def tsallis_probabilities(z, threshold, alpha):
    """Unnormalized probabilities of scores for a given threshold."""
    if alpha == 1.0:
        return np.exp(z - threshold)
    return np.maximum((alpha - 1.0) * z - threshold, 0.0) ** (1.0 / (alpha - 1.0))


def _softmax(z):
    z_max = z.max()
    exp_z = np.exp(z - z_max)
    return exp_z / exp_z.sum(), float(logsumexp(z))


def _sort_descending(z):
    return -np.sort(-z, kind='stable')


def _sparsemax(z):
    z_max = z.max()
    z_sorted = _sort_descending(z - z_max)
    cumsum = np.cumsum(z_sorted) - 1.0
    rho = np.arange(1, z.size + 1)
    support_size = np.count_nonzero(z_sorted - cumsum / rho > 0.0)
    tau = cumsum[support_size - 1] / support_size
    p = np.maximum(z - z_max - tau, 0.0)
    return p / p.sum(), float(tau + z_max)


def _entmax15(z):
    z_max = z.max()
    x = (z - z_max) / 2.0
    x_sorted = _sort_descending(x)
    rho = np.arange(1, z.size + 1)
    mean = np.cumsum(x_sorted) / rho
    mean_sq = np.cumsum(x_sorted ** 2) / rho
    delta = (1.0 - rho * (mean_sq - mean ** 2)) / rho
    tau = mean - np.sqrt(np.maximum(delta, 0.0))
    support_size = np.count_nonzero(tau <= x_sorted)
    tau_star = tau[support_size - 1]
    p = np.maximum(x - tau_star, 0.0) ** 2
    return p / p.sum(), float(tau_star + z_max / 2.0)


def _entmax_bisect(z, alpha, tol=BISECT_TOL, max_iter=BISECT_MAX_ITER):
    z_max = z.max()
    x = (alpha - 1.0) * (z - z_max)

    # The largest entry equals one at the lower end, all entries are at most 1 / n at the upper end
    tau_lo, tau_hi = -1.0, -(1.0 / z.size) ** (alpha - 1.0)

    converged = False
    for _ in range(max_iter):
        tau_m = (tau_lo + tau_hi) / 2.0
        p = tsallis_probabilities(x, tau_m, alpha)
        residual = p.sum() - 1.0
        if abs(residual) <= tol:
            converged = True
            break
        if not tau_lo < tau_m < tau_hi:
            logger.debug('Bisection bracket collapsed with residual %.3e', residual)
            converged = True
            break
        if residual > 0.0:
            tau_lo = tau_m
        else:
            tau_hi = tau_m
    if not converged:
        raise IterationLimitExceeded(f'Bisection residual {residual:.3e} is above tolerance {tol:.3e} after {max_iter} iterations.')
    return p / p.sum(), float(tau_m + (alpha - 1.0) * z_max)


def _transform(z, alpha):
    """Dispatch without input validation, returns probabilities and threshold."""
    if alpha == 1.0:
        return _softmax(z)
    if alpha == 1.5:
        return _entmax15(z)
    if alpha == 2.0:
        return _sparsemax(z)
    return _entmax_bisect(z, alpha)


def softmax(z):
    """Softmax transformation, with the log-partition function as threshold.

    Examples
    --------
    >>> softmax([0.0, 0.0]).probabilities
    array([0.5, 0.5])
    """
    return SimplexDistribution(*_softmax(check_logits(z)))


def sparsemax(z):
    """Euclidean projection of the scores onto the simplex.

    Examples
    --------
    >>> sparsemax([1.0, 0.5]).probabilities
    array([0.75, 0.25])
    """
    return SimplexDistribution(*_sparsemax(check_logits(z)))


def entmax15(z):
    """Exact sort-based 1.5-entmax."""
    return SimplexDistribution(*_entmax15(check_logits(z)))


def entmax_bisect(z, alpha=1.5, tol=BISECT_TOL, max_iter=BISECT_MAX_ITER):
    """Entmax for any alpha, with the threshold found by bisection.

    Parameters
    ----------
    z : array-like of shape (n_labels,)
        The scores.

    alpha : float, default=1.5
        The entmax parameter, not less than one. Softmax is returned for one.

    tol : float, default=1e-12
        Tolerance on the normalization residual.

    max_iter : int, default=100
        Maximum number of bisection steps.

    Returns
    -------
    distribution : SimplexDistribution

    Raises
    ------
    IterationLimitExceeded
        When the residual is above ``tol`` after ``max_iter`` steps and the
        bracket can still be refined.
    """
    z, alpha = check_logits(z), check_alpha(alpha)
    if tol <= 0.0:
        raise ValueError(f'Parameter `tol` should be a positive number. Got {tol}.')
    if not isinstance(max_iter, Integral) or max_iter < 1:
        raise ValueError(f'Parameter `max_iter` should be a positive integer. Got {max_iter}.')
    if alpha == 1.0:
        return SimplexDistribution(*_softmax(z))
    return SimplexDistribution(*_entmax_bisect(z, alpha, tol, max_iter))


def transform(z, alpha):
    """Apply the alpha-entmax transformation.

    Routes to softmax, 1.5-entmax, sparsemax or bisection.

    Examples
    --------
    >>> transform([3.0, 1.0, 0.2], 2.0).probabilities
    array([1., 0., 0.])
    """
    return SimplexDistribution(*_transform(check_logits(z), check_alpha(alpha)))
