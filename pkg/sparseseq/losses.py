"""
Includes the Tsallis negentropies, the Fenchel-Young losses and their
label smoothed version.
"""

# License: BSD 3 clause

from dataclasses import dataclass
from numbers import Integral

import numpy as np
from scipy.special import logsumexp, xlogy

from .entmax import _transform
from .exceptions import DegenerateEpsilon
from .externals import check_logits, check_alpha, check_distribution

KINDS = ('one-hot', 'uniform', 'general')


@dataclass(frozen=True)
class TargetDistribution:
    """Target point of the simplex.

    Use the ``one_hot``, ``uniform`` and ``general`` constructors.
    """

    probabilities: np.ndarray
    kind: str = 'general'

    def __post_init__(self):
        probabilities = check_distribution(self.probabilities, 'probabilities')
        if self.kind not in KINDS:
            raise ValueError(f'Parameter `kind` should be one of {", ".join(KINDS)}. Got {self.kind!r}.')
        if self.kind == 'one-hot' and np.count_nonzero(probabilities == 1.0) != 1:
            raise ValueError('One-hot targets should have exactly one entry equal to 1.0.')
        object.__setattr__(self, 'probabilities', probabilities)

    @classmethod
    def one_hot(cls, index, size):
        probabilities = np.zeros(size)
        probabilities[index] = 1.0
        return cls(probabilities, 'one-hot')

    @classmethod
    def uniform(cls, size):
        return cls(np.full(size, 1.0 / size), 'uniform')

    @classmethod
    def general(cls, probabilities):
        return cls(np.asarray(probabilities, dtype=np.float64), 'general')

    def __len__(self):
        return self.probabilities.size


@dataclass(frozen=True)
class SmoothingSpec:
    """Parameters of a Fenchel-Young label smoothing loss.

    Parameters
    ----------
    alpha : float
        The entmax parameter of the Tsallis negentropy.

    epsilon : float, default=0.0
        Weight of the smoothing distribution, in the [0.0, 1.0] interval.

    smoothing_distribution : TargetDistribution or None, default=None
        The distribution mixed with the gold target. The uniform distribution
        over the scores is used when it is None.
    """

    alpha: float
    epsilon: float = 0.0
    smoothing_distribution: TargetDistribution = None

    def __post_init__(self):
        object.__setattr__(self, 'alpha', check_alpha(self.alpha))
        if not 0.0 <= self.epsilon <= 1.0:
            raise ValueError(f'Parameter `epsilon` should be in the [0.0, 1.0] interval. Got {self.epsilon}.')
        object.__setattr__(self, 'epsilon', float(self.epsilon))

    @property
    def is_uniform(self):
        return self.smoothing_distribution is None or self.smoothing_distribution.kind == 'uniform'

    def smoothing_probabilities(self, size):
        """Probabilities of the smoothing distribution for a vocabulary size."""
        if self.smoothing_distribution is None:
            return np.full(size, 1.0 / size)
        if len(self.smoothing_distribution) != size:
            raise ValueError(f'Smoothing distribution has {len(self.smoothing_distribution)} entries but scores have {size}.')
        return self.smoothing_distribution.probabilities


@dataclass(frozen=True)
class LossResult:
    """Loss value with its gradient with respect to the scores."""

    value: float
    gradient: np.ndarray


def _probabilities(p):
    return np.asarray(getattr(p, 'probabilities', p), dtype=np.float64)


def _negentropy(p, alpha):
    if alpha == 1.0:
        return float(xlogy(p, p).sum())
    return float(((p ** alpha).sum() - 1.0) / (alpha * (alpha - 1.0)))


def _fy_loss(z, q, alpha):
    z = z - z.max()
    p, threshold = _transform(z, alpha)
    conjugate_value = threshold if alpha == 1.0 else z @ p - _negentropy(p, alpha)
    return conjugate_value + _negentropy(q, alpha) - z @ q, p - q


def _check_gold(gold, size):
    if isinstance(gold, bool) or not isinstance(gold, Integral) or not 0 <= gold < size:
        raise ValueError(f'Parameter `gold` should be an index in [0, {size}). Got {gold!r}.')
    return int(gold)


def _gold_probabilities(gold, size):
    if isinstance(gold, Integral) and not isinstance(gold, bool):
        gold = _check_gold(gold, size)
        q = np.zeros(size)
        q[gold] = 1.0
        return q
    q = _probabilities(gold)
    if q.size != size:
        raise ValueError(f'Gold distribution has {q.size} entries but scores have {size}.')
    return q


def mixed_target(gold, spec, size):
    """The smoothed target, a mixture of the gold and smoothing distributions."""
    q = _gold_probabilities(gold, size)
    return (1.0 - spec.epsilon) * q + spec.epsilon * spec.smoothing_probabilities(size)


def tsallis_negentropy(p, alpha):
    """Negative Tsallis entropy, Shannon negentropy for alpha equal to one.

    Examples
    --------
    >>> tsallis_negentropy([0.5, 0.5], 2.0)
    -0.25
    >>> tsallis_negentropy([0.0, 1.0], 1.5)
    0.0
    """
    return _negentropy(check_distribution(_probabilities(p), 'p'), check_alpha(alpha))


def conjugate(z, alpha):
    """Convex conjugate of the Tsallis negentropy restricted to the simplex."""
    z, alpha = check_logits(z), check_alpha(alpha)
    if alpha == 1.0:
        return float(logsumexp(z))
    p, _ = _transform(z, alpha)
    return float(z @ p - _negentropy(p, alpha))


def fy_loss(z, q, alpha):
    """Fenchel-Young loss and its gradient.

    Parameters
    ----------
    z : array-like of shape (n_labels,)
        The scores.

    q : TargetDistribution or array-like of shape (n_labels,)
        The target distribution.

    alpha : float
        The entmax parameter.

    Returns
    -------
    result : LossResult
        The loss value and the gradient ``transform(z, alpha) - q``.
    """
    z, alpha = check_logits(z), check_alpha(alpha)
    q = check_distribution(_probabilities(q))
    if q.size != z.size:
        raise ValueError(f'Target has {q.size} entries but scores have {z.size}.')
    value, gradient = _fy_loss(z, q, alpha)
    return LossResult(float(value), gradient)


def smoothed_loss(z, gold, spec):
    """Fenchel-Young label smoothing loss.

    The gold label may also be given as a distribution, in which case the
    loss is evaluated at the mixture of that distribution with the smoothing
    distribution.

    Examples
    --------
    >>> smoothed_loss([0.0, 0.0], 0, SmoothingSpec(1.0, 0.1)).gradient
    array([-0.45,  0.45])
    """
    z = check_logits(z)
    value, gradient = _fy_loss(z, mixed_target(gold, spec, z.size), spec.alpha)
    return LossResult(float(value), gradient)


def _check_uniform(spec):
    if not spec.is_uniform:
        raise ValueError('The smoothing distribution should be uniform.')


def smoothed_loss_via_identity(z, gold, spec):
    """Smoothed loss as the unsmoothed loss plus a linear regularizer and a constant."""
    _check_uniform(spec)
    z = check_logits(z)
    gold = _check_gold(gold, z.size)
    q = _gold_probabilities(gold, z.size)
    value, _ = _fy_loss(z, q, spec.alpha)
    constant = -_negentropy(q, spec.alpha) + _negentropy(mixed_target(gold, spec, z.size), spec.alpha)
    return float(value + spec.epsilon * (z[gold] - z.mean()) + constant)


def smoothing_lambda(spec):
    """Weight of the regularization towards the uniform distribution.

    Examples
    --------
    >>> smoothing_lambda(SmoothingSpec(1.5, 0.5))
    1.0
    """
    if spec.epsilon == 1.0:
        raise DegenerateEpsilon('Parameter `epsilon` should be less than 1.0 for the ratio epsilon / (1 - epsilon) to be finite.')
    return spec.epsilon / (1.0 - spec.epsilon)


def uniform_regularizer_form(z, gold, spec):
    """Unsmoothed loss regularized by the loss towards the uniform distribution.

    Scaled by ``1 - epsilon`` and reduced by the Bregman information of the
    mixture, it equals the smoothed loss.
    """
    _check_uniform(spec)
    weight = smoothing_lambda(spec)
    z = check_logits(z)
    q = _gold_probabilities(_check_gold(gold, z.size), z.size)
    gold_value, _ = _fy_loss(z, q, spec.alpha)
    uniform_value, _ = _fy_loss(z, np.full(z.size, 1.0 / z.size), spec.alpha)
    return float(gold_value + weight * uniform_value)


def bregman_information(q, r, epsilon, alpha):
    """Jensen gap of the negentropy at the mixture ``(1 - epsilon) * q + epsilon * r``.

    Examples
    --------
    >>> round(bregman_information([1.0, 0.0], [0.5, 0.5], 0.5, 2.0), 12)
    0.0625
    """
    q, r, alpha = check_distribution(_probabilities(q)), check_distribution(_probabilities(r), 'r'), check_alpha(alpha)
    if q.size != r.size:
        raise ValueError(f'Distributions should have the same size. Got {q.size} and {r.size}.')
    if not 0.0 <= epsilon <= 1.0:
        raise ValueError(f'Parameter `epsilon` should be in the [0.0, 1.0] interval. Got {epsilon}.')
    mixture = (1.0 - epsilon) * q + epsilon * r
    return -_negentropy(mixture, alpha) + (1.0 - epsilon) * _negentropy(q, alpha) + epsilon * _negentropy(r, alpha)


def loss_curve(differences, gold, spec):
    """Smoothed loss of two-label scores ``[0, s]`` along score differences ``s``."""
    differences = check_logits(differences)
    return np.array([smoothed_loss([0.0, s], gold, spec).value for s in differences])
