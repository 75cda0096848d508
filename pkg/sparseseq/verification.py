"""
Includes the randomized property suites of the transformations and
the losses, run together by the ``verify`` command.
"""

# License: BSD 3 clause

import logging

import numpy as np
import pandas as pd
from joblib import Parallel, delayed
from scipy.special import log_softmax
from sklearn.model_selection import ParameterGrid
from sklearn.utils import check_random_state
from tqdm import tqdm

from .entmax import _entmax15, _entmax_bisect, _sparsemax, _transform, tsallis_probabilities
from .externals import check_random_states
from .losses import (
    SmoothingSpec, TargetDistribution, bregman_information, fy_loss, smoothed_loss,
    smoothed_loss_via_identity, uniform_regularizer_form
)

logger = logging.getLogger(__name__)

ALPHAS = (1.0, 1.3, 1.5, 2.0, 4.0)
LOSS_GRID = ParameterGrid({'alpha': [1.0, 1.5, 2.0], 'epsilon': [0.0, 0.01, 0.1]})
FD_STEP = 1e-4


def _logits(random_state, min_dim=2, max_dim=64, scale=10.0):
    return random_state.uniform(-scale, scale, size=random_state.randint(min_dim, max_dim + 1))


def _simplex_point(random_state, size):
    return random_state.dirichlet(np.ones(size))


def _loss_draw(random_state, trial):
    params = LOSS_GRID[trial % len(LOSS_GRID)]
    z = _logits(random_state, max_dim=16)
    return z, int(random_state.randint(z.size)), SmoothingSpec(params['alpha'], params['epsilon'])


def check_simplex(random_state, trials, threshold_shift):
    errors = []
    for _ in range(trials):
        z = _logits(random_state)
        for alpha in ALPHAS:
            p, _ = _transform(z, alpha)
            errors.append(max(abs(p.sum() - 1.0), -min(p.min(), 0.0)))
    return max(errors)


def check_threshold(random_state, trials, threshold_shift):
    """Probabilities reconstructed from the reported threshold."""
    errors = []
    for _ in range(trials):
        z = _logits(random_state)
        for alpha in ALPHAS:
            p, threshold = _transform(z, alpha)
            errors.append(np.abs(tsallis_probabilities(z, threshold + threshold_shift, alpha) - p).max())
    return max(errors)


def check_translation(random_state, trials, threshold_shift):
    errors = []
    for _ in range(trials):
        z, shift = _logits(random_state), random_state.uniform(-100.0, 100.0)
        for alpha in ALPHAS:
            errors.append(np.abs(_transform(z + shift, alpha)[0] - _transform(z, alpha)[0]).max())
    return max(errors)


def check_permutation(random_state, trials, threshold_shift):
    errors = []
    for _ in range(trials):
        z = _logits(random_state)
        permutation = random_state.permutation(z.size)
        for alpha in ALPHAS:
            errors.append(np.abs(_transform(z[permutation], alpha)[0] - _transform(z, alpha)[0][permutation]).max())
    return max(errors)


def check_closed_form(random_state, trials, threshold_shift):
    """Sort-based sparsemax and 1.5-entmax against bisection."""
    errors = []
    for _ in range(trials):
        z = _logits(random_state)
        errors.append(np.abs(_sparsemax(z)[0] - _entmax_bisect(z, 2.0)[0]).max())
        errors.append(np.abs(_entmax15(z)[0] - _entmax_bisect(z, 1.5)[0]).max())
    return max(errors)


def check_sparsity(random_state, trials, threshold_shift):
    """Fraction of dominated score vectors without exact zeros."""
    failures = 0
    for _ in range(trials):
        z = _logits(random_state)
        top = random_state.randint(z.size)
        for alpha in ALPHAS[1:]:
            dominated = z.copy()
            dominated[top] = np.delete(z, top).max() + max(z.size, 2.0 / (alpha - 1.0))
            p, _ = _transform(dominated, alpha)
            failures += np.count_nonzero(p == 0.0) == 0
    return failures / trials


def check_softmax_density(random_state, trials, threshold_shift):
    failures = 0
    for _ in range(trials):
        z = _logits(random_state)
        failures += np.count_nonzero(_transform(z, 1.0)[0] > 0.0) != z.size
    return failures / trials


def check_argmax(random_state, trials, threshold_shift):
    failures = 0
    for _ in range(trials):
        z = _logits(random_state)
        for alpha in ALPHAS:
            p, _ = _transform(z, alpha)
            failures += p[np.argmax(z)] != p.max()
    return failures / trials


def check_support_monotonicity(random_state, trials, threshold_shift):
    """Largest increase of the mean support size between consecutive alphas."""
    sizes = np.zeros((trials, len(ALPHAS)))
    for trial in range(trials):
        z = _logits(random_state)
        sizes[trial] = [np.count_nonzero(_transform(z, alpha)[0] > 0.0) for alpha in ALPHAS]
    return max(float(np.diff(sizes.mean(axis=0)).max()), 0.0)


def _away_from_kinks(z, alpha, margin):
    if alpha == 1.0:
        return True
    _, threshold = _transform(z, alpha)
    return np.abs((alpha - 1.0) * z - threshold).min() > margin


def _finite_differences(loss, z):
    steps = FD_STEP * np.eye(z.size)
    return np.array([(loss(z + step) - loss(z - step)) / (2 * FD_STEP) for step in steps])


def _relative_error(gradient, finite_differences):
    return (np.abs(gradient - finite_differences) / np.maximum(np.abs(finite_differences), 1e-2)).max()


def check_gradients(random_state, trials, threshold_shift):
    """Relative error of the smoothed gradient against central finite differences.

    Draws with a score close to the support boundary, where the gradient
    is not differentiable, are redrawn.
    """
    errors = []
    for trial in range(trials):
        z, gold, spec = _loss_draw(random_state, trial)
        while not _away_from_kinks(z, spec.alpha, 1e3 * FD_STEP):
            z, gold, spec = _loss_draw(random_state, trial)
        gradient = smoothed_loss(z, gold, spec).gradient
        errors.append(_relative_error(gradient, _finite_differences(lambda x: smoothed_loss(x, gold, spec).value, z)))
    return max(errors)


def check_general_gradients(random_state, trials, threshold_shift):
    """Relative error of the gradients with a general target and a general smoothing distribution."""
    errors = []
    for trial in range(trials):
        z, gold, spec = _loss_draw(random_state, trial)
        while not _away_from_kinks(z, spec.alpha, 1e3 * FD_STEP):
            z, gold, spec = _loss_draw(random_state, trial)
        q = _simplex_point(random_state, z.size)
        gradient = fy_loss(z, q, spec.alpha).gradient
        errors.append(_relative_error(gradient, _finite_differences(lambda x: fy_loss(x, q, spec.alpha).value, z)))
        spec = SmoothingSpec(spec.alpha, spec.epsilon, TargetDistribution.general(_simplex_point(random_state, z.size)))
        gradient = smoothed_loss(z, gold, spec).gradient
        errors.append(_relative_error(gradient, _finite_differences(lambda x: smoothed_loss(x, gold, spec).value, z)))
    return max(errors)


def check_nonnegativity(random_state, trials, threshold_shift):
    violations = []
    for trial in range(trials):
        z, gold, spec = _loss_draw(random_state, trial)
        q = _simplex_point(random_state, z.size)
        violations += [-fy_loss(z, q, spec.alpha).value, -smoothed_loss(z, gold, spec).value]
    return max(max(violations), 0.0)


def check_identities(random_state, trials, threshold_shift):
    """Smoothed loss against its linear regularizer and uniform regularizer forms."""
    errors = []
    for trial in range(trials):
        z, gold, spec = _loss_draw(random_state, trial)
        value = smoothed_loss(z, gold, spec).value
        one_hot, uniform = TargetDistribution.one_hot(gold, z.size), TargetDistribution.uniform(z.size)
        regularized = (1.0 - spec.epsilon) * uniform_regularizer_form(z, gold, spec)
        regularized -= bregman_information(one_hot, uniform, spec.epsilon, spec.alpha)
        errors += [abs(value - smoothed_loss_via_identity(z, gold, spec)), abs(value - regularized)]
    return max(errors)


def check_bregman(random_state, trials, threshold_shift):
    violations = []
    for _ in range(trials):
        size = random_state.randint(2, 65)
        q, r = _simplex_point(random_state, size), _simplex_point(random_state, size)
        for alpha in ALPHAS:
            violations.append(-bregman_information(q, r, random_state.uniform(), alpha))
    return max(max(violations), 0.0)


def check_general_smoothing(random_state, trials, threshold_shift):
    """Smoothed loss with a nonuniform smoothing distribution against its decomposition."""
    errors = []
    for trial in range(trials):
        z, gold, spec = _loss_draw(random_state, trial)
        r = TargetDistribution.general(_simplex_point(random_state, z.size))
        spec = SmoothingSpec(spec.alpha, spec.epsilon, r)
        one_hot = TargetDistribution.one_hot(gold, z.size)
        decomposition = (1.0 - spec.epsilon) * fy_loss(z, one_hot, spec.alpha).value + spec.epsilon * fy_loss(z, r, spec.alpha).value
        decomposition -= bregman_information(one_hot, r, spec.epsilon, spec.alpha)
        errors.append(abs(smoothed_loss(z, gold, spec).value - decomposition))
    return max(errors)


def check_cross_entropy(random_state, trials, threshold_shift):
    errors = []
    for _ in range(trials):
        z = _logits(random_state)
        gold = random_state.randint(z.size)
        errors.append(abs(fy_loss(z, TargetDistribution.one_hot(gold, z.size), 1.0).value + log_softmax(z)[gold]))
    return max(errors)


def check_uniform_bound(random_state, trials, threshold_shift):
    """Unsmoothed loss plus the linear regularizer, which is nonnegative."""
    violations = []
    for trial in range(trials):
        z, gold, spec = _loss_draw(random_state, trial)
        value = fy_loss(z, TargetDistribution.one_hot(gold, z.size), spec.alpha).value
        violations.append(-(value + spec.epsilon * (z[gold] - z.mean())))
    return max(max(violations), 0.0)


def check_zero_loss(random_state, trials, threshold_shift):
    """Loss at the transformation of the scores."""
    errors = []
    for _ in range(trials):
        z = _logits(random_state)
        for alpha in ALPHAS:
            errors.append(abs(fy_loss(z, _transform(z, alpha)[0], alpha).value))
    return max(errors)


def check_zero_loss_targets(random_state, trials, threshold_shift):
    """Distance to the transformation of the targets with a vanishing loss.

    Targets are the transformation itself, its mixtures with a random point
    of the simplex and, for sparse transformations, a dominating one-hot
    label. Only alphas up to 2 are drawn, whose losses bound the squared
    distance from below.
    """
    distances = [0.0]
    for _ in range(trials):
        z = _logits(random_state)
        top = random_state.randint(z.size)
        for alpha in ALPHAS[:4]:
            p, _ = _transform(z, alpha)
            weight = random_state.uniform(0.05, 1.0)
            targets = [(z, p), (z, (1.0 - weight) * p + weight * _simplex_point(random_state, z.size))]
            if alpha > 1.0:
                dominated = z.copy()
                dominated[top] = np.delete(z, top).max() + 2.0 / (alpha - 1.0) + 1.0
                targets.append((dominated, np.eye(z.size)[top]))
            for scores, q in targets:
                if fy_loss(scores, q, alpha).value <= 1e-8:
                    distances.append(np.abs(_transform(scores, alpha)[0] - q).max())
    return max(distances)


SUITES = {
    'simplex': (check_simplex, 1e-9),
    'threshold': (check_threshold, 1e-9),
    'translation': (check_translation, 1e-9),
    'permutation': (check_permutation, 1e-12),
    'closed_form': (check_closed_form, 1e-6),
    'sparsity': (check_sparsity, 0.0),
    'softmax_density': (check_softmax_density, 0.0),
    'argmax': (check_argmax, 0.0),
    'support_monotonicity': (check_support_monotonicity, 0.0),
    'gradients': (check_gradients, 1e-5),
    'general_gradients': (check_general_gradients, 1e-5),
    'nonnegativity': (check_nonnegativity, 1e-12),
    'identities': (check_identities, 1e-9),
    'bregman': (check_bregman, 1e-12),
    'general_smoothing': (check_general_smoothing, 1e-9),
    'cross_entropy': (check_cross_entropy, 1e-10),
    'uniform_bound': (check_uniform_bound, 1e-10),
    'zero_loss': (check_zero_loss, 1e-8),
    'zero_loss_targets': (check_zero_loss_targets, 1e-4)
}


def run_suite(name, random_state, trials, threshold_shift=0.0):
    """Run a single suite and return its maximum observed error."""
    check, _ = SUITES[name]
    return float(check(check_random_state(random_state), trials, threshold_shift))


def run_verify(seed=0, trials=1000, threshold_shift=0.0, n_jobs=None):
    """Run every property suite.

    Parameters
    ----------
    seed : int, default=0
        Seed of the per-suite random states.

    trials : int, default=1000
        Number of random draws per suite.

    threshold_shift : float, default=0.0
        Offset added to the reported thresholds before reconstructing the
        probabilities. A nonzero value makes the threshold suite fail.

    n_jobs : int or None, default=None
        Number of jobs running the suites.

    Returns
    -------
    results : DataFrame
        The maximum observed error, the tolerance and the outcome per suite.
    """
    if trials < 1:
        raise ValueError(f'Parameter `trials` should be a positive integer. Got {trials}.')
    random_states = check_random_states(seed, len(SUITES))
    errors = Parallel(n_jobs=n_jobs)(
        delayed(run_suite)(name, random_state, trials, threshold_shift)
        for name, random_state in tqdm(list(zip(SUITES, random_states)), desc='Suites', disable=None)
    )
    results = pd.DataFrame({
        'suite': list(SUITES),
        'trials': trials,
        'max_error': errors,
        'tolerance': [tolerance for _, tolerance in SUITES.values()]
    })
    results['passed'] = results['max_error'] <= results['tolerance']
    for row in results.itertuples():
        log = logger.info if row.passed else logger.error
        log('Suite %s: max error %.3e, tolerance %.1e', row.suite, row.max_error, row.tolerance)
    return results
