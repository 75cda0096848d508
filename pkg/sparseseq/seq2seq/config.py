"""
Configuration of the experiment runs.
"""

# License: BSD 3 clause

from numbers import Integral, Real

from ..exceptions import ConfigError
from ..externals import check_alpha
from . import TASKS

CONFIG = {
    'task': 'copy',
    'data_size': 625,
    'train_path': None,
    'dev_path': None,
    'test_path': None,
    'alpha': 1.5,
    'epsilon': 0.0,
    'smoothing': 'uniform',
    'embedding_dim': 32,
    'hidden_dim': 64,
    'context_size': 3,
    'init_scale': 0.1,
    'lr': 0.01,
    'batch_size': 16,
    'max_epochs': 30,
    'patience': 5,
    'seed': 0,
    'beam_width': 5,
    'max_len': None,
    'length_penalty': 0.0,
    'cat_got_tongue': True,
    'support_density': True,
    'calibration': True,
    'calibration_bins': 10,
    'exact_search': False,
    'mass_floor': 0.01,
    'node_budget': 100000,
    'n_jobs': None
}

POSITIVE_INTEGERS = ('data_size', 'embedding_dim', 'hidden_dim', 'context_size', 'batch_size', 'max_epochs', 'beam_width', 'calibration_bins', 'node_budget')
TOGGLES = ('cat_got_tongue', 'support_density', 'calibration', 'exact_search')
PATHS = ('train_path', 'dev_path', 'test_path')


def _is_integer(value):
    return isinstance(value, Integral) and not isinstance(value, bool)


def _is_real(value):
    return isinstance(value, Real) and not isinstance(value, bool)


def check_config(config=None):
    """Merge a partial configuration over the defaults and check every field.

    Parameters
    ----------
    config : dict or None, default=None
        Fields overriding the defaults of ``CONFIG``.

    Returns
    -------
    config : dict
        A new, complete configuration.

    Examples
    --------
    >>> check_config({'alpha': 2})['alpha']
    2.0
    """
    config = dict(config or {})
    unknown = sorted(set(config).difference(CONFIG))
    if unknown:
        raise ConfigError(f'Unknown configuration keys {", ".join(unknown)}.')
    checked = {**CONFIG, **config}

    # Task and data
    if checked['task'] not in TASKS:
        raise ConfigError(f'Parameter `task` should be one of {", ".join(TASKS)}. Got {checked["task"]!r}.')
    for name in PATHS:
        if checked[name] is not None and not isinstance(checked[name], str):
            raise ConfigError(f'Parameter `{name}` should be a path or None. Got {checked[name]!r}.')

    # Loss
    try:
        checked['alpha'] = check_alpha(checked['alpha'])
    except (TypeError, ValueError) as error:
        raise ConfigError(str(error)) from None
    if not _is_real(checked['epsilon']) or not 0.0 <= checked['epsilon'] <= 1.0:
        raise ConfigError(f'Parameter `epsilon` should be in the [0.0, 1.0] interval. Got {checked["epsilon"]!r}.')
    checked['epsilon'] = float(checked['epsilon'])
    if checked['smoothing'] not in ('uniform', 'unigram'):
        raise ConfigError(f'Parameter `smoothing` should be either uniform or unigram. Got {checked["smoothing"]!r}.')

    # Sizes
    for name in POSITIVE_INTEGERS:
        if not _is_integer(checked[name]) or checked[name] < 1:
            raise ConfigError(f'Parameter `{name}` should be a positive integer. Got {checked[name]!r}.')
    if checked['embedding_dim'] % 2:
        raise ConfigError(f'Parameter `embedding_dim` should be even. Got {checked["embedding_dim"]}.')
    if not _is_integer(checked['patience']) or checked['patience'] < 0:
        raise ConfigError(f'Parameter `patience` should be a nonnegative integer. Got {checked["patience"]!r}.')
    if checked['max_len'] is not None and (not _is_integer(checked['max_len']) or checked['max_len'] < 1):
        raise ConfigError(f'Parameter `max_len` should be a positive integer or None. Got {checked["max_len"]!r}.')
    if checked['n_jobs'] is not None and not _is_integer(checked['n_jobs']):
        raise ConfigError(f'Parameter `n_jobs` should be an integer or None. Got {checked["n_jobs"]!r}.')

    # Optimization
    for name in ('lr', 'init_scale'):
        if not _is_real(checked[name]) or checked[name] <= 0.0:
            raise ConfigError(f'Parameter `{name}` should be a positive number. Got {checked[name]!r}.')
        checked[name] = float(checked[name])
    if not _is_real(checked['length_penalty']) or checked['length_penalty'] < 0.0:
        raise ConfigError(f'Parameter `length_penalty` should be a nonnegative number. Got {checked["length_penalty"]!r}.')
    checked['length_penalty'] = float(checked['length_penalty'])
    if not _is_real(checked['mass_floor']) or not 0.0 <= checked['mass_floor'] < 1.0:
        raise ConfigError(f'Parameter `mass_floor` should be in the [0.0, 1.0) interval. Got {checked["mass_floor"]!r}.')
    checked['mass_floor'] = float(checked['mass_floor'])
    if not _is_integer(checked['seed']) or checked['seed'] < 0:
        raise ConfigError(f'Parameter `seed` should be a nonnegative integer. Got {checked["seed"]!r}.')

    # Analyses
    for name in TOGGLES:
        if not isinstance(checked[name], bool):
            raise ConfigError(f'Parameter `{name}` should be a boolean. Got {checked[name]!r}.')

    return checked
