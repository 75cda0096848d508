"""
Includes the desk-scale conditional sequence model, its training
with Fenchel-Young label smoothing losses and the checkpoint format.
"""

# License: BSD 3 clause

import logging
import struct
from ast import literal_eval
from copy import deepcopy
from dataclasses import dataclass, field

import numpy as np
import pandas as pd
from joblib import Parallel, delayed
from sklearn.base import BaseEstimator
from sklearn.utils import check_random_state
from tqdm import tqdm

from . import PAD_INDEX, BOS_INDEX, EOS_INDEX
from .data import Vocabulary, check_dataset, target_unigram
from .decoding import decode_dataset
from .metrics import wer, per, mean_levenshtein
from ..entmax import SimplexDistribution, _transform
from ..exceptions import CheckpointError, UnknownToken
from ..externals import check_alpha
from ..losses import SmoothingSpec, TargetDistribution, _fy_loss, mixed_target

logger = logging.getLogger(__name__)

PARAMETER_NAMES = (
    'source_embeddings', 'target_embeddings', 'attention_query',
    'hidden_weights', 'hidden_bias', 'output_weights', 'output_bias'
)
HYPERPARAMETER_NAMES = ('embedding_dim', 'hidden_dim', 'context_size', 'alpha', 'epsilon', 'smoothing', 'init_scale', 'random_state')
MAGIC = b'FYS1'
ADAM_BETAS = (0.9, 0.999)
ADAM_EPS = 1e-8


def position_encodings(positions, dim):
    """Fixed sinusoidal encodings with frequencies halving from pi."""
    frequencies = np.pi * 0.5 ** np.arange(dim // 2)
    angles = np.multiply.outer(np.asarray(positions, dtype=np.float64), frequencies)
    encodings = np.zeros(angles.shape[:-1] + (dim,))
    encodings[..., 0:2 * (dim // 2):2] = np.sin(angles)
    encodings[..., 1:2 * (dim // 2):2] = np.cos(angles)
    return encodings


class ToyModel(BaseEstimator):
    """Conditional sequence model with attention over the source.

    The scores of the next target token are computed from the embeddings of
    the last ``context_size`` target tokens and an attention-weighted mean of
    the source representations, followed by one tanh hidden layer and an
    output projection. The source is wrapped with beginning and end of
    sequence sentinels and its representations carry fixed position
    encodings, counted from the start in the first half of the dimensions
    and from the end in the second half. The attention query adds the
    encoding of the current target position to the last target embedding.

    Parameters
    ----------
    vocabulary : Vocabulary
        Shared source and target vocabulary.

    embedding_dim : int, default=32
        Dimension of the embeddings.

    hidden_dim : int, default=64
        Dimension of the hidden layer.

    context_size : int, default=3
        Number of previous target tokens in the context.

    alpha : float, default=1.5
        The entmax parameter of the output transformation and the loss.

    epsilon : float, default=0.0
        Label smoothing weight.

    smoothing : str, default='uniform'
        Smoothing distribution, ``uniform`` or ``unigram`` frequencies of the
        training targets.

    init_scale : float, default=0.1
        Parameters are initialized uniformly in ``[-init_scale, init_scale]``.

    random_state : int, RandomState instance or None, default=None
        Controls the initialization.
    """

    def __init__(self, vocabulary, embedding_dim=32, hidden_dim=64, context_size=3, alpha=1.5, epsilon=0.0,
                 smoothing='uniform', init_scale=0.1, random_state=None):
        self.vocabulary = vocabulary
        self.embedding_dim = embedding_dim
        self.hidden_dim = hidden_dim
        self.context_size = context_size
        self.alpha = alpha
        self.epsilon = epsilon
        self.smoothing = smoothing
        self.init_scale = init_scale
        self.random_state = random_state

    def initialize(self):
        """Draw the parameters."""
        check_alpha(self.alpha)
        if self.context_size < 1:
            raise ValueError(f'Parameter `context_size` should be a positive integer. Got {self.context_size}.')
        if self.embedding_dim < 2 or self.embedding_dim % 2:
            raise ValueError(f'Parameter `embedding_dim` should be an even integer not less than 2. Got {self.embedding_dim}.')
        random_state = check_random_state(self.random_state)
        n_tokens, d, h = len(self.vocabulary), self.embedding_dim, self.hidden_dim
        shapes = {
            'source_embeddings': (n_tokens, d),
            'target_embeddings': (n_tokens, d),
            'attention_query': (d, d),
            'hidden_weights': (h, (self.context_size + 1) * d),
            'hidden_bias': (h,),
            'output_weights': (n_tokens, h),
            'output_bias': (n_tokens,)
        }
        self.params_ = {name: random_state.uniform(-self.init_scale, self.init_scale, size=shapes[name]) for name in PARAMETER_NAMES}
        self.smoothing_distribution_ = None
        return self

    def smoothing_spec(self):
        return SmoothingSpec(self.alpha, self.epsilon, self.smoothing_distribution_)

    def fit_smoothing(self, pairs):
        """Set the smoothing distribution from the training targets."""
        if self.smoothing == 'unigram':
            self.smoothing_distribution_ = TargetDistribution.general(target_unigram(pairs, len(self.vocabulary)))
        elif self.smoothing == 'uniform':
            self.smoothing_distribution_ = None
        else:
            raise ValueError(f'Parameter `smoothing` should be either uniform or unigram. Got {self.smoothing!r}.')
        return self

    def predict_distribution(self, source, prefix):
        """Output distribution of the next target token."""
        return SimplexDistribution(*_transform(forward_step(self, source, prefix), self.alpha))


@dataclass
class TrainState:
    """Adam moments, step counter and early stopping bookkeeping."""

    first_moments: dict
    second_moments: dict
    step: int = 0
    best_metric: float = np.inf
    epochs_since_improvement: int = 0

    @classmethod
    def from_model(cls, model):
        return cls({name: np.zeros_like(value) for name, value in model.params_.items()},
                   {name: np.zeros_like(value) for name, value in model.params_.items()})


@dataclass
class _Steps:
    """Decoding steps of a batch, padded to a common source length."""

    sources: np.ndarray
    source_mask: np.ndarray
    contexts: np.ndarray
    positions: np.ndarray
    gold: np.ndarray = field(default=None)


def _check_indices(model, indices):
    n_tokens = len(model.vocabulary)
    for index in indices:
        if not 0 <= index < n_tokens:
            raise UnknownToken(f'Index {index} is outside of a vocabulary of size {n_tokens}.')


def _context(prefix, context_size):
    padded = [BOS_INDEX] * context_size + list(prefix)
    return padded[len(padded) - context_size:]


def _make_steps(model, examples):
    """Arrange (source, prefix, gold) triples as padded arrays."""
    sources = [[BOS_INDEX] + list(source) + [EOS_INDEX] for source, _, _ in examples]
    width = max(len(source) for source in sources)
    padded_sources = np.full((len(sources), width), PAD_INDEX)
    for row, source in enumerate(sources):
        padded_sources[row, :len(source)] = source
    return _Steps(
        sources=padded_sources,
        source_mask=padded_sources != PAD_INDEX,
        contexts=np.array([_context(prefix, model.context_size) for _, prefix, _ in examples]).reshape(len(examples), model.context_size),
        positions=np.array([len(prefix) for _, prefix, _ in examples]),
        gold=np.array([gold for _, _, gold in examples])
    )


def _source_positions(mask, dim):
    """Encodings counted from the start (first half) and from the end (second half) of the unwrapped source."""
    lengths = mask.sum(axis=1, keepdims=True) - 2
    forward = np.arange(mask.shape[1])[np.newaxis, :] - 1
    backward = lengths - 1 - forward
    half = dim // 2
    return np.concatenate([position_encodings(forward * np.ones_like(lengths), half), position_encodings(backward, half)], axis=-1)


def _query_positions(positions, dim):
    half = dim // 2
    encodings = position_encodings(positions, half)
    return np.concatenate([encodings, encodings], axis=-1)


def _forward(params, steps, dim):
    """Compute the scores of a batch of steps and the intermediate values."""
    source_embeddings = params['source_embeddings'][steps.sources] + _source_positions(steps.source_mask, dim)
    last_embeddings = params['target_embeddings'][steps.contexts[:, -1]]
    query_inputs = last_embeddings + _query_positions(steps.positions, dim)
    queries = query_inputs @ params['attention_query'].T

    # Attention over the unpadded source
    scores = np.einsum('nmd,nd->nm', source_embeddings, queries)
    scores = np.where(steps.source_mask, scores, -np.inf)
    weights = np.exp(scores - scores.max(axis=1, keepdims=True))
    weights /= weights.sum(axis=1, keepdims=True)
    attended = np.einsum('nm,nmd->nd', weights, source_embeddings)

    # Hidden layer and output projection
    inputs = np.concatenate([params['target_embeddings'][steps.contexts].reshape(len(steps.contexts), -1), attended], axis=1)
    hidden = np.tanh(inputs @ params['hidden_weights'].T + params['hidden_bias'])
    logits = hidden @ params['output_weights'].T + params['output_bias']
    cache = {
        'source_embeddings': source_embeddings, 'query_inputs': query_inputs, 'queries': queries,
        'weights': weights, 'inputs': inputs, 'hidden': hidden
    }
    return logits, cache


def _backward(params, steps, cache, logits_grad, dim):
    """Propagate the gradient of the scores to the parameters."""
    grads = {name: np.zeros_like(value) for name, value in params.items()}

    # Output projection and hidden layer
    grads['output_weights'] = logits_grad.T @ cache['hidden']
    grads['output_bias'] = logits_grad.sum(axis=0)
    hidden_grad = (logits_grad @ params['output_weights']) * (1.0 - cache['hidden'] ** 2)
    grads['hidden_weights'] = hidden_grad.T @ cache['inputs']
    grads['hidden_bias'] = hidden_grad.sum(axis=0)
    inputs_grad = hidden_grad @ params['hidden_weights']

    # Context embeddings
    context_size = steps.contexts.shape[1]
    context_grad = inputs_grad[:, :context_size * dim].reshape(-1, context_size, dim)
    np.add.at(grads['target_embeddings'], steps.contexts, context_grad)

    # Attention
    attended_grad = inputs_grad[:, context_size * dim:]
    weights, source_embeddings = cache['weights'], cache['source_embeddings']
    source_grad = weights[:, :, np.newaxis] * attended_grad[:, np.newaxis, :]
    weights_grad = np.einsum('nmd,nd->nm', source_embeddings, attended_grad)
    scores_grad = weights * (weights_grad - (weights * weights_grad).sum(axis=1, keepdims=True))
    source_grad += scores_grad[:, :, np.newaxis] * cache['queries'][:, np.newaxis, :]
    queries_grad = np.einsum('nm,nmd->nd', scores_grad, source_embeddings)
    grads['attention_query'] = queries_grad.T @ cache['query_inputs']
    np.add.at(grads['target_embeddings'], steps.contexts[:, -1], queries_grad @ params['attention_query'])
    np.add.at(grads['source_embeddings'], steps.sources, source_grad * steps.source_mask[:, :, np.newaxis])

    return grads


def forward_step(model, source, prefix):
    """Scores of the next target token given the source and a target prefix.

    Parameters
    ----------
    model : ToyModel
        An initialized model.

    source : sequence of int
        Source token indices.

    prefix : sequence of int
        Previous target token indices, possibly empty.

    Returns
    -------
    logits : ndarray of shape (n_tokens,)
    """
    _check_indices(model, source)
    _check_indices(model, prefix)
    steps = _make_steps(model, [(source, prefix, EOS_INDEX)])
    logits, _ = _forward(model.params_, steps, model.embedding_dim)
    return logits[0]


def forward_batch(model, sources, prefixes):
    """Scores of a batch of steps, sources padded to a common length."""
    for source, prefix in zip(sources, prefixes):
        _check_indices(model, source)
        _check_indices(model, prefix)
    steps = _make_steps(model, [(source, prefix, EOS_INDEX) for source, prefix in zip(sources, prefixes)])
    logits, _ = _forward(model.params_, steps, model.embedding_dim)
    return logits


def _pair_steps(pairs):
    return [(pair.source, pair.target[:position], gold) for pair in pairs for position, gold in enumerate(pair.target)]


def forced_decode(model, pair):
    """Output distributions at every gold step, feeding the gold prefix."""
    steps = _make_steps(model, _pair_steps([pair]))
    logits, _ = _forward(model.params_, steps, model.embedding_dim)
    return [SimplexDistribution(*_transform(row, model.alpha)) for row in logits]


def sequence_log_prob(model, pair):
    """Log-probability of the target given the source, minus infinity when a step has zero probability."""
    log_prob = 0.0
    for distribution, gold in zip(forced_decode(model, pair), pair.target):
        probability = distribution.probabilities[gold]
        if probability == 0.0:
            return -np.inf
        log_prob += np.log(probability)
    return float(log_prob)


def _chunk_loss_and_gradients(params, model, spec, chunk):
    steps = _make_steps(model, chunk)
    logits, cache = _forward(params, steps, model.embedding_dim)
    n_tokens = logits.shape[1]
    losses, logits_grad = np.zeros(len(logits)), np.zeros_like(logits)
    for row, (z, gold) in enumerate(zip(logits, steps.gold)):
        losses[row], logits_grad[row] = _fy_loss(z, mixed_target(int(gold), spec, n_tokens), spec.alpha)
    return losses.sum(), _backward(params, steps, cache, logits_grad, model.embedding_dim)


def batch_loss_and_gradients(model, batch, n_jobs=None):
    """Mean per-token smoothed loss of a batch and its parameter gradients.

    Parameters
    ----------
    model : ToyModel
        An initialized model.

    batch : list of SequencePair
        Nonempty batch.

    n_jobs : int or None, default=None
        Number of jobs computing the per-example contributions, which are
        summed in batch order.

    Returns
    -------
    loss : float

    gradients : dict
        Maps parameter names to gradients shaped like the parameters.
    """
    batch = check_dataset(batch)
    spec = model.smoothing_spec()
    steps = _pair_steps(batch)
    if n_jobs in (None, 1):
        total, grads = _chunk_loss_and_gradients(model.params_, model, spec, steps)
    else:
        chunks = [_pair_steps([pair]) for pair in batch]
        results = Parallel(n_jobs=n_jobs)(delayed(_chunk_loss_and_gradients)(model.params_, model, spec, chunk) for chunk in chunks)
        total = sum(loss for loss, _ in results)
        grads = {name: sum(chunk_grads[name] for _, chunk_grads in results) for name in model.params_}
    n_steps = len(steps)
    return float(total / n_steps), {name: grad / n_steps for name, grad in grads.items()}


def adam_step(state, model, gradients, lr):
    """Apply one bias-corrected Adam update in place."""
    beta1, beta2 = ADAM_BETAS
    state.step += 1
    for name, grad in gradients.items():
        state.first_moments[name] = beta1 * state.first_moments[name] + (1.0 - beta1) * grad
        state.second_moments[name] = beta2 * state.second_moments[name] + (1.0 - beta2) * grad ** 2
        first = state.first_moments[name] / (1.0 - beta1 ** state.step)
        second = state.second_moments[name] / (1.0 - beta2 ** state.step)
        model.params_[name] = model.params_[name] - lr * first / (np.sqrt(second) + ADAM_EPS)
    return model, state


def evaluate(model, pairs, beam_width=1, max_len=None, length_penalty=0.0, n_jobs=None):
    """Beam-decode pairs and return WER, PER and mean Levenshtein distance."""
    hypotheses = decode_dataset(model, pairs, beam_width, max_len, length_penalty, n_jobs)
    references = [list(pair.target[:-1]) for pair in pairs]
    return {'wer': wer(hypotheses, references), 'per': per(hypotheses, references), 'levenshtein': mean_levenshtein(hypotheses, references)}


def train(
    model, train_pairs, dev_pairs, lr=0.01, batch_size=16, max_epochs=30, patience=5, beam_width=1, max_len=None, length_penalty=0.0,
    random_state=None, n_jobs=None
):
    """Train with Adam and early stopping on the dev Levenshtein distance.

    The parameters of the epoch with the lowest mean dev Levenshtein distance
    are kept, the earlier epoch winning ties. Training stops once ``patience``
    epochs pass without improvement.

    Returns
    -------
    model : ToyModel
        The best checkpoint.

    log : DataFrame
        Training loss, dev WER, PER and Levenshtein distance per epoch.
    """
    train_pairs, dev_pairs = check_dataset(train_pairs), check_dataset(dev_pairs)
    random_state = check_random_state(random_state)
    if not hasattr(model, 'params_'):
        model.initialize()
    model.fit_smoothing(train_pairs)
    state = TrainState.from_model(model)
    best_params = deepcopy(model.params_)

    log = []
    for epoch in tqdm(range(1, max_epochs + 1), desc='Epochs', disable=None):

        # Update parameters
        order = random_state.permutation(len(train_pairs))
        losses = []
        for start in range(0, len(order), batch_size):
            batch = [train_pairs[index] for index in order[start:start + batch_size]]
            loss, gradients = batch_loss_and_gradients(model, batch, n_jobs)
            adam_step(state, model, gradients, lr)
            losses.append(loss)

        # Evaluate on dev set
        metrics = evaluate(model, dev_pairs, beam_width, max_len, length_penalty, n_jobs)
        log.append({'epoch': epoch, 'loss': float(np.mean(losses)), 'dev_wer': metrics['wer'], 'dev_per': metrics['per'], 'dev_levenshtein': metrics['levenshtein']})
        logger.info('Epoch %d: loss %.5f, dev WER %.2f, dev PER %.2f', epoch, log[-1]['loss'], metrics['wer'], metrics['per'])

        # Early stopping
        if metrics['levenshtein'] < state.best_metric:
            state.best_metric, state.epochs_since_improvement = metrics['levenshtein'], 0
            best_params = deepcopy(model.params_)
        else:
            state.epochs_since_improvement += 1
            if state.epochs_since_improvement > patience:
                logger.info('Early stopping after epoch %d', epoch)
                break

    model.params_ = best_params
    return model, pd.DataFrame(log, columns=['epoch', 'loss', 'dev_wer', 'dev_per', 'dev_levenshtein'])


def _write_string(file, value):
    encoded = value.encode('utf-8')
    file.write(struct.pack('<I', len(encoded)))
    file.write(encoded)


def _read(file, fmt):
    size = struct.calcsize(fmt)
    data = file.read(size)
    if len(data) != size:
        raise CheckpointError('Checkpoint file is truncated.')
    return struct.unpack(fmt, data)


def _read_string(file):
    length, = _read(file, '<I')
    data = file.read(length)
    if len(data) != length:
        raise CheckpointError('Checkpoint file is truncated.')
    return data.decode('utf-8')


def _hyperparameter_repr(value):
    if isinstance(value, np.generic):
        value = value.item()
    if not isinstance(value, (int, float, str, type(None))):
        value = None
    return repr(value)


def save_checkpoint(model, path):
    """Write the model in the versioned binary checkpoint format.

    The format is the magic bytes ``FYS1``, the vocabulary as a token count
    and length-prefixed UTF-8 tokens, the hyperparameters as length-prefixed
    name and value strings, then for every parameter its number of dimensions,
    its dimensions and its values as row-major little-endian float64.
    """
    hyperparams = model.get_params(deep=False)
    with open(path, 'wb') as file:
        file.write(MAGIC)
        file.write(struct.pack('<I', len(model.vocabulary)))
        for token in model.vocabulary.tokens:
            _write_string(file, token)
        file.write(struct.pack('<I', len(HYPERPARAMETER_NAMES)))
        for name in HYPERPARAMETER_NAMES:
            _write_string(file, name)
            _write_string(file, _hyperparameter_repr(hyperparams[name]))
        smoothing = model.smoothing_distribution_
        params = dict(model.params_, smoothing_distribution=np.zeros(0) if smoothing is None else smoothing.probabilities)
        for name in PARAMETER_NAMES + ('smoothing_distribution',):
            value = np.ascontiguousarray(params[name], dtype='<f8')
            file.write(struct.pack('<I', value.ndim))
            file.write(struct.pack(f'<{value.ndim}I', *value.shape))
            file.write(value.tobytes(order='C'))
    logger.info('Saved checkpoint to %s', path)


def load_checkpoint(path):
    """Read a model written by ``save_checkpoint``."""
    with open(path, 'rb') as file:
        if file.read(len(MAGIC)) != MAGIC:
            raise CheckpointError(f'File {path} is not a checkpoint.')
        n_tokens, = _read(file, '<I')
        tokens = [_read_string(file) for _ in range(n_tokens)]
        vocabulary = Vocabulary()
        if tokens[:len(vocabulary)] != vocabulary.tokens:
            raise CheckpointError('Checkpoint vocabulary should start with the reserved tokens.')
        for token in tokens[len(vocabulary):]:
            vocabulary.add(token)
        n_hyperparams, = _read(file, '<I')
        hyperparams = {}
        for _ in range(n_hyperparams):
            name = _read_string(file)
            try:
                hyperparams[name] = literal_eval(_read_string(file))
            except (ValueError, SyntaxError):
                raise CheckpointError(f'Hyperparameter {name} of the checkpoint is malformed.') from None
        params = {}
        for name in PARAMETER_NAMES + ('smoothing_distribution',):
            ndim, = _read(file, '<I')
            shape = _read(file, f'<{ndim}I')
            size = int(np.prod(shape)) * 8
            data = file.read(size)
            if len(data) != size:
                raise CheckpointError('Checkpoint file is truncated.')
            params[name] = np.frombuffer(data, dtype='<f8').reshape(shape).astype(np.float64)
    smoothing = params.pop('smoothing_distribution')
    model = ToyModel(vocabulary, **hyperparams)
    model.params_ = params
    model.smoothing_distribution_ = TargetDistribution.general(smoothing) if smoothing.size else None
    return model
