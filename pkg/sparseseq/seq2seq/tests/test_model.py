"""
Test the model module.
"""

import numpy as np
import pandas as pd
import pytest

from sparseseq.exceptions import CheckpointError, UnknownToken
from sparseseq.seq2seq import EOS_INDEX
from sparseseq.seq2seq.data import SequencePair, Vocabulary
from sparseseq.seq2seq.model import (
    PARAMETER_NAMES,
    position_encodings,
    ToyModel,
    TrainState,
    forward_step,
    forward_batch,
    forced_decode,
    sequence_log_prob,
    batch_loss_and_gradients,
    adam_step,
    evaluate,
    train,
    save_checkpoint,
    load_checkpoint
)

VOCABULARY = Vocabulary(['a', 'b', 'c'])
PAIRS = [
    SequencePair((3, 4), (4, 3, EOS_INDEX)),
    SequencePair((5,), (5, EOS_INDEX)),
    SequencePair((3, 5, 4, 4), (4, 4, 5, 3, EOS_INDEX))
]


def create_model(**params):
    params = {'embedding_dim': 4, 'hidden_dim': 6, 'context_size': 2, 'init_scale': 0.5, 'random_state': 0, **params}
    return ToyModel(VOCABULARY, **params).initialize()


def test_position_encodings():
    """Test the sinusoidal encodings."""
    encodings = position_encodings([0, 1], 4)
    assert encodings.shape == (2, 4)
    np.testing.assert_allclose(encodings[0], [0.0, 1.0, 0.0, 1.0])
    np.testing.assert_allclose(encodings[1], [0.0, -1.0, 1.0, 0.0], atol=1e-12)


def test_initialize():
    """Test the parameters shapes."""
    model = create_model()
    assert set(model.params_) == set(PARAMETER_NAMES)
    assert model.params_['hidden_weights'].shape == (6, 12)
    assert model.params_['output_weights'].shape == (6, 6)
    assert all(np.abs(value).max() <= 0.5 for value in model.params_.values())
    np.testing.assert_array_equal(create_model().params_['attention_query'], model.params_['attention_query'])


@pytest.mark.parametrize('params', [{'context_size': 0}, {'embedding_dim': 5}, {'alpha': 0.5}])
def test_initialize_errors(params):
    """Test the hyperparameters validation."""
    with pytest.raises(ValueError):
        create_model(**params)


def test_get_params():
    """Test the hyperparameters of the estimator."""
    params = create_model(alpha=2.0).get_params()
    assert params['alpha'] == 2.0
    assert params['vocabulary'] is VOCABULARY


def test_forward_step():
    """Test the next token scores and distribution."""
    model = create_model()
    logits = forward_step(model, (3, 4), (4,))
    assert logits.shape == (6,)
    distribution = model.predict_distribution((3, 4), (4,))
    assert distribution.probabilities.sum() == pytest.approx(1.0)
    with pytest.raises(UnknownToken):
        forward_step(model, (3, 9), ())


def test_forward_step_golden():
    """Test the next token scores of hand-set parameters."""
    model = ToyModel(VOCABULARY, embedding_dim=2, hidden_dim=2, context_size=1)
    target_embeddings = np.zeros((6, 2))
    target_embeddings[1] = [1.0, 0.0]
    model.params_ = {
        'source_embeddings': np.array([[0.0, 0.0], [0.0, 0.0], [0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [0.0, 0.0]]),
        'target_embeddings': target_embeddings,
        'attention_query': np.array([[np.log(3.0), 0.0], [0.0, 0.0]]),
        'hidden_weights': np.array([[1.0, 0.0, 2.0, 0.0], [0.0, 0.0, 0.0, 6.0]]),
        'hidden_bias': np.array([0.0, -1.0]),
        'output_weights': np.array([[0.0, 0.0], [1.0, 0.0], [-1.0, 0.0], [2.0, 1.0], [0.0, 3.0], [0.5, 0.0]]),
        'output_bias': np.array([0.0, 0.0, 1.0, 0.0, -1.0, 0.0])
    }
    # Attention weights 1/6, 1/2, 1/6, 1/6 over the wrapped source give a hidden layer of (tanh 2, 0)
    hidden = np.tanh(2.0)
    expected = [0.0, hidden, 1.0 - hidden, 2.0 * hidden, -1.0, 0.5 * hidden]
    np.testing.assert_allclose(forward_step(model, (3, 4), ()), expected, rtol=1e-12, atol=1e-12)


def test_forward_batch_padding():
    """Test that padding does not change the scores of shorter sources."""
    model = create_model()
    sources, prefixes = [(3,), (3, 5, 4, 4, 5)], [(), (4, 4)]
    logits = forward_batch(model, sources, prefixes)
    for row, (source, prefix) in enumerate(zip(sources, prefixes)):
        np.testing.assert_allclose(logits[row], forward_step(model, source, prefix), rtol=1e-12, atol=1e-12)


def test_forced_decode():
    """Test the distributions at the gold steps."""
    model = create_model()
    distributions = forced_decode(model, PAIRS[0])
    assert len(distributions) == 3
    np.testing.assert_allclose(distributions[1].probabilities, model.predict_distribution((3, 4), (4,)).probabilities)
    expected = sum(np.log(distribution.probabilities[gold]) for distribution, gold in zip(distributions, PAIRS[0].target))
    assert sequence_log_prob(model, PAIRS[0]) == pytest.approx(expected)


def test_sequence_log_prob_zero():
    """Test the log-probability of a target outside of the support."""
    model = create_model(alpha=2.0)
    model.params_['output_bias'][3] = 100.0
    assert sequence_log_prob(model, PAIRS[1]) == -np.inf


@pytest.mark.parametrize('alpha', [1.0, 1.5])
@pytest.mark.parametrize('smoothing', ['uniform', 'unigram'])
def test_batch_loss_and_gradients(alpha, smoothing):
    """Test the gradients against finite differences."""
    model = create_model(alpha=alpha, epsilon=0.1, smoothing=smoothing).fit_smoothing(PAIRS)
    loss, gradients = batch_loss_and_gradients(model, PAIRS)
    assert loss > 0.0
    random_state = np.random.RandomState(1)
    step = 1e-6
    for name in PARAMETER_NAMES:
        value = model.params_[name]
        for index in [np.unravel_index(flat, value.shape) for flat in random_state.choice(value.size, size=min(value.size, 5), replace=False)]:
            original = value[index]
            value[index] = original + step
            upper, _ = batch_loss_and_gradients(model, PAIRS)
            value[index] = original - step
            lower, _ = batch_loss_and_gradients(model, PAIRS)
            value[index] = original
            assert gradients[name][index] == pytest.approx((upper - lower) / (2 * step), rel=1e-4, abs=1e-7)


@pytest.mark.parametrize('epsilon', [0.0, 0.01])
def test_batch_loss_and_gradients_sparsemax(epsilon):
    """Test the sparsemax gradients against finite differences."""
    model = create_model(alpha=2.0, epsilon=epsilon)
    _, gradients = batch_loss_and_gradients(model, PAIRS)
    random_state = np.random.RandomState(2)
    step = 1e-6
    for name in PARAMETER_NAMES:
        value = model.params_[name]
        for index in [np.unravel_index(flat, value.shape) for flat in random_state.choice(value.size, size=min(value.size, 5), replace=False)]:
            original = value[index]
            value[index] = original + step
            upper, _ = batch_loss_and_gradients(model, PAIRS)
            value[index] = original - step
            lower, _ = batch_loss_and_gradients(model, PAIRS)
            value[index] = original
            assert gradients[name][index] == pytest.approx((upper - lower) / (2 * step), rel=1e-4, abs=1e-7)


def test_batch_loss_duplicated():
    """Test that repeating a batch leaves the mean loss and gradients unchanged."""
    model = create_model(epsilon=0.1)
    loss, gradients = batch_loss_and_gradients(model, PAIRS)
    duplicated_loss, duplicated_gradients = batch_loss_and_gradients(model, PAIRS + PAIRS)
    assert duplicated_loss == pytest.approx(loss, rel=1e-12)
    for name in PARAMETER_NAMES:
        np.testing.assert_allclose(duplicated_gradients[name], gradients[name], rtol=1e-10, atol=1e-14)


def test_batch_loss_cross_entropy():
    """Test that the unsmoothed softmax loss is the mean token negative log-likelihood."""
    model = create_model(alpha=1.0, epsilon=0.0)
    loss, _ = batch_loss_and_gradients(model, PAIRS)
    n_tokens = sum(len(pair.target) for pair in PAIRS)
    expected = -sum(sequence_log_prob(model, pair) for pair in PAIRS) / n_tokens
    assert loss == pytest.approx(expected, abs=1e-10)


def test_batch_loss_and_gradients_parallel():
    """Test that parallel contributions match the sequential computation."""
    model = create_model()
    loss, gradients = batch_loss_and_gradients(model, PAIRS)
    parallel_loss, parallel_gradients = batch_loss_and_gradients(model, PAIRS, n_jobs=2)
    assert parallel_loss == pytest.approx(loss)
    for name in PARAMETER_NAMES:
        np.testing.assert_allclose(parallel_gradients[name], gradients[name], atol=1e-12)


def test_adam_step():
    """Test that the first update moves parameters by the learning rate."""
    model = create_model()
    params = {name: value.copy() for name, value in model.params_.items()}
    _, gradients = batch_loss_and_gradients(model, PAIRS)
    state = TrainState.from_model(model)
    adam_step(state, model, gradients, 0.01)
    assert state.step == 1
    for name in PARAMETER_NAMES:
        expected = params[name] - 0.01 * gradients[name] / (np.abs(gradients[name]) + 1e-8)
        np.testing.assert_allclose(model.params_[name], expected, atol=1e-10)


def test_adam_step_zero_gradients():
    """Test that zero gradients leave the parameters unchanged."""
    model = create_model()
    params = {name: value.copy() for name, value in model.params_.items()}
    state = TrainState.from_model(model)
    for _ in range(3):
        adam_step(state, model, {name: np.zeros_like(value) for name, value in params.items()}, 0.01)
    for name in PARAMETER_NAMES:
        np.testing.assert_array_equal(model.params_[name], params[name])


def test_evaluate():
    """Test the evaluation metrics keys and ranges."""
    metrics = evaluate(create_model(), PAIRS)
    assert set(metrics) == {'wer', 'per', 'levenshtein'}
    assert 0.0 <= metrics['wer'] <= 100.0


def test_train_deterministic():
    """Test that training is reproducible and keeps the best epoch."""
    models, logs = [], []
    for _ in range(2):
        model, log = train(create_model(), PAIRS, PAIRS[:2], max_epochs=3, batch_size=2, random_state=3)
        models.append(model)
        logs.append(log)
    pd.testing.assert_frame_equal(logs[0], logs[1])
    assert logs[0].columns.tolist() == ['epoch', 'loss', 'dev_wer', 'dev_per', 'dev_levenshtein']
    for name in PARAMETER_NAMES:
        np.testing.assert_array_equal(models[0].params_[name], models[1].params_[name])
    best = logs[0]['dev_levenshtein'].idxmin()
    assert evaluate(models[0], PAIRS[:2])['levenshtein'] == logs[0].loc[best, 'dev_levenshtein']


@pytest.mark.parametrize('patience, n_epochs', [(0, 2), (2, 4)])
def test_train_patience(patience, n_epochs):
    """Test that training stops once the dev distance stalls for more than patience epochs."""
    _, log = train(create_model(), PAIRS, PAIRS[:2], lr=0.0, max_epochs=10, patience=patience, random_state=0)
    assert log['epoch'].tolist() == list(range(1, n_epochs + 1))
    assert log['dev_levenshtein'].nunique() == 1


def test_train_reduces_loss():
    """Test that training reduces the loss on a small copy task."""
    pairs = [SequencePair(source, source + (EOS_INDEX,)) for source in [(3, 4), (4, 5), (5, 3, 4), (3,), (4, 4, 5)]]
    model = ToyModel(VOCABULARY, embedding_dim=8, hidden_dim=16, random_state=0).initialize()
    initial_loss, _ = batch_loss_and_gradients(model, pairs)
    model, log = train(model, pairs, pairs, lr=0.05, batch_size=5, max_epochs=20, patience=20, random_state=0)
    assert log['loss'].iloc[-1] < initial_loss
    assert log['dev_levenshtein'].min() <= log['dev_levenshtein'].iloc[0]


def test_checkpoint(tmp_path):
    """Test that a saved checkpoint loads back identically."""
    model = create_model(alpha=1.5, epsilon=0.1, smoothing='unigram', random_state=np.int64(4)).fit_smoothing(PAIRS)
    path = tmp_path / 'model.fys'
    save_checkpoint(model, path)
    loaded = load_checkpoint(path)
    assert loaded.vocabulary == VOCABULARY
    assert {name: value for name, value in loaded.get_params().items() if name != 'vocabulary'} == {
        name: value for name, value in model.get_params().items() if name != 'vocabulary'
    }
    for name in PARAMETER_NAMES:
        np.testing.assert_array_equal(loaded.params_[name], model.params_[name])
    np.testing.assert_array_equal(loaded.smoothing_distribution_.probabilities, model.smoothing_distribution_.probabilities)
    assert path.read_bytes()[:4] == b'FYS1'


def test_checkpoint_errors(tmp_path):
    """Test the unreadable checkpoints."""
    path = tmp_path / 'model.fys'
    save_checkpoint(create_model(), path)
    corrupted, truncated = tmp_path / 'corrupted.fys', tmp_path / 'truncated.fys'
    corrupted.write_bytes(b'XXXX' + path.read_bytes()[4:])
    truncated.write_bytes(path.read_bytes()[:-8])
    for broken in (corrupted, truncated):
        with pytest.raises(CheckpointError):
            load_checkpoint(broken)
