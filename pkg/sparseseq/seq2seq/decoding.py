"""
Includes beam search, exact best-first search over the nonzero
probability hypotheses and the empty string audit.

Models are any objects with a ``predict_distribution(source, prefix)``
method returning a SimplexDistribution over the target vocabulary.
"""

# License: BSD 3 clause

import heapq
import logging
from dataclasses import dataclass

import numpy as np
from joblib import Parallel, delayed

from . import EOS_INDEX
from ..exceptions import BudgetExceeded, EmptyDataset, NoCompleteHypothesis

logger = logging.getLogger(__name__)

NODE_BUDGET = 10 ** 6


@dataclass(frozen=True)
class Hypothesis:
    """Target tokens with their natural log-probability."""

    tokens: tuple
    log_prob: float = 0.0

    @property
    def complete(self):
        return bool(self.tokens) and self.tokens[-1] == EOS_INDEX

    def extend(self, token, probability):
        if self.complete:
            raise ValueError('A complete hypothesis cannot be extended.')
        return Hypothesis(self.tokens + (int(token),), self.log_prob + float(np.log(probability)))


@dataclass(frozen=True)
class SearchResult:
    """Hypotheses sorted by decreasing log-probability.

    ``covered_mass`` and ``open_mass`` are reported by exact search only:
    the probability of the returned hypotheses and of the prefixes left
    unexplored.
    """

    hypotheses: list
    covered_mass: float = None
    open_mass: float = None
    truncated: bool = False

    @property
    def best(self):
        return self.hypotheses[0]


def default_max_len(source):
    return 2 * len(source) + 8


def _check_search_params(**params):
    for name, value in params.items():
        if value < 1:
            raise ValueError(f'Parameter `{name}` should be a positive integer. Got {value}.')


def _expand(model, source, hypothesis):
    distribution = model.predict_distribution(source, hypothesis.tokens)
    return [hypothesis.extend(token, distribution.probabilities[token]) for token in distribution.support]


def beam_search(model, source, beam_width=5, max_len=None, length_penalty=0.0, strict=False):
    """Length-unnormalized beam search over nonzero probability continuations.

    Parameters
    ----------
    model : object
        Exposes ``predict_distribution(source, prefix)``.

    source : sequence of int
        Source token indices.

    beam_width : int, default=5
        Number of hypotheses kept at every step.

    max_len : int or None, default=None
        Maximum number of target tokens, end of sequence included. Twice the
        source length plus eight when None.

    length_penalty : float, default=0.0
        Scores are divided by the length raised to this power. Zero keeps the
        raw log-probability.

    strict : bool, default=False
        Raise ``NoCompleteHypothesis`` instead of returning the best open
        prefix when no hypothesis completes.

    Returns
    -------
    result : SearchResult
    """
    max_len = default_max_len(source) if max_len is None else max_len
    _check_search_params(beam_width=beam_width, max_len=max_len)

    def score(hypothesis):
        return hypothesis.log_prob / len(hypothesis.tokens) ** length_penalty if length_penalty else hypothesis.log_prob

    def rank(hypothesis):
        return (-score(hypothesis), hypothesis.tokens)

    beam, finished = [Hypothesis(())], []
    for _ in range(max_len):
        candidates = sorted((candidate for hypothesis in beam for candidate in _expand(model, source, hypothesis)), key=rank)
        beam = []
        for candidate in candidates[:beam_width]:
            (finished if candidate.complete else beam).append(candidate)
        if not beam or (finished and length_penalty == 0.0 and max(h.log_prob for h in finished) >= beam[0].log_prob):
            break

    if not finished:
        message = f'No hypothesis completed within {max_len} tokens.'
        if strict:
            raise NoCompleteHypothesis(message)
        logger.warning(message)
        return SearchResult(sorted(beam, key=rank)[:1], truncated=True)
    return SearchResult(sorted(finished, key=rank))


@dataclass
class _Expansion:
    """Children of an expanded prefix by decreasing probability, pushed one at a time."""

    hypothesis: Hypothesis
    tokens: np.ndarray
    probabilities: np.ndarray
    index: int = 0

    @classmethod
    def from_model(cls, model, source, hypothesis):
        distribution = model.predict_distribution(source, hypothesis.tokens)
        support = distribution.support
        probabilities = distribution.probabilities[support]
        order = np.lexsort((support, -probabilities))
        return cls(hypothesis, support[order], probabilities[order])

    def child(self):
        return self.hypothesis.extend(self.tokens[self.index], self.probabilities[self.index])

    @property
    def open_mass(self):
        return float(np.exp(self.hypothesis.log_prob) * self.probabilities[self.index:].sum())


def _push(frontier, hypothesis, expansion=None):
    heapq.heappush(frontier, (-hypothesis.log_prob, hypothesis.tokens, hypothesis, expansion))


def exact_search(model, source, max_len=None, mass_floor=0.0, node_budget=NODE_BUDGET, strict=False):
    """Best-first enumeration of the nonzero probability hypotheses.

    Complete hypotheses are popped in order of decreasing log-probability,
    so the first one is the exact argmax. The search stops once the popped
    hypotheses cover ``1 - mass_floor`` of the probability, when no prefix is
    left, or after ``node_budget`` expansions.

    Children of an expanded prefix enter the frontier one at a time, the
    next sibling being pushed when the previous one is popped. The frontier
    holds at most one entry per expansion, and memory grows as
    ``node_budget`` times the support size in probabilities only.

    Parameters
    ----------
    model : object
        Exposes ``predict_distribution(source, prefix)``.

    source : sequence of int
        Source token indices.

    max_len : int or None, default=None
        Maximum number of target tokens, end of sequence included.

    mass_floor : float, default=0.0
        Probability mass allowed to remain unexplored, in [0.0, 1.0).

    node_budget : int, default=1000000
        Maximum number of expanded prefixes.

    strict : bool, default=False
        Raise ``BudgetExceeded`` instead of returning a truncated result.

    Returns
    -------
    result : SearchResult
    """
    max_len = default_max_len(source) if max_len is None else max_len
    _check_search_params(max_len=max_len, node_budget=node_budget)
    if not 0.0 <= mass_floor < 1.0:
        raise ValueError(f'Parameter `mass_floor` should be in the [0.0, 1.0) interval. Got {mass_floor}.')

    frontier = []
    _push(frontier, Hypothesis(()))
    hypotheses, covered_mass, dropped_mass, expansions = [], 0.0, 0.0, 0
    budget_exceeded = False
    while frontier and covered_mass < 1.0 - mass_floor - 1e-12:
        _, _, hypothesis, parent = heapq.heappop(frontier)
        if parent is not None:
            parent.index += 1
            if parent.index < len(parent.tokens):
                _push(frontier, parent.child(), parent)
        if hypothesis.complete:
            hypotheses.append(hypothesis)
            covered_mass += np.exp(hypothesis.log_prob)
            continue
        if len(hypothesis.tokens) >= max_len:
            dropped_mass += np.exp(hypothesis.log_prob)
            continue
        if expansions >= node_budget:
            _push(frontier, hypothesis)
            budget_exceeded = True
            break
        expansions += 1
        expansion = _Expansion.from_model(model, source, hypothesis)
        if len(expansion.tokens):
            _push(frontier, expansion.child(), expansion)

    # Entries with a parent stand for their unpopped siblings too
    open_mass = sum(np.exp(hypothesis.log_prob) if parent is None else parent.open_mass for _, _, hypothesis, parent in frontier)
    open_mass = float(open_mass + dropped_mass)
    truncated = budget_exceeded or dropped_mass > 0.0
    if budget_exceeded:
        message = f'Exact search stopped after {node_budget} expansions with {covered_mass:.6f} probability covered.'
        if strict:
            raise BudgetExceeded(message)
        logger.warning(message)
    return SearchResult(hypotheses, float(covered_mass), open_mass, truncated)


def empty_string_log_prob(model, source):
    """Log-probability of ending the target at the first step, minus infinity when it is zero."""
    probability = model.predict_distribution(source, ()).probabilities[EOS_INDEX]
    return float(np.log(probability)) if probability > 0.0 else -np.inf


def _beam_log_prob(model, source, beam_width):
    return beam_search(model, source, beam_width).best.log_prob


def cat_got_tongue_rate(model, sources, beam_width=5, n_jobs=None):
    """Percentage of sources whose empty string beats the beam search hypothesis.

    Parameters
    ----------
    model : object
        Exposes ``predict_distribution(source, prefix)``.

    sources : list of sequences of int or SequencePair
        Nonempty dataset.

    beam_width : int, default=5

    n_jobs : int or None, default=None
        Number of jobs decoding the examples.

    Returns
    -------
    rate : float
    """
    sources = [getattr(source, 'source', source) for source in sources]
    if not sources:
        raise EmptyDataset('Dataset should contain at least one source.')
    beam_log_probs = Parallel(n_jobs=n_jobs)(delayed(_beam_log_prob)(model, source, beam_width) for source in sources)
    offenders = sum(empty_string_log_prob(model, source) > log_prob for source, log_prob in zip(sources, beam_log_probs))
    return 100.0 * offenders / len(sources)


def _decode(model, source, beam_width, max_len, length_penalty):
    tokens = beam_search(model, source, beam_width, max_len, length_penalty).best.tokens
    return list(tokens[:-1]) if tokens and tokens[-1] == EOS_INDEX else list(tokens)


def decode_dataset(model, pairs, beam_width=5, max_len=None, length_penalty=0.0, n_jobs=None):
    """Beam-decode the sources of pairs, returning token indices without end of sequence."""
    return Parallel(n_jobs=n_jobs)(delayed(_decode)(model, getattr(pair, 'source', pair), beam_width, max_len, length_penalty) for pair in pairs)
