"""
Load and generate the transduction datasets.

Datasets are UTF-8 text files with one example per line, source and
target tokens separated by a tab and tokens separated by single spaces.
"""

# License: BSD 3 clause

import logging
from dataclasses import dataclass
from os.path import join
from pathlib import Path
from string import ascii_lowercase, ascii_uppercase

import numpy as np
from sklearn.utils import check_random_state

from . import RESERVED_TOKENS, PAD_INDEX, EOS_INDEX, TASKS
from ..exceptions import EmptyDataset, EmptyFile, MalformedLine, UnknownToken, VocabularyMismatch

logger = logging.getLogger(__name__)

SPLITS = {'train': 0.8, 'dev': 0.1, 'test': 0.1}


class Vocabulary:
    """Bijection between tokens and indices, reserved tokens first.

    Examples
    --------
    >>> vocabulary = Vocabulary(['a', 'b'])
    >>> vocabulary.encode(['b', 'a'])
    [4, 3]
    >>> len(vocabulary)
    5
    """

    def __init__(self, tokens=()):
        self.tokens = list(RESERVED_TOKENS)
        self._indices = {token: index for index, token in enumerate(self.tokens)}
        for token in tokens:
            self.add(token)

    def add(self, token):
        """Add a token, if not present, and return its index."""
        if token not in self._indices:
            self._indices[token] = len(self.tokens)
            self.tokens.append(token)
        return self._indices[token]

    def index(self, token):
        try:
            return self._indices[token]
        except KeyError:
            raise UnknownToken(f'Token {token!r} is not included in the vocabulary.') from None

    def encode(self, tokens):
        return [self.index(token) for token in tokens]

    def decode(self, indices):
        """Tokens of indices, stopping at the first end of sequence."""
        tokens = []
        for index in indices:
            if index == EOS_INDEX:
                break
            if not 0 <= index < len(self.tokens):
                raise UnknownToken(f'Index {index} is outside of a vocabulary of size {len(self.tokens)}.')
            tokens.append(self.tokens[index])
        return tokens

    def __contains__(self, token):
        return token in self._indices

    def __len__(self):
        return len(self.tokens)

    def __eq__(self, other):
        return isinstance(other, Vocabulary) and self.tokens == other.tokens

    def __repr__(self):
        return f'Vocabulary({self.tokens[len(RESERVED_TOKENS):]!r})'


@dataclass(frozen=True)
class SequencePair:
    """Source and end-of-sequence terminated target indices."""

    source: tuple
    target: tuple

    def __post_init__(self):
        object.__setattr__(self, 'source', tuple(int(index) for index in self.source))
        object.__setattr__(self, 'target', tuple(int(index) for index in self.target))
        if not self.source:
            raise ValueError('Source sequence should be nonempty.')
        if not self.target or self.target[-1] != EOS_INDEX or EOS_INDEX in self.target[:-1]:
            raise ValueError(f'Target sequence should end with a single end of sequence index. Got {self.target}.')
        if PAD_INDEX in self.source or PAD_INDEX in self.target:
            raise ValueError('Sequences should not contain the padding index.')


def parse_line(line, line_number):
    """Split a dataset line to source and target tokens."""
    fields = line.split('\t')
    if len(fields) != 2:
        raise MalformedLine(line_number, line)
    source, target = (field.split(' ') if field else [] for field in fields)
    if not source or '' in source or '' in target or set(RESERVED_TOKENS).intersection(source + target):
        raise MalformedLine(line_number, line)
    return source, target


def load_dataset(path, vocabulary=None):
    """Load a dataset file.

    Parameters
    ----------
    path : str
        Path of the dataset file.

    vocabulary : Vocabulary or None, default=None
        Fixed vocabulary to encode the tokens with. When None, a vocabulary
        is built from the tokens in order of first occurrence.

    Returns
    -------
    pairs : list of SequencePair

    vocabulary : Vocabulary
    """
    with open(path, encoding='utf-8') as file:
        lines = file.read().split('\n')
    if lines and lines[-1] == '':
        lines.pop()
    if not lines:
        raise EmptyFile(f'Dataset file {path} is empty.')

    # Parse lines
    examples = [parse_line(line, line_number) for line_number, line in enumerate(lines, start=1)]

    # Encode tokens
    if vocabulary is None:
        vocabulary = Vocabulary(token for source, target in examples for token in source + target)
    else:
        unknown = sorted({token for source, target in examples for token in source + target if token not in vocabulary})
        if unknown:
            raise VocabularyMismatch(f'Tokens {", ".join(unknown)} of {path} are not included in the vocabulary.')
    pairs = [SequencePair(vocabulary.encode(source), vocabulary.encode(target) + [EOS_INDEX]) for source, target in examples]
    logger.info('Loaded %d pairs from %s', len(pairs), path)

    return pairs, vocabulary


def check_dataset(pairs):
    """Check that a dataset contains at least one pair."""
    if not pairs:
        raise EmptyDataset('Dataset should contain at least one sequence pair.')
    return list(pairs)


def target_unigram(pairs, vocabulary_size):
    """Relative frequencies of target tokens, end of sequence included."""
    counts = np.bincount([index for pair in check_dataset(pairs) for index in pair.target], minlength=vocabulary_size)
    return counts / counts.sum()


def create_rewrite_table(n_symbols, random_state, n_readings=3):
    """Context-free substitution table from source symbols to their readings.

    Like graphemes with several pronunciations, every source symbol has
    ``n_readings`` distinct target symbols, rewritten to one of them with
    equal probability.
    """
    random_state = check_random_state(random_state)
    if not 1 <= n_readings <= n_symbols:
        raise ValueError(f'Parameter `n_readings` should be in [1, {n_symbols}]. Got {n_readings}.')
    targets = list(ascii_uppercase[:n_symbols])
    return {symbol: tuple(random_state.choice(targets, size=n_readings, replace=False).tolist()) for symbol in ascii_lowercase[:n_symbols]}


def generate_synthetic(task, size, random_state=None, n_symbols=9, min_length=3, max_length=7, n_readings=3):
    """Generate train, dev and test splits of a synthetic transduction task.

    Parameters
    ----------
    task : str
        One of ``copy``, ``reverse`` or ``rewrite-rules``.

    size : int
        Total number of pairs, split 80/10/10.

    random_state : int, RandomState instance or None, default=None
        Controls the substitution table, the sampled sources and readings.

    n_readings : int, default=3
        Number of equally likely readings of a symbol in ``rewrite-rules``.

    Returns
    -------
    splits : dict
        Maps ``train``, ``dev`` and ``test`` to lists of (source, target)
        token lists.
    """
    if task not in TASKS:
        raise ValueError(f'Parameter `task` should be one of {", ".join(TASKS)}. Got {task!r}.')
    if size < 1:
        raise ValueError(f'Parameter `size` should be a positive integer. Got {size}.')
    if not 1 <= n_symbols <= len(ascii_lowercase):
        raise ValueError(f'Parameter `n_symbols` should be in [1, {len(ascii_lowercase)}]. Got {n_symbols}.')
    if not 1 <= min_length <= max_length:
        raise ValueError(f'Lengths should satisfy 1 <= min_length <= max_length. Got {min_length} and {max_length}.')
    random_state = check_random_state(random_state)

    # Generate examples
    table = create_rewrite_table(n_symbols, random_state, n_readings)
    symbols = list(ascii_lowercase[:n_symbols])
    examples = []
    for length in random_state.randint(min_length, max_length + 1, size=size):
        source = random_state.choice(symbols, size=length).tolist()
        examples.append((source, TASKS[task](source, table, random_state)))

    # Split examples
    n_train, n_dev = int(round(SPLITS['train'] * size)), int(round(SPLITS['dev'] * size))
    n_train = min(n_train, size)
    n_dev = min(n_dev, size - n_train)
    return {'train': examples[:n_train], 'dev': examples[n_train:n_train + n_dev], 'test': examples[n_train + n_dev:]}


def write_dataset(examples, path):
    """Write (source, target) token lists to a dataset file."""
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'w', encoding='utf-8', newline='\n') as file:
        for source, target in examples:
            file.write(f'{" ".join(source)}\t{" ".join(target)}\n')


def write_splits(splits, directory):
    """Write the splits of a task as ``<split>.tsv`` files and return their paths."""
    paths = {}
    for name, examples in splits.items():
        paths[name] = join(directory, f'{name}.tsv')
        write_dataset(examples, paths[name])
    return paths
