"""
Includes the transduction metrics, the support density and the
calibration analyses of force-decoded predictions.
"""

# License: BSD 3 clause

from dataclasses import dataclass

import numpy as np
from joblib import Parallel, delayed

from ..exceptions import EmptyDataset, EmptyReferences, LengthMismatch


def levenshtein(a, b):
    """Unit cost edit distance between two sequences.

    Examples
    --------
    >>> levenshtein('kitten', 'sitting')
    3
    """
    previous = list(range(len(b) + 1))
    for i, a_item in enumerate(a, start=1):
        current = [i]
        for j, b_item in enumerate(b, start=1):
            current.append(min(previous[j] + 1, current[j - 1] + 1, previous[j - 1] + (a_item != b_item)))
        previous = current
    return previous[-1]


def _check_lengths(hypotheses, references):
    if len(hypotheses) != len(references):
        raise LengthMismatch(f'Got {len(hypotheses)} hypotheses for {len(references)} references.')
    if not references:
        raise EmptyDataset('At least one hypothesis and reference are required.')


def wer(hypotheses, references):
    """Percentage of hypotheses that do not exactly match their reference."""
    _check_lengths(hypotheses, references)
    mismatches = sum(list(hypothesis) != list(reference) for hypothesis, reference in zip(hypotheses, references))
    return 100.0 * mismatches / len(references)


def accuracy(hypotheses, references):
    """Percentage of hypotheses that exactly match their reference."""
    return 100.0 - wer(hypotheses, references)


def per(hypotheses, references):
    """Total edit distance as a percentage of the total reference length.

    Examples
    --------
    >>> round(per([['a', 'b']], [['a', 'b', 'c']]), 2)
    33.33
    """
    _check_lengths(hypotheses, references)
    total_length = sum(len(reference) for reference in references)
    if total_length == 0:
        raise EmptyReferences('References should have a positive total length.')
    return 100.0 * sum(levenshtein(hypothesis, reference) for hypothesis, reference in zip(hypotheses, references)) / total_length


def mean_levenshtein(hypotheses, references):
    """Average edit distance between hypotheses and references."""
    _check_lengths(hypotheses, references)
    return float(np.mean([levenshtein(hypothesis, reference) for hypothesis, reference in zip(hypotheses, references)]))


@dataclass(frozen=True)
class DensityReport:
    """Support sizes of force-decoded distributions."""

    mean_percentage: float
    support_sizes: list
    vocabulary_size: int

    def to_dict(self):
        return {'mean_percentage': self.mean_percentage, 'support_sizes': self.support_sizes, 'vocabulary_size': self.vocabulary_size}


@dataclass(frozen=True)
class CalibrationReport:
    """Reliability bins of the most likely force-decoded predictions."""

    bin_count: int
    counts: np.ndarray
    confidences: np.ndarray
    accuracies: np.ndarray
    ece: float

    def recompute_ece(self):
        """Expected calibration error from the stored bins."""
        return float((self.counts / self.counts.sum() * np.abs(self.accuracies - self.confidences)).sum())

    def to_dict(self):
        return {
            'bin_count': self.bin_count, 'counts': self.counts.tolist(), 'confidences': self.confidences.tolist(),
            'accuracies': self.accuracies.tolist(), 'ece': self.ece
        }


def _check_dataset(pairs):
    pairs = list(pairs)
    if not pairs:
        raise EmptyDataset('Dataset should contain at least one sequence pair.')
    return pairs


def _forced_distributions(model, pairs, n_jobs):
    from .model import forced_decode

    return Parallel(n_jobs=n_jobs)(delayed(forced_decode)(model, pair) for pair in pairs)


def support_density(model, pairs, n_jobs=None, distributions=None):
    """Average percentage of the vocabulary with nonzero probability under forced decoding.

    The average runs over all decoding steps of the dataset.
    """
    pairs = _check_dataset(pairs)
    distributions = _forced_distributions(model, pairs, n_jobs) if distributions is None else distributions
    support_sizes = [[distribution.support_size for distribution in example] for example in distributions]
    vocabulary_size = len(distributions[0][0])
    percentages = 100.0 * np.concatenate([np.array(sizes, dtype=np.float64) for sizes in support_sizes]) / vocabulary_size
    return DensityReport(float(percentages.mean()), support_sizes, vocabulary_size)


def calibration_report(confidences, correct, bins=10):
    """Bin predictions by confidence and compute the expected calibration error.

    Bin ``m`` covers ``((m - 1) / bins, m / bins]`` and zero confidence falls
    in the first bin.

    Examples
    --------
    >>> round(calibration_report([0.95, 0.95], [True, False]).ece, 12)
    0.45
    """
    if bins < 1:
        raise ValueError(f'Parameter `bins` should be a positive integer. Got {bins}.')
    confidences, correct = np.asarray(confidences, dtype=np.float64), np.asarray(correct, dtype=np.float64)
    if confidences.size == 0:
        raise EmptyDataset('At least one prediction is required.')
    indices = np.digitize(confidences, np.linspace(0.0, 1.0, bins + 1)[1:-1], right=True)
    counts = np.bincount(indices, minlength=bins)
    occupied = np.maximum(counts, 1)
    mean_confidences = np.bincount(indices, weights=confidences, minlength=bins) / occupied
    accuracies = np.bincount(indices, weights=correct, minlength=bins) / occupied
    ece = float((counts / counts.sum() * np.abs(accuracies - mean_confidences)).sum())
    return CalibrationReport(bins, counts, mean_confidences, accuracies, ece)


def expected_calibration_error(model, pairs, bins=10, n_jobs=None, distributions=None):
    """Expected calibration error of the force-decoded argmax predictions.

    Ties between most likely tokens resolve to the lowest index.
    """
    pairs = _check_dataset(pairs)
    distributions = _forced_distributions(model, pairs, n_jobs) if distributions is None else distributions
    confidences, correct = [], []
    for pair, example in zip(pairs, distributions):
        for gold, distribution in zip(pair.target, example):
            prediction = int(np.argmax(distribution.probabilities))
            confidences.append(distribution.probabilities[prediction])
            correct.append(prediction == gold)
    return calibration_report(confidences, correct, bins)
