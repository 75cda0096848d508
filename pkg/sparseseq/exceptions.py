"""
Includes the exceptions raised by the package.
"""

# License: BSD 3 clause


class SparseSeqError(Exception):
    """Base class of all package errors."""


class ConfigError(SparseSeqError, ValueError):
    """Invalid experiment configuration."""


class IterationLimitExceeded(SparseSeqError, RuntimeError):
    """Bisection did not reach the requested tolerance."""


class DegenerateEpsilon(SparseSeqError, ValueError):
    """Smoothing weight equal to one where the ratio eps / (1 - eps) is needed."""


class UnknownToken(SparseSeqError, ValueError):
    """Token index outside of the vocabulary."""


class EmptyDataset(SparseSeqError, ValueError):
    """Dataset without examples."""


class NoCompleteHypothesis(SparseSeqError, RuntimeError):
    """Beam search reached the maximum length without completing a hypothesis."""


class BudgetExceeded(SparseSeqError, RuntimeError):
    """Exact search exhausted its node budget."""


class LengthMismatch(SparseSeqError, ValueError):
    """Hypotheses and references differ in number."""


class EmptyReferences(SparseSeqError, ValueError):
    """References have zero total length."""


class EmptyFile(SparseSeqError, ValueError):
    """Dataset file without any line."""


class MalformedLine(SparseSeqError, ValueError):
    """Dataset line that does not follow the source<TAB>target format."""

    def __init__(self, line_number, line):
        self.line_number = line_number
        self.line = line
        super().__init__(f'Line {line_number} should contain source and target tokens separated by a single tab. Got {line!r}.')


class VocabularyMismatch(SparseSeqError, ValueError):
    """Dataset tokens are not covered by the checkpoint vocabulary."""


class CheckpointError(SparseSeqError, ValueError):
    """Checkpoint file that cannot be parsed."""
