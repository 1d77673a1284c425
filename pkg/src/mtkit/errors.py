"""Exception types shared across mtkit modules."""


class MtkitError(Exception):
    """Base class for all mtkit errors."""


class ModelFormatError(MtkitError):
    """A model/config file does not match its declared format."""


class EmptyCorpusError(MtkitError):
    """An operation that needs a non-empty corpus received an empty one."""


class VocabTooSmallError(MtkitError):
    """Requested BPE vocab size leaves no room for any merge."""


class UnknownIdError(MtkitError):
    """A token id is outside the model vocabulary."""


class SingleClassCorpusError(MtkitError):
    """Language-ID training data contains fewer than two languages."""


class EmptyTextError(MtkitError):
    """Classification of empty text was requested."""


class EmptyClassError(MtkitError):
    """Domain-classifier training received an empty positive or negative class."""


class EmptyCorpusListError(MtkitError):
    """mix_sample received no corpora."""


class ShapeMismatchError(MtkitError):
    """Checkpoints disagree on the shape of a named tensor."""

    def __init__(self, name: str, msg: str | None = None):
        detail = f": {msg}" if msg else ""
        super().__init__(f"shape mismatch for tensor {name!r}{detail}")
        self.name = name


class NameSetMismatchError(MtkitError):
    """Checkpoints do not share an identical set of tensor names."""


class EmptyCheckpointListError(MtkitError):
    """checkpoint_average received an empty list."""


class VocabMismatchError(MtkitError):
    """Scorers with incompatible vocabularies were combined."""


class EmptyEnsembleError(MtkitError):
    """ensemble_next_dist received no scorers."""


class SearchSpaceTooLargeError(MtkitError):
    """exact_search would have to enumerate more than the allowed number of sequences."""


class NoCompletedHypothesisError(MtkitError):
    """Exhaustive search found no finite-score eos-terminated sequence."""


class EmptyCandidateListError(MtkitError):
    """Re-ranking or oracle selection received no candidates."""


class LengthMismatchError(MtkitError):
    """Hypothesis and reference lists differ in length."""


class EmptyReferenceError(MtkitError):
    """Sentence BLEU against an empty reference is undefined."""
