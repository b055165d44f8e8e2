"""Exception hierarchy.

Everything raised on bad input derives from :class:`WordMoverError`, which is
also a :class:`ValueError`, so callers that only care about "bad input" can
catch either.
"""


class WordMoverError(ValueError):
    pass


# transport
class DimensionMismatch(WordMoverError):
    pass


class InvalidMeasure(WordMoverError):
    pass


class InvalidCost(WordMoverError):
    pass


class NonfiniteCost(InvalidCost):
    pass


class InstanceTooLarge(WordMoverError):
    pass


# geometry
class OutsideBall(WordMoverError):
    pass


class ZeroVector(WordMoverError):
    pass


class InvalidFisherMatrix(WordMoverError):
    pass


# embeddings
class MalformedLine(WordMoverError):
    def __init__(self, message, line=None):
        super().__init__(message)
        self.line = line


class InconsistentDimension(MalformedLine):
    pass


class EmptyFile(WordMoverError):
    pass


class TruncatedFile(WordMoverError):
    pass


class HeaderParseError(WordMoverError):
    pass


# documents and measures
class EmptyDocument(WordMoverError):
    pass


class EmptyCorpus(WordMoverError):
    pass


class ZeroNormWord(WordMoverError):
    pass


class MissingIdf(WordMoverError):
    pass


class PairError(WordMoverError):
    """A document pair failed inside a distance matrix computation."""

    def __init__(self, i, j, cause):
        super().__init__(f"pair ({i}, {j}): {cause}")
        self.i = i
        self.j = j
        self.cause = cause


# benchmark
class KTooLarge(WordMoverError):
    pass


class InsufficientClassSize(WordMoverError):
    pass


class ConfigError(WordMoverError):
    pass
