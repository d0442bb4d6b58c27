"""Exception types shared across the toolkit."""


class FactTraceError(Exception):
    """Base class for every error raised by this package."""


# fact dataset
class MissingLanguageFile(FactTraceError): ...
class IndexMismatch(FactTraceError): ...
class RelationMismatch(FactTraceError): ...
class EmptyField(FactTraceError): ...
class InvalidPrompt(FactTraceError): ...
class UnknownLanguage(FactTraceError): ...


# corpus counting
class EmptyQuerySet(FactTraceError): ...
class ShardReadError(FactTraceError): ...
class MalformedRecord(FactTraceError): ...
class QuerySetMismatch(FactTraceError): ...
class FingerprintMismatch(FactTraceError): ...


# probe evaluation
class MissingPrediction(FactTraceError): ...
class DuplicatePrediction(FactTraceError): ...
class UnknownKey(FactTraceError): ...
class UnknownRelation(FactTraceError): ...
class EmptySubset(FactTraceError): ...
class GroupTooSmall(FactTraceError): ...
class UnknownId(FactTraceError): ...


# threshold classifier
class EmptyDataset(FactTraceError): ...
class InvalidFraction(FactTraceError): ...


# binned correlation
class InvalidBinCount(FactTraceError): ...
class DegenerateInput(FactTraceError): ...


# embedding similarity
class DimensionMismatch(FactTraceError): ...
class ZeroVector(FactTraceError): ...
class NonFiniteInput(FactTraceError): ...
class StepMismatch(FactTraceError): ...
class LayerCountMismatch(FactTraceError): ...
class ManifestError(FactTraceError): ...


# coverage
class InsufficientTokens(FactTraceError): ...


# command line
class ConfigError(FactTraceError): ...
class MissingArtifact(FactTraceError): ...
