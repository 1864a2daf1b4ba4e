"""Exception hierarchy shared across the package."""

from __future__ import annotations


class KnavError(Exception):
    """Base class for every error raised by this package."""


class ParseError(KnavError):
    """Malformed input file; carries the offending line number when known."""

    def __init__(self, message: str, line: int | None = None):
        super().__init__(message if line is None else f"line {line}: {message}")
        self.line = line


class ValidationError(KnavError):
    """An input violates a documented precondition or invariant."""


class ConfigError(KnavError):
    """A run configuration is unusable as given."""


class DomainError(KnavError):
    """Arguments are outside the mathematical domain of an operation."""


class RetrievalError(KnavError):
    """Search backend failed; carries the last page index reached."""

    def __init__(self, message: str, last_page: int | None = None):
        super().__init__(message)
        self.last_page = last_page


class EmbeddingError(KnavError):
    """Embedding provider failed; carries the doc ids that were not embedded."""

    def __init__(self, message: str, failed_doc_ids: list[str] | None = None):
        super().__init__(message)
        self.failed_doc_ids = list(failed_doc_ids or [])


class IntegrityError(KnavError):
    """Data returned by a provider is internally inconsistent."""


class DegenerateDataError(KnavError):
    """The data admits no meaningful fit (e.g. all points identical)."""


class SelectionError(KnavError):
    """Every candidate model in a selection sweep was degenerate."""


class GatewayError(KnavError):
    """Chat provider unreachable after retries."""


class ReplayMissError(KnavError):
    """A replayed request has no transcript entry."""

    def __init__(self, fingerprint: str):
        super().__init__(f"no transcript entry for fingerprint {fingerprint}")
        self.fingerprint = fingerprint


class MalformedOutputError(KnavError):
    """Model output could not be parsed even after one repair round."""

    def __init__(self, message: str, raw: str = ""):
        super().__init__(message)
        self.raw = raw


class ReaderOutputError(MalformedOutputError):
    """Cluster-reader reply is missing required fields."""


class OrganizerOutputError(MalformedOutputError):
    """Thematic-organizer reply is unusable."""


class ExtractionError(MalformedOutputError):
    """Keyword-extraction reply lacks the expected tags."""


class JudgeOutputError(MalformedOutputError):
    """Relevance-judge reply is not a usable grade."""


class ExpansionError(KnavError):
    """Subtopic expansion retrieval failed."""


class NotFoundError(KnavError):
    """Requested run or cluster does not exist."""


class PreconditionError(KnavError):
    """Operation invoked on an object in the wrong state."""


class MigrationError(KnavError):
    """Persisted artifact has an unsupported schema version."""


class CorruptArtifactError(KnavError):
    """Persisted artifact violates its own invariants."""


class PipelineStageError(KnavError):
    """A pipeline stage failed; carries the stage name."""

    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"stage '{stage}' failed: {cause}")
        self.stage = stage
        self.cause = cause
