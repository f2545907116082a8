"""Exception hierarchy shared across the package."""

from __future__ import annotations


class PhraseForensicsError(Exception):
    """Base class for all errors raised by this package."""


class EmptyText(PhraseForensicsError):
    """No word tokens survived tokenization of an input string."""


class EmptyCorpus(PhraseForensicsError):
    """Corpus ingestion found zero usable documents."""


class EmptyIndex(PhraseForensicsError):
    """A search was attempted against an index with no entries."""


class EmptySource(PhraseForensicsError):
    """A source document offered no sentences to align against."""


class DimensionMismatch(PhraseForensicsError):
    """Vector dimensionality differs from what the index or backend expects."""


class FormatError(PhraseForensicsError):
    """A persisted index file is malformed, truncated, or corrupted."""


class TransportError(PhraseForensicsError):
    """A remote backend could not be reached or timed out."""


class ProtocolError(PhraseForensicsError):
    """A remote backend replied with a malformed or incomplete response."""


class BackendError(PhraseForensicsError):
    """A model backend failed while scoring or embedding.

    ``context`` carries a short description of the work item (for example
    the phrase window being scored) so the failure can be located; an
    optional ``partial_report`` holds whatever the pipeline had assembled
    before the abort.
    """

    def __init__(self, message: str, context: str | None = None, partial_report=None):
        super().__init__(message if context is None else f"{message} [while processing: {context}]")
        self.context = context
        self.partial_report = partial_report


class FixtureError(PhraseForensicsError):
    """An evaluation fixture is malformed or could not be generated."""
