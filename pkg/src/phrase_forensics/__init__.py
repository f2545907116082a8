"""Forensic detection and extractive restoration of anomalous phrases.

The pipeline flags statistically improbable word sequences in a suspect
document, retrieves the most probable source from an indexed reference
corpus, aligns the offending sentence against the source, and restores
the original term strictly by extraction, never by generation.
"""

from .backends import (
    BigramTable,
    EmbedderBackend,
    MlmScorerBackend,
    ReferenceEmbedder,
    ReferenceMlmScorer,
    RemoteEmbedder,
    RemoteMlmScorer,
    StaticScorer,
)
from .detector import DetectorConfig, PhraseScore, apply_threshold, detect_document, score_phrase
from .errors import (
    BackendError,
    DimensionMismatch,
    EmptyCorpus,
    EmptyIndex,
    EmptySource,
    EmptyText,
    FixtureError,
    FormatError,
    PhraseForensicsError,
    ProtocolError,
    TransportError,
)
from .evaluation import (
    AnnotatedPair,
    EvalMode,
    ParallelDocPair,
    SweepPoint,
    run_alignment_robustness,
    run_restoration_eval,
    run_threshold_sweep,
    smart_match,
)
from .index import (
    CorpusIndex,
    DirectoryCorpusReader,
    InMemorySourceReader,
    IngestResult,
    RetrievalHit,
    ingest_corpus,
    load_index,
    save_index,
    search,
)
from .pipeline import ForensicReport, PipelineConfig, analyze
from .restoration import (
    AlignmentResult,
    Finding,
    FindingStatus,
    RestorationCandidate,
    RestorationConfig,
    ScanResult,
    align_sentence,
    restore_phrase,
    scan_ngrams,
)
from .textmodel import (
    AnalyzedDocument,
    PhraseWindow,
    SentenceSpan,
    TokenSpan,
    analyze_document,
    extract_windows,
    segment_sentences,
    tokenize_words,
)

__version__ = "0.1.0"

__all__ = [
    "AlignmentResult",
    "AnalyzedDocument",
    "AnnotatedPair",
    "BackendError",
    "BigramTable",
    "CorpusIndex",
    "DetectorConfig",
    "DimensionMismatch",
    "DirectoryCorpusReader",
    "EmbedderBackend",
    "EmptyCorpus",
    "EmptyIndex",
    "EmptySource",
    "EmptyText",
    "EvalMode",
    "Finding",
    "FindingStatus",
    "FixtureError",
    "ForensicReport",
    "FormatError",
    "InMemorySourceReader",
    "IngestResult",
    "MlmScorerBackend",
    "ParallelDocPair",
    "PhraseForensicsError",
    "PhraseScore",
    "PhraseWindow",
    "PipelineConfig",
    "ProtocolError",
    "ReferenceEmbedder",
    "ReferenceMlmScorer",
    "RemoteEmbedder",
    "RemoteMlmScorer",
    "RestorationCandidate",
    "RestorationConfig",
    "RetrievalHit",
    "ScanResult",
    "SentenceSpan",
    "StaticScorer",
    "SweepPoint",
    "TokenSpan",
    "TransportError",
    "analyze",
    "analyze_document",
    "align_sentence",
    "apply_threshold",
    "detect_document",
    "extract_windows",
    "ingest_corpus",
    "load_index",
    "restore_phrase",
    "run_alignment_robustness",
    "run_restoration_eval",
    "run_threshold_sweep",
    "save_index",
    "scan_ngrams",
    "score_phrase",
    "search",
    "segment_sentences",
    "smart_match",
    "tokenize_words",
]
