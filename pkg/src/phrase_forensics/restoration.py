"""Sentence alignment and strictly extractive term restoration.

Given a flagged span, the engine aligns the suspect sentence against the
retrieved source document's sentences (cosine argmax, gated at t_align),
then exhaustively scans every word n-gram of the matched sentence for the
closest semantic neighbor of the flagged phrase (gated at gamma). A term
is only ever proposed verbatim from the source text; when either gate
fails the finding is reported as an unresolved anomaly instead.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .backends import EmbedderBackend
from .detector import PhraseScore
from .errors import EmptySource
from .index import CorpusIndex, RetrievalHit, SourceReader, search
from .textmodel import AnalyzedDocument, analyze_document, word_spans


class FindingStatus(enum.Enum):
    RESTORED = "RESTORED"
    NO_ALIGNMENT = "NO_ALIGNMENT"
    LOW_CONFIDENCE = "LOW_CONFIDENCE"
    RETRIEVAL_EMPTY = "RETRIEVAL_EMPTY"


@dataclass(frozen=True)
class Finding:
    """One forensic result with full provenance.

    Optional fields are populated progressively: RETRIEVAL_EMPTY carries
    none of them, NO_ALIGNMENT carries the retrieved doc id (plus the
    best, below-gate similarity), LOW_CONFIDENCE adds the aligned sentence,
    and RESTORED carries everything including the extracted term.
    """

    char_span: tuple[int, int]
    phrase: str
    s_phrase: float
    status: FindingStatus
    source_doc_id: str | None = None
    source_sentence: str | None = None
    alignment_sim: float | None = None
    restored_term: str | None = None
    restoration_sim: float | None = None

    def to_json_dict(self) -> dict:
        out: dict = {
            "char_span": [self.char_span[0], self.char_span[1]],
            "phrase": self.phrase,
            "s_phrase": self.s_phrase,
            "status": self.status.value,
        }
        for key in ("source_doc_id", "source_sentence", "alignment_sim", "restored_term", "restoration_sim"):
            value = getattr(self, key)
            if value is not None:
                out[key] = value
        return out


@dataclass(frozen=True)
class AlignmentResult:
    source_sentence_index: int
    source_sentence_text: str
    similarity: float
    passed_gate: bool


@dataclass(frozen=True)
class RestorationCandidate:
    ngram_text: str
    n: int
    similarity: float
    accepted: bool


@dataclass(frozen=True)
class ScanResult:
    best: RestorationCandidate | None
    candidates: list[RestorationCandidate]


@dataclass(frozen=True)
class RestorationConfig:
    t_align: float = 0.45
    gamma: float = 0.60
    max_ngram: int = 5

    def __post_init__(self):
        for label, value in (("t_align", self.t_align), ("gamma", self.gamma)):
            if not (0.0 < value <= 1.0):
                raise ValueError(f"{label} must be in (0, 1], got {value}")
        if self.max_ngram < 1:
            raise ValueError(f"max_ngram must be >= 1, got {self.max_ngram}")


def align_sentence(
    suspect_sentence: str,
    source_doc: AnalyzedDocument,
    embedder: EmbedderBackend,
    cfg: RestorationConfig = RestorationConfig(),
) -> AlignmentResult:
    """Best-matching source sentence by cosine; gate passes at similarity >= t_align.

    Ties resolve to the lowest sentence index.
    """
    if not source_doc.sentences:
        raise EmptySource(f"source document {source_doc.doc_id!r} has no sentences")
    sentence_texts = [source_doc.sentence_text(i) for i in range(len(source_doc.sentences))]
    vectors = embedder.embed([suspect_sentence] + sentence_texts).astype(np.float64)
    sims = vectors[1:] @ vectors[0]
    best_idx = 0
    for i in range(1, len(sims)):
        if sims[i] > sims[best_idx]:
            best_idx = i
    similarity = min(max(float(sims[best_idx]), -1.0), 1.0)
    return AlignmentResult(
        source_sentence_index=best_idx,
        source_sentence_text=sentence_texts[best_idx],
        similarity=similarity,
        passed_gate=similarity >= cfg.t_align,
    )


def scan_ngrams(
    tortured_phrase: str,
    matched_sentence: str,
    embedder: EmbedderBackend,
    cfg: RestorationConfig = RestorationConfig(),
) -> ScanResult:
    """Exhaustive scan of all word n-grams (n <= max_ngram) of the sentence.

    The best candidate maximizes cosine to the phrase; ties prefer the
    smaller n, then the earlier position. A candidate is accepted when its
    similarity reaches gamma. An empty sentence yields no candidates.
    """
    tokens = word_spans(matched_sentence)
    if not tokens:
        return ScanResult(best=None, candidates=[])
    grams: list[tuple[str, int]] = []
    for n in range(1, cfg.max_ngram + 1):
        for start in range(len(tokens) - n + 1):
            text = matched_sentence[tokens[start].start : tokens[start + n - 1].end]
            grams.append((text, n))
    vectors = embedder.embed([tortured_phrase] + [g[0] for g in grams]).astype(np.float64)
    sims = np.clip(vectors[1:] @ vectors[0], -1.0, 1.0)
    candidates = [
        RestorationCandidate(ngram_text=text, n=n, similarity=float(sims[i]), accepted=float(sims[i]) >= cfg.gamma)
        for i, (text, n) in enumerate(grams)
    ]
    best = candidates[0]
    for cand in candidates[1:]:
        if cand.similarity > best.similarity:
            best = cand
    return ScanResult(best=best, candidates=candidates)


def _finding_from_source(
    flagged: PhraseScore,
    suspect_doc: AnalyzedDocument,
    hit: RetrievalHit,
    source_doc: AnalyzedDocument,
    embedder: EmbedderBackend,
    cfg: RestorationConfig,
    alignment: AlignmentResult | None = None,
) -> Finding:
    """Alignment + scan against an already-retrieved source document."""
    span = flagged.window.char_span
    phrase = flagged.window.text
    suspect_sentence = suspect_doc.sentence_text(flagged.window.sentence_index)
    try:
        if alignment is None:
            alignment = align_sentence(suspect_sentence, source_doc, embedder, cfg)
    except EmptySource:
        return Finding(
            char_span=span,
            phrase=phrase,
            s_phrase=flagged.s_phrase,
            status=FindingStatus.NO_ALIGNMENT,
            source_doc_id=hit.doc_id,
        )
    if not alignment.passed_gate:
        return Finding(
            char_span=span,
            phrase=phrase,
            s_phrase=flagged.s_phrase,
            status=FindingStatus.NO_ALIGNMENT,
            source_doc_id=hit.doc_id,
            alignment_sim=alignment.similarity,
        )
    scan = scan_ngrams(phrase, alignment.source_sentence_text, embedder, cfg)
    if scan.best is None or not scan.best.accepted:
        return Finding(
            char_span=span,
            phrase=phrase,
            s_phrase=flagged.s_phrase,
            status=FindingStatus.LOW_CONFIDENCE,
            source_doc_id=hit.doc_id,
            source_sentence=alignment.source_sentence_text,
            alignment_sim=alignment.similarity,
        )
    return Finding(
        char_span=span,
        phrase=phrase,
        s_phrase=flagged.s_phrase,
        status=FindingStatus.RESTORED,
        source_doc_id=hit.doc_id,
        source_sentence=alignment.source_sentence_text,
        alignment_sim=alignment.similarity,
        restored_term=scan.best.ngram_text,
        restoration_sim=scan.best.similarity,
    )


def restore_phrase(
    flagged: PhraseScore,
    suspect_doc: AnalyzedDocument,
    index: CorpusIndex,
    embedder: EmbedderBackend,
    cfg: RestorationConfig,
    source_reader: SourceReader,
) -> Finding:
    """Retrieve the most probable source for the suspect document, then restore.

    Status ladder: RETRIEVAL_EMPTY when the index has no entries;
    NO_ALIGNMENT when no source sentence reaches t_align; LOW_CONFIDENCE
    when no n-gram reaches gamma; RESTORED otherwise, with the term quoted
    verbatim from the source.
    """
    if not flagged.flagged:
        raise ValueError("restore_phrase requires a flagged PhraseScore")
    if len(index) == 0:
        return Finding(
            char_span=flagged.window.char_span,
            phrase=flagged.window.text,
            s_phrase=flagged.s_phrase,
            status=FindingStatus.RETRIEVAL_EMPTY,
        )
    query = embedder.embed_one(suspect_doc.raw_text)
    hit = search(index, query, 1)[0]
    source_doc = analyze_document(hit.doc_id, source_reader.read_text(hit.doc_id))
    return _finding_from_source(flagged, suspect_doc, hit, source_doc, embedder, cfg)
