"""End-to-end orchestration: detect, retrieve, align, restore, report.

One retrieval is performed per suspect document (the whole text is the
retrieval query); alignment and scanning run per flagged span. The report
embeds the full configuration and backend identities so a run with the
reference backend can be reproduced byte for byte.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from .backends import EmbedderBackend, MlmScorerBackend
from .detector import DetectorConfig, PhraseScore, detect_document
from .errors import BackendError
from .index import CorpusIndex, SourceReader, search
from .restoration import (
    AlignmentResult,
    Finding,
    FindingStatus,
    RestorationConfig,
    _finding_from_source,
    align_sentence,
)
from .textmodel import analyze_document


@dataclass(frozen=True)
class PipelineConfig:
    detector: DetectorConfig = DetectorConfig()
    restoration: RestorationConfig = RestorationConfig()

    def to_json_dict(self) -> dict:
        return {
            "t_anomaly": self.detector.t_anomaly,
            "min_window": self.detector.min_window,
            "max_window": self.detector.max_window,
            "t_align": self.restoration.t_align,
            "gamma": self.restoration.gamma,
            "max_ngram": self.restoration.max_ngram,
        }


@dataclass
class ForensicReport:
    suspect_doc_id: str
    scorer_name: str
    embedder_name: str
    config: PipelineConfig
    findings: list[Finding] = field(default_factory=list)

    def summary(self) -> dict[str, int]:
        counts = {status.value: 0 for status in FindingStatus}
        for finding in self.findings:
            counts[finding.status.value] += 1
        counts["total"] = len(self.findings)
        return counts

    def to_json_dict(self) -> dict:
        return {
            "suspect_doc_id": self.suspect_doc_id,
            "backends": {"scorer": self.scorer_name, "embedder": self.embedder_name},
            "config": self.config.to_json_dict(),
            "findings": [f.to_json_dict() for f in self.findings],
            "summary": self.summary(),
        }

    def to_json_bytes(self) -> bytes:
        return (json.dumps(self.to_json_dict(), indent=2, ensure_ascii=False) + "\n").encode("utf-8")


def analyze(
    suspect_text: str,
    index: CorpusIndex,
    scorer: MlmScorerBackend,
    embedder: EmbedderBackend,
    config: PipelineConfig = PipelineConfig(),
    source_reader: SourceReader | None = None,
    doc_id: str = "suspect",
    jobs: int = 1,
) -> ForensicReport:
    """Run the full forensic pipeline over one suspect document.

    An empty index degrades every finding to RETRIEVAL_EMPTY instead of
    failing; a backend failure aborts with the partial report attached to
    the raised BackendError.
    """
    report = ForensicReport(
        suspect_doc_id=doc_id,
        scorer_name=scorer.name,
        embedder_name=embedder.name,
        config=config,
    )
    doc = analyze_document(doc_id, suspect_text)
    try:
        flagged = detect_document(doc, scorer, config.detector, jobs=jobs)
    except BackendError as exc:
        exc.partial_report = report
        raise
    if not flagged:
        return report

    if len(index) == 0:
        report.findings = [
            Finding(
                char_span=f.window.char_span,
                phrase=f.window.text,
                s_phrase=f.s_phrase,
                status=FindingStatus.RETRIEVAL_EMPTY,
            )
            for f in flagged
        ]
        return report

    if source_reader is None:
        raise ValueError("a source_reader is required when the index is non-empty")

    try:
        query = embedder.embed_one(doc.raw_text)
        hit = search(index, query, 1)[0]
        source_doc = analyze_document(hit.doc_id, source_reader.read_text(hit.doc_id))

        # One alignment per suspect sentence; spans in the same sentence share it.
        alignment_cache: dict[int, AlignmentResult] = {}

        def resolve(span: PhraseScore) -> Finding:
            s_idx = span.window.sentence_index
            if s_idx not in alignment_cache and source_doc.sentences:
                alignment_cache[s_idx] = align_sentence(
                    doc.sentence_text(s_idx), source_doc, embedder, config.restoration
                )
            return _finding_from_source(
                span, doc, hit, source_doc, embedder, config.restoration, alignment_cache.get(s_idx)
            )

        if jobs > 1:
            for span in flagged:  # warm the per-sentence cache deterministically
                resolve_sentence = span.window.sentence_index
                if resolve_sentence not in alignment_cache and source_doc.sentences:
                    alignment_cache[resolve_sentence] = align_sentence(
                        doc.sentence_text(resolve_sentence), source_doc, embedder, config.restoration
                    )
            with ThreadPoolExecutor(max_workers=jobs) as pool:
                report.findings = list(pool.map(resolve, flagged))
        else:
            report.findings = [resolve(span) for span in flagged]
    except BackendError as exc:
        exc.partial_report = report
        raise
    return report
