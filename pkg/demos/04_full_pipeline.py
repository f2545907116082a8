"""
The full forensic pipeline
==========================

Detect, retrieve, align, restore: one call produces a reproducible
report with complete provenance for every finding. The same suspect
against an empty index degrades to detection-only findings instead of
failing, which is the no-corpus condition.
"""

import json
from pathlib import Path

from phrase_forensics import (
    BigramTable,
    CorpusIndex,
    DirectoryCorpusReader,
    ReferenceEmbedder,
    ReferenceMlmScorer,
    analyze,
    ingest_corpus,
)

root = Path(__file__).resolve().parent.parent / "fixtures" / "case_study"
embedder = ReferenceEmbedder()
corpus_texts = [p.read_text(encoding="utf-8") for p in sorted((root / "corpus").glob("*.txt"))]
scorer = ReferenceMlmScorer(BigramTable.from_texts(corpus_texts))
index = ingest_corpus(root / "corpus", embedder).index
reader = DirectoryCorpusReader(root / "corpus")

suspect = (root / "suspect.txt").read_text(encoding="utf-8")
report = analyze(suspect, index, scorer, embedder, source_reader=reader, doc_id="suspect.txt")

print("=== full report ===")
print(json.dumps(report.to_json_dict(), indent=2))

empty = CorpusIndex(dim=embedder.dim, backend_name="empty")
degraded = analyze(suspect, empty, scorer, embedder, doc_id="suspect.txt")
print("\n=== same suspect, empty index ===")
for finding in degraded.findings:
    print(f"  {finding.status.value}: {finding.phrase!r} (score {finding.s_phrase:.2f})")
