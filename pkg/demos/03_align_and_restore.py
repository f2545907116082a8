"""
Sentence alignment and extractive term restoration
==================================================

Restoration is a two-gate process. First the suspect sentence must align
to some source sentence with cosine at least 0.45 (the hallucination
filter); then every word n-gram of that sentence competes to explain the
flagged phrase, and the winner is accepted only at similarity 0.60 or
higher. The proposed term is always a verbatim quote from the source.
"""

from pathlib import Path

from phrase_forensics import ReferenceEmbedder, align_sentence, analyze_document, scan_ngrams

root = Path(__file__).resolve().parent.parent / "fixtures" / "case_study"
embedder = ReferenceEmbedder()

source_text = (root / "corpus" / "source_doc_14.txt").read_text(encoding="utf-8")
source_doc = analyze_document("source_doc_14.txt", source_text)
suspect_sentence = "The study analyzed malignant growth cell lines to determine treatment response."

alignment = align_sentence(suspect_sentence, source_doc, embedder)
print(f"suspect : {suspect_sentence}")
print(f"aligned : {alignment.source_sentence_text}")
print(f"cosine  : {alignment.similarity:.3f}  (gate 0.45 passed: {alignment.passed_gate})\n")

scan = scan_ngrams("malignant growth cell lines", alignment.source_sentence_text, embedder)
print(f"scanned {len(scan.candidates)} source n-grams; top 5 by similarity:")
for cand in sorted(scan.candidates, key=lambda c: -c.similarity)[:5]:
    marker = "<- accepted" if cand is scan.best and cand.accepted else ""
    print(f"  {cand.similarity:.3f}  {cand.ngram_text!r} {marker}")

print(f"\nrestored term: {scan.best.ngram_text!r} (confidence {scan.best.similarity:.3f}, gate 0.60)")
