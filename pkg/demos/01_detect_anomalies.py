"""
Detecting statistically anomalous phrases
==========================================

A bigram language model built from a reference corpus assigns each
candidate phrase a length-normalized log-likelihood. Phrases scoring
below the static -8.0 boundary are flagged as anomalous; ordinary
technical wording stays comfortably above it.
"""

from pathlib import Path

from phrase_forensics import (
    BigramTable,
    DetectorConfig,
    PhraseWindow,
    ReferenceMlmScorer,
    apply_threshold,
    score_phrase,
)

corpus_dir = Path(__file__).resolve().parent.parent / "fixtures" / "case_study" / "corpus"
texts = [p.read_text(encoding="utf-8") for p in sorted(corpus_dir.glob("*.txt"))]
scorer = ReferenceMlmScorer(BigramTable.from_texts(texts))

print(f"language model: {scorer.name}")
print(f"corpus: {len(texts)} documents, {scorer.table.total} tokens, vocabulary {scorer.table.vocab_size}\n")

candidates = [
    "treatment response",             # frequent, attested wording
    "growth cancer cell lines",       # rare but corpus-attested term
    "spectral kurtosis",              # plausible jargon, never attested together
    "malignant growth cell lines",    # adversarial synonym substitution
]

cfg = DetectorConfig()
print(f"{'phrase':<32} {'score':>8}  flagged (threshold {cfg.t_anomaly})")
for text in candidates:
    window = PhraseWindow(0, 0, len(text.split()), text, (0, len(text)))
    scored = apply_threshold(score_phrase(window, scorer), cfg)
    print(f"{text:<32} {scored.s_phrase:>8.2f}  {scored.flagged}")
