"""Evaluation harness: restoration accuracy, threshold sweeps, alignment stats.

Three desk-scale experiments over documented local fixture formats:

* restoration accuracy (EM@1 with smart matching) in three modes:
  retrieval-augmented, no-corpus baseline, and a static-dictionary
  baseline that ignores sentence context;
* a detection-threshold sweep with flag counts and F1 per threshold;
* alignment robustness statistics over parallel original/spun documents.

Fixture formats: annotated pairs are JSON lines with keys
``tortured_phrase``, ``expected_original``, ``source_context`` and optional
``tortured_sentence``; parallel documents are ``<id>.orig.txt`` /
``<id>.spun.txt`` file pairs; labeled phrases are JSON lines with keys
``phrase`` and ``is_tortured``.
"""

from __future__ import annotations

import json
import re
import statistics
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np

from .backends import BigramTable, EmbedderBackend, MlmScorerBackend, ReferenceMlmScorer
from .errors import FixtureError
from .index import CorpusIndex, InMemorySourceReader, embed_document_text
from .pipeline import FindingStatus, PipelineConfig, analyze
from .restoration import RestorationConfig, align_sentence
from .textmodel import analyze_document, words_of

_PUNCT_RE = re.compile(r"[^\w\s]|_", re.UNICODE)


@dataclass(frozen=True)
class AnnotatedPair:
    tortured_phrase: str
    expected_original: str
    source_context: str
    tortured_sentence: str | None = None


@dataclass(frozen=True)
class ParallelDocPair:
    pair_id: str
    original_text: str
    spun_text: str


@dataclass(frozen=True)
class SweepPoint:
    threshold: float
    flagged_count: int
    true_positive_rate: float
    false_positive_rate: float
    f1: float

    def to_json_dict(self) -> dict:
        return {
            "threshold": self.threshold,
            "flagged_count": self.flagged_count,
            "true_positive_rate": self.true_positive_rate,
            "false_positive_rate": self.false_positive_rate,
            "f1": self.f1,
        }


class EvalMode(Enum):
    RETRIEVAL_AUGMENTED = "retrieval"
    NO_CORPUS_BASELINE = "no-corpus"
    STATIC_DICTIONARY_BASELINE = "dictionary"


def _normalized_words(text: str) -> list[str]:
    """Lowercase, drop punctuation, collapse whitespace, fold a trailing 's'."""
    cleaned = _PUNCT_RE.sub(" ", text.lower())
    words = cleaned.split()
    return [w[:-1] if len(w) >= 2 and w.endswith("s") else w for w in words]


def smart_match(restored: str, gold: str) -> bool:
    """Exact match after normalization, with acronym equivalence.

    Normalization folds case, punctuation, whitespace, and trailing-s
    plurals. A single word additionally matches the concatenated initials
    of the other side's words ("svm" vs "support vector machine").
    """
    if not restored or not gold:
        return False
    a = _normalized_words(restored)
    b = _normalized_words(gold)
    if not a or not b:
        return False
    if a == b:
        return True
    if len(a) == 1 and len(b) > 1 and a[0] == "".join(w[0] for w in b):
        return True
    if len(b) == 1 and len(a) > 1 and b[0] == "".join(w[0] for w in a):
        return True
    return False


def _contains_token_seq(haystack: str, needle: str) -> bool:
    h = words_of(haystack)
    n = words_of(needle)
    if not n or len(n) > len(h):
        return False
    return any(h[i : i + len(n)] == n for i in range(len(h) - len(n) + 1))


def validate_pair(pair: AnnotatedPair) -> None:
    if not pair.tortured_phrase.strip():
        raise FixtureError("pair has an empty tortured_phrase")
    if not pair.expected_original.strip():
        raise FixtureError("pair has an empty expected_original")
    if not pair.source_context.strip():
        raise FixtureError("pair has an empty source_context")
    if not _contains_token_seq(pair.source_context, pair.expected_original):
        raise FixtureError(f"expected_original {pair.expected_original!r} does not occur verbatim in source_context")


def load_pairs_jsonl(path: str | Path) -> list[AnnotatedPair]:
    pairs = []
    for line_no, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
            pair = AnnotatedPair(
                tortured_phrase=rec["tortured_phrase"],
                expected_original=rec["expected_original"],
                source_context=rec["source_context"],
                tortured_sentence=rec.get("tortured_sentence"),
            )
        except (ValueError, KeyError, TypeError) as exc:
            raise FixtureError(f"{path}:{line_no}: malformed pair record: {exc}") from exc
        validate_pair(pair)
        pairs.append(pair)
    if not pairs:
        raise FixtureError(f"{path}: no pairs found")
    return pairs


def save_pairs_jsonl(pairs: list[AnnotatedPair], path: str | Path) -> None:
    lines = []
    for p in pairs:
        rec = {
            "tortured_phrase": p.tortured_phrase,
            "expected_original": p.expected_original,
            "source_context": p.source_context,
        }
        if p.tortured_sentence is not None:
            rec["tortured_sentence"] = p.tortured_sentence
        lines.append(json.dumps(rec, ensure_ascii=False))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_parallel_pairs(directory: str | Path) -> list[ParallelDocPair]:
    root = Path(directory)
    pairs = []
    for orig in sorted(root.glob("*.orig.txt")):
        pair_id = orig.name[: -len(".orig.txt")]
        spun = root / f"{pair_id}.spun.txt"
        if not spun.is_file():
            raise FixtureError(f"missing spun mate for {orig.name}")
        original_text = orig.read_text(encoding="utf-8")
        spun_text = spun.read_text(encoding="utf-8")
        if not original_text.strip() or not spun_text.strip():
            raise FixtureError(f"pair {pair_id}: empty document")
        pairs.append(ParallelDocPair(pair_id=pair_id, original_text=original_text, spun_text=spun_text))
    if not pairs:
        raise FixtureError(f"no *.orig.txt/*.spun.txt pairs under {root}")
    return pairs


def load_labeled_phrases(path: str | Path) -> list[tuple[str, bool]]:
    out = []
    for line_no, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
            out.append((str(rec["phrase"]), bool(rec["is_tortured"])))
        except (ValueError, KeyError, TypeError) as exc:
            raise FixtureError(f"{path}:{line_no}: malformed labeled phrase: {exc}") from exc
    if not out:
        raise FixtureError(f"{path}: no labeled phrases found")
    return out


def load_dictionary(path: str | Path) -> list[str]:
    terms = [line.strip() for line in Path(path).read_text(encoding="utf-8").splitlines()]
    terms = [t for t in terms if t]
    if not terms:
        raise FixtureError(f"{path}: empty term dictionary")
    return terms


def reference_scorer_for_pairs(pairs: list[AnnotatedPair]) -> ReferenceMlmScorer:
    """Reference scorer whose language model is the union of the pair contexts."""
    return ReferenceMlmScorer(BigramTable.from_texts(p.source_context for p in pairs))


@dataclass
class PairOutcome:
    pair_index: int
    matched: bool
    statuses: list[str]
    restored_terms: list[str]
    expected_original: str

    def to_json_dict(self) -> dict:
        return {
            "pair_index": self.pair_index,
            "matched": self.matched,
            "statuses": self.statuses,
            "restored_terms": self.restored_terms,
            "expected_original": self.expected_original,
        }


@dataclass
class RestorationEvalReport:
    mode: EvalMode
    n_pairs: int
    em_at_1: float
    outcomes: list[PairOutcome]
    scorer_name: str
    embedder_name: str
    config: PipelineConfig

    def to_json_dict(self) -> dict:
        return {
            "mode": self.mode.value,
            "n_pairs": self.n_pairs,
            "em_at_1": self.em_at_1,
            "backends": {"scorer": self.scorer_name, "embedder": self.embedder_name},
            "config": self.config.to_json_dict(),
            "outcomes": [o.to_json_dict() for o in self.outcomes],
        }


_MODE_TABLE_ROWS = {
    EvalMode.NO_CORPUS_BASELINE: ("no-corpus baseline", "pseudo-perplexity", "internal only"),
    EvalMode.RETRIEVAL_AUGMENTED: ("retrieval-augmented", "pseudo-perplexity", "source alignment"),
    EvalMode.STATIC_DICTIONARY_BASELINE: ("static-dictionary baseline", "none", "nearest dictionary term"),
}


def format_results_table(reports: list[RestorationEvalReport]) -> str:
    """Aligned plain-text accuracy table, one row per evaluated configuration."""
    header = ("Configuration", "Detection Strategy", "Restoration Strategy", "Accuracy")
    rows = [header]
    for report in reports:
        label, detection, restoration = _MODE_TABLE_ROWS[report.mode]
        rows.append((label, detection, restoration, f"{report.em_at_1 * 100:.2f}%"))
    widths = [max(len(r[c]) for r in rows) for c in range(4)]
    lines = []
    for i, row in enumerate(rows):
        lines.append("  ".join(cell.ljust(widths[c]) for c, cell in enumerate(row)).rstrip())
        if i == 0:
            lines.append("  ".join("-" * widths[c] for c in range(4)))
    return "\n".join(lines) + "\n"


def run_restoration_eval(
    pairs: list[AnnotatedPair],
    mode: EvalMode,
    scorer: MlmScorerBackend,
    embedder: EmbedderBackend,
    config: PipelineConfig = PipelineConfig(),
    dictionary_terms: list[str] | None = None,
    jobs: int = 1,
    multi_doc: bool = False,
) -> RestorationEvalReport:
    """EM@1 restoration accuracy over annotated pairs.

    In retrieval-augmented mode each pair's source context is indexed as a
    one-document corpus before its tortured text is analyzed; a pair counts
    as matched when any RESTORED finding smart-matches the expected term.
    With ``multi_doc`` the contexts of all pairs form one shared corpus, so
    retrieval itself can miss (imperfect-retrieval condition, reported
    separately). The no-corpus mode analyzes against an empty index, so
    nothing can ever be restored. The dictionary mode ignores detection
    entirely and maps the tortured phrase to its nearest dictionary term.
    """
    if not pairs:
        raise FixtureError("no pairs to evaluate")
    for pair in pairs:
        validate_pair(pair)
    outcomes: list[PairOutcome] = []

    shared_index = None
    shared_reader = None
    if mode is EvalMode.RETRIEVAL_AUGMENTED and multi_doc:
        shared_index = CorpusIndex(dim=embedder.dim, backend_name=embedder.name)
        texts = {}
        for i, pair in enumerate(pairs):
            doc_id = f"pair-{i:04d}-source"
            shared_index.add(doc_id, embed_document_text(pair.source_context, embedder))
            texts[doc_id] = pair.source_context
        shared_reader = InMemorySourceReader(texts)

    if mode is EvalMode.STATIC_DICTIONARY_BASELINE:
        if not dictionary_terms:
            raise FixtureError("dictionary mode requires a term dictionary")
        term_matrix = embedder.embed(dictionary_terms).astype(np.float64)
        for i, pair in enumerate(pairs):
            query = embedder.embed_one(pair.tortured_phrase).astype(np.float64)
            best = int(np.argmax(term_matrix @ query))
            restored = dictionary_terms[best]
            outcomes.append(
                PairOutcome(
                    pair_index=i,
                    matched=smart_match(restored, pair.expected_original),
                    statuses=["DICTIONARY"],
                    restored_terms=[restored],
                    expected_original=pair.expected_original,
                )
            )
    else:

        def evaluate_pair(item: tuple[int, AnnotatedPair]) -> PairOutcome:
            i, pair = item
            if mode is EvalMode.RETRIEVAL_AUGMENTED and multi_doc:
                index, reader = shared_index, shared_reader
            elif mode is EvalMode.RETRIEVAL_AUGMENTED:
                doc_id = f"pair-{i:04d}-source"
                index = CorpusIndex(dim=embedder.dim, backend_name=embedder.name)
                index.add(doc_id, embed_document_text(pair.source_context, embedder))
                reader = InMemorySourceReader({doc_id: pair.source_context})
            else:
                index = CorpusIndex(dim=embedder.dim, backend_name=embedder.name)
                reader = None
            suspect = pair.tortured_sentence or pair.tortured_phrase
            report = analyze(
                suspect,
                index,
                scorer,
                embedder,
                config,
                source_reader=reader,
                doc_id=f"pair-{i:04d}",
            )
            restored_terms = [f.restored_term for f in report.findings if f.status is FindingStatus.RESTORED]
            matched = any(smart_match(term, pair.expected_original) for term in restored_terms if term)
            return PairOutcome(
                pair_index=i,
                matched=matched,
                statuses=[f.status.value for f in report.findings],
                restored_terms=[t for t in restored_terms if t],
                expected_original=pair.expected_original,
            )

        items = list(enumerate(pairs))
        if jobs > 1:
            from concurrent.futures import ThreadPoolExecutor

            with ThreadPoolExecutor(max_workers=jobs) as pool:
                outcomes = list(pool.map(evaluate_pair, items))
        else:
            outcomes = [evaluate_pair(item) for item in items]

    em = sum(1 for o in outcomes if o.matched) / len(outcomes)
    return RestorationEvalReport(
        mode=mode,
        n_pairs=len(pairs),
        em_at_1=em,
        outcomes=outcomes,
        scorer_name=scorer.name,
        embedder_name=embedder.name,
        config=config,
    )


def run_threshold_sweep(
    labeled_phrases: list[tuple[str, bool]],
    scorer: MlmScorerBackend,
    thresholds: list[float],
) -> list[SweepPoint]:
    """Flag counts and detection F1 at each threshold (thresholds ascending).

    Flag decisions reuse the detector's strict "score < threshold" rule, so
    counts are monotone non-decreasing in the threshold.
    """
    if not labeled_phrases:
        raise FixtureError("no labeled phrases to sweep")
    if sorted(thresholds) != list(thresholds):
        raise ValueError("thresholds must be sorted ascending")
    scores = []
    for phrase, is_tortured in labeled_phrases:
        logprobs = scorer.score_tokens(phrase)
        scores.append((sum(logprobs) / len(logprobs), is_tortured))
    positives = sum(1 for _, t in scores if t)
    negatives = len(scores) - positives
    points = []
    for threshold in thresholds:
        tp = sum(1 for s, t in scores if t and s < threshold)
        fp = sum(1 for s, t in scores if not t and s < threshold)
        flagged = tp + fp
        tpr = tp / positives if positives else 0.0
        fpr = fp / negatives if negatives else 0.0
        precision = tp / flagged if flagged else 0.0
        f1 = 2 * precision * tpr / (precision + tpr) if precision + tpr > 0 else 0.0
        points.append(
            SweepPoint(
                threshold=threshold,
                flagged_count=flagged,
                true_positive_rate=tpr,
                false_positive_rate=fpr,
                f1=f1,
            )
        )
    return points


@dataclass
class AlignmentRobustnessReport:
    n_pairs: int
    n_sentences: int
    min_similarity: float
    median_similarity: float
    max_similarity: float
    fraction_above_gate: float
    per_pair_medians: list[float]

    def to_json_dict(self) -> dict:
        return {
            "n_pairs": self.n_pairs,
            "n_sentences": self.n_sentences,
            "min_similarity": self.min_similarity,
            "median_similarity": self.median_similarity,
            "max_similarity": self.max_similarity,
            "fraction_above_gate": self.fraction_above_gate,
            "per_pair_medians": self.per_pair_medians,
        }


def run_alignment_robustness(
    pairs: list[ParallelDocPair],
    embedder: EmbedderBackend,
    cfg: RestorationConfig = RestorationConfig(),
) -> AlignmentRobustnessReport:
    """Best-alignment similarity of every spun sentence against its original."""
    if not pairs:
        raise FixtureError("no parallel pairs to evaluate")
    all_sims: list[float] = []
    per_pair_medians: list[float] = []
    for pair in pairs:
        orig_doc = analyze_document(f"{pair.pair_id}.orig", pair.original_text)
        spun_doc = analyze_document(f"{pair.pair_id}.spun", pair.spun_text)
        if not orig_doc.sentences or not spun_doc.sentences:
            raise FixtureError(f"pair {pair.pair_id}: a document has no sentences")
        sims = []
        for i in range(len(spun_doc.sentences)):
            result = align_sentence(spun_doc.sentence_text(i), orig_doc, embedder, cfg)
            sims.append(result.similarity)
        all_sims.extend(sims)
        per_pair_medians.append(statistics.median(sims))
    return AlignmentRobustnessReport(
        n_pairs=len(pairs),
        n_sentences=len(all_sims),
        min_similarity=min(all_sims),
        median_similarity=statistics.median(all_sims),
        max_similarity=max(all_sims),
        fraction_above_gate=sum(1 for s in all_sims if s >= cfg.t_align) / len(all_sims),
        per_pair_medians=per_pair_medians,
    )
