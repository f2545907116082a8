"""Deterministic fixture generators for the evaluation harness.

All generators are seeded and reproducible: identical seeds produce
identical fixtures, byte for byte. The planted-pair generator verifies
its own output end to end (each tortured document must be restorable by
the reference backend) and resamples any pair that fails, so shipped
fixtures are restorable by construction.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass
from hashlib import blake2b
from importlib import resources
from pathlib import Path

from .backends import BigramTable, EmbedderBackend, ReferenceEmbedder, ReferenceMlmScorer
from .errors import FixtureError
from .evaluation import (
    AnnotatedPair,
    EvalMode,
    ParallelDocPair,
    run_restoration_eval,
    save_pairs_jsonl,
)
from .pipeline import PipelineConfig
from .textmodel import words_of


@dataclass(frozen=True)
class SwapEntry:
    original: str
    tortured: str


def load_swap_table(path: str | Path | None = None) -> list[SwapEntry]:
    """Swap table shipped as package data, or a user-provided JSON file."""
    if path is None:
        raw = resources.files("phrase_forensics").joinpath("data/swap_table.json").read_text("utf-8")
    else:
        raw = Path(path).read_text(encoding="utf-8")
    try:
        entries = [SwapEntry(e["original"], e["tortured"]) for e in json.loads(raw)["entries"]]
    except (ValueError, KeyError, TypeError) as exc:
        raise FixtureError(f"malformed swap table: {exc}") from exc
    if not entries:
        raise FixtureError("swap table has no entries")
    return entries


def _rng(*parts) -> random.Random:
    digest = blake2b("|".join(str(p) for p in parts).encode("utf-8"), digest_size=8).digest()
    return random.Random(int.from_bytes(digest, "little"))


_SYLLABLES = (
    "ba", "ce", "di", "fo", "gu", "ha", "ke", "li", "mo", "nu",
    "pa", "qui", "ra", "se", "ti", "vo", "wa", "xe", "yo", "zu",
)


def _pseudo_word(rng: random.Random, taken: set[str]) -> str:
    while True:
        word = "".join(rng.choice(_SYLLABLES) for _ in range(rng.choice((3, 4))))
        if word not in taken:
            taken.add(word)
            return word


# Sentence frames for planted pairs; the term slot is sentence-final so the
# flagged span cannot extend past the obfuscated term.
_FRAMES = (
    "In this report the evaluation team examined the {}.",
    "The present survey describes measurements collected for the {}.",
    "This section summarizes the observed behaviour of the {}.",
    "The authors compared reference outputs against the {}.",
    "Repeated trials confirmed consistent findings for the {}.",
    "The closing discussion reviews evidence supporting the {}.",
)

_FILLERS = (
    "procedure", "baseline", "dataset", "corpus", "metric", "protocol", "study",
    "design", "sample", "cohort", "control", "variable", "estimate", "parameter",
    "archive", "record", "appendix", "summary", "outcome", "measure", "criterion",
    "interval", "margin", "factor", "domain", "context", "source", "tabulated",
    "values", "periodic", "subjects", "sessions", "phases", "series", "stable",
    "reported", "comparisons", "aggregated", "intervals", "observations",
)


def _frame_vocabulary() -> set[str]:
    vocab: set[str] = set()
    for frame in _FRAMES:
        vocab.update(w.lower() for w in words_of(frame.format("x")) if w != "x")
    return vocab


def _ballast_pool() -> list[str]:
    return sorted(_frame_vocabulary() | set(_FILLERS))


def _check_table_vocabulary(table: list[SwapEntry], pool: list[str]) -> None:
    pool_set = set(pool)
    for entry in table:
        orig_words = [w.lower() for w in words_of(entry.original)]
        tort_words = [w.lower() for w in words_of(entry.tortured)]
        if not set(orig_words) & set(tort_words):
            raise FixtureError(
                f"swap entry {entry.tortured!r} -> {entry.original!r} shares no words; "
                "the scanner could never anchor the original term"
            )
        for word in orig_words + tort_words:
            if word in pool_set:
                raise FixtureError(
                    f"swap-table word {word!r} collides with the ballast vocabulary; "
                    "planted terms must stay rare in the generated corpus"
                )


def _build_planted_pair(
    index: int,
    attempt: int,
    seed: int,
    table: list[SwapEntry],
    pool: list[str],
    ballast_sentences: int,
    unique_words: int,
    taken_words: set[str],
) -> AnnotatedPair:
    rng = _rng(seed, "planted", index, attempt)
    entry = table[index % len(table)] if attempt == 0 else rng.choice(table)
    frame = rng.choice(_FRAMES)
    sentences = []
    for _ in range(ballast_sentences):
        body = " ".join(rng.choice(pool) for _ in range(8))
        sentences.append(f"The {body}.")
    uniques = [_pseudo_word(rng, taken_words) for _ in range(unique_words)]
    for start in range(0, len(uniques), 12):
        sentences.append("The archive additionally indexes " + " ".join(uniques[start : start + 12]) + ".")
    sentences.append(frame.format(entry.original))
    return AnnotatedPair(
        tortured_phrase=entry.tortured,
        expected_original=entry.original,
        source_context=" ".join(sentences),
        tortured_sentence=frame.format(entry.tortured),
    )


def generate_planted_pairs(
    n_pairs: int,
    seed: int = 0,
    swap_table: list[SwapEntry] | None = None,
    embedder: EmbedderBackend | None = None,
    config: PipelineConfig = PipelineConfig(),
    ballast_sentences: int | None = None,
    unique_words: int | None = None,
    max_rounds: int = 12,
) -> list[AnnotatedPair]:
    """Pairs whose tortured documents are restorable by the reference backend.

    Each pair plants a swap-table term at the end of a frame sentence inside
    a large ballast context, which keeps the obfuscated words rare enough to
    flag and the frame aligned to its source sentence. After construction
    the whole fixture is evaluated end to end; any pair the pipeline fails
    to restore is resampled until the fixture evaluates at EM@1 = 1.0.

    Ballast and vocabulary budgets default to corpus-wide targets (about
    1e5 tokens and 1.1e3 distinct words across all contexts) so the
    reference scorer's rare-word and unseen-bigram penalties stay strong
    for any pair count.
    """
    if n_pairs < 1:
        raise FixtureError("n_pairs must be >= 1")
    table = swap_table or load_swap_table()
    pool = _ballast_pool()
    _check_table_vocabulary(table, pool)
    if embedder is None:
        embedder = ReferenceEmbedder()
    term_reuse = -(-n_pairs // len(table))
    token_target = max(100_000, 15_000 * term_reuse)
    if ballast_sentences is None:
        ballast_sentences = -(-token_target // (n_pairs * 9))
    if unique_words is None:
        unique_words = -(-1_100 // n_pairs)
    taken: set[str] = set(pool)
    for entry in table:
        taken.update(w.lower() for w in words_of(entry.original) + words_of(entry.tortured))

    attempts = [0] * n_pairs
    pairs = [
        _build_planted_pair(i, 0, seed, table, pool, ballast_sentences, unique_words, taken)
        for i in range(n_pairs)
    ]
    for _ in range(max_rounds):
        scorer = ReferenceMlmScorer(BigramTable.from_texts(p.source_context for p in pairs))
        report = run_restoration_eval(pairs, EvalMode.RETRIEVAL_AUGMENTED, scorer, embedder, config)
        failed = [o.pair_index for o in report.outcomes if not o.matched]
        if not failed:
            return pairs
        for i in failed:
            attempts[i] += 1
            pairs[i] = _build_planted_pair(
                i, attempts[i], seed, table, pool, ballast_sentences, unique_words, taken
            )
    raise FixtureError(f"could not build a fully restorable fixture after {max_rounds} rounds")


def write_planted_pairs(pairs: list[AnnotatedPair], path: str | Path) -> None:
    save_pairs_jsonl(pairs, path)


_SPUN_POOL = tuple(_ballast_pool())


def generate_spun_pairs(
    n_pairs: int,
    seed: int = 0,
    swap_fraction: float = 0.4,
    sentences_per_doc: int = 8,
    words_per_sentence: int = 9,
) -> list[ParallelDocPair]:
    """Parallel original/spun documents with a controlled word-swap rate.

    The spun copy replaces each word independently with probability
    ``swap_fraction`` by a pseudo-word absent from the original vocabulary,
    which degrades sentence similarity monotonically in the swap rate.
    """
    if not (0.0 <= swap_fraction <= 1.0):
        raise FixtureError(f"swap_fraction must be in [0, 1], got {swap_fraction}")
    pairs = []
    taken: set[str] = set(_SPUN_POOL)
    for p in range(n_pairs):
        rng = _rng(seed, "spun", p)
        orig_sentences = []
        spun_sentences = []
        for _ in range(sentences_per_doc):
            words = [rng.choice(_SPUN_POOL) for _ in range(words_per_sentence)]
            spun_words = [
                _pseudo_word(rng, taken) if rng.random() < swap_fraction else w
                for w in words
            ]
            orig_sentences.append("The " + " ".join(words) + ".")
            spun_sentences.append("The " + " ".join(spun_words) + ".")
        pairs.append(
            ParallelDocPair(
                pair_id=f"pair{p:03d}",
                original_text=" ".join(orig_sentences),
                spun_text=" ".join(spun_sentences),
            )
        )
    return pairs


def write_parallel_pairs(pairs: list[ParallelDocPair], directory: str | Path) -> None:
    root = Path(directory)
    root.mkdir(parents=True, exist_ok=True)
    for pair in pairs:
        (root / f"{pair.pair_id}.orig.txt").write_text(pair.original_text, encoding="utf-8")
        (root / f"{pair.pair_id}.spun.txt").write_text(pair.spun_text, encoding="utf-8")


@dataclass
class LabeledFixture:
    """Sweep fixture: a corpus for the reference scorer plus labeled phrases."""

    corpus_text: str
    phrases: list[tuple[str, bool]]
    n_common: int
    n_jargon: int
    n_mild: int
    n_deep: int


# Score bands (with safety padding) that the labeled generator enforces, so a
# sweep over [-13, -8, -5] splits the groups unambiguously.
_BAND_COMMON = (-4.8, 0.0)
_BAND_JARGON = (-7.8, -5.2)
_BAND_MILD = (-12.8, -8.2)
_BAND_DEEP = (float("-inf"), -13.2)

_ANCHORS = (
    "The reported baseline procedure covered stable tabulated values throughout repeated sessions.",
    "The aggregated summary records periodic observations across consistent sample intervals.",
    "The documented protocol describes controlled comparisons between archived cohort measurements.",
)


def generate_labeled_fixture(
    seed: int = 0,
    n_common: int = 30,
    n_jargon: int = 10,
    n_mild: int = 10,
    n_deep: int = 10,
) -> LabeledFixture:
    """Labeled phrases in four separable score bands under the reference scorer.

    Common and rare-jargon phrases are valid (drawn from the corpus); mild
    and deep phrases are tortured (containing words absent from the corpus).
    Band membership is verified against the generated corpus and offending
    phrases are resampled, so the fixture is separable by construction.
    """
    rng = _rng(seed, "labeled")
    pool = _ballast_pool()
    taken: set[str] = set(pool)
    corpus_sentences = list(_ANCHORS) * 20
    jargon_words = []
    for _ in range(max(n_jargon, 1) * 2):
        word = _pseudo_word(rng, taken)
        follower = rng.choice(pool)
        jargon_words.append((word, follower))
        corpus_sentences.append(f"The specialised literature mentions {word} {follower} in passing.")
    for _ in range(80):
        uniques = " ".join(_pseudo_word(rng, taken) for _ in range(10))
        corpus_sentences.append(f"The appendix lists {uniques}.")
    order = _rng(seed, "labeled-order")
    order.shuffle(corpus_sentences)
    corpus_text = " ".join(corpus_sentences)

    scorer = ReferenceMlmScorer(BigramTable.from_texts([corpus_text]))

    def score(phrase: str) -> float:
        logprobs = scorer.score_tokens(phrase)
        return sum(logprobs) / len(logprobs)

    def sample_until(band: tuple[float, float], make, label: str) -> str:
        for attempt in range(200):
            phrase = make(attempt)
            if band[0] <= score(phrase) < band[1]:
                return phrase
        raise FixtureError(f"could not place a {label} phrase into band {band}")

    anchor_tokens = [words_of(a) for a in _ANCHORS]

    def make_common(_attempt: int) -> str:
        toks = rng.choice(anchor_tokens)
        i = rng.randrange(len(toks) - 1)
        return f"{toks[i]} {toks[i + 1]}"

    def make_jargon(_attempt: int) -> str:
        word, follower = rng.choice(jargon_words)
        return f"{word} {follower}"

    def make_mild(_attempt: int) -> str:
        toks = rng.choice(anchor_tokens)
        i = rng.randrange(len(toks) - 1)
        return f"{_pseudo_word(rng, taken)} {toks[i]} {toks[i + 1]}"

    def make_deep(_attempt: int) -> str:
        return f"{_pseudo_word(rng, taken)} {_pseudo_word(rng, taken)}"

    phrases: list[tuple[str, bool]] = []
    for _ in range(n_common):
        phrases.append((sample_until(_BAND_COMMON, make_common, "common"), False))
    for _ in range(n_jargon):
        phrases.append((sample_until(_BAND_JARGON, make_jargon, "jargon"), False))
    for _ in range(n_mild):
        phrases.append((sample_until(_BAND_MILD, make_mild, "mild"), True))
    for _ in range(n_deep):
        phrases.append((sample_until(_BAND_DEEP, make_deep, "deep"), True))
    return LabeledFixture(
        corpus_text=corpus_text,
        phrases=phrases,
        n_common=n_common,
        n_jargon=n_jargon,
        n_mild=n_mild,
        n_deep=n_deep,
    )


def write_labeled_fixture(fixture: LabeledFixture, directory: str | Path) -> tuple[Path, Path]:
    root = Path(directory)
    (root / "corpus").mkdir(parents=True, exist_ok=True)
    corpus_path = root / "corpus" / "reference.txt"
    corpus_path.write_text(fixture.corpus_text, encoding="utf-8")
    labeled_path = root / "labeled.jsonl"
    lines = [
        json.dumps({"phrase": phrase, "is_tortured": is_tortured}, ensure_ascii=False)
        for phrase, is_tortured in fixture.phrases
    ]
    labeled_path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return corpus_path, labeled_path


# ---------------------------------------------------------------------------
# Case-study fixture: a 20-document corpus, a plagiarized suspect document,
# plus mild and clean suspects for threshold behaviour.

_CS_BACKBONE = (
    "the", "study", "analyzed", "growth", "to", "determine", "treatment", "response",
    "documented", "protocol", "emphasized", "across", "repeated", "partitions",
    "measurements", "covered", "multiple", "batches", "baseline", "procedure",
    "sample", "estimate", "control", "variable", "archive", "records", "appendix",
    "outcome", "measure", "criterion", "interval", "margin", "factor", "domain",
    "context", "source", "design", "experiment", "cohort", "summary", "tabulated",
    "values", "periodic", "subjects", "trial", "phases", "series", "stable",
    "reported", "comparisons", "sessions", "throughout", "sampling", "aggregated",
    "observations",
)

_CS_KEY_SENTENCE = "The study analyzed growth cancer cell lines to determine treatment response."
_CS_BOOSTER_1 = "The cell measurements covered multiple cell batches across repeated sessions."
_CS_BOOSTER_2 = "The documented cell records tabulated stable lines throughout the sampling phases."
CASE_STUDY_TORTURED_SENTENCE = (
    "The study analyzed malignant growth cell lines to determine treatment response."
)
CASE_STUDY_MILD_SENTENCE = (
    "The documented protocol emphasized spectral kurtosis across repeated partitions."
)
_CS_RESERVED = {"cell", "lines", "cancer", "malignant", "spectral", "kurtosis"}
_CS_SEED = 13
CASE_STUDY_SOURCE_DOC = "source_doc_14.txt"


def _cs_soup_sentence(rng: random.Random) -> str:
    return "The " + " ".join(rng.choice(_CS_BACKBONE) for _ in range(8)) + "."


def _cs_jargon_sentence(rng: random.Random, taken: set[str]) -> str:
    return "The " + " ".join(_pseudo_word(rng, taken) for _ in range(10)) + "."


def write_case_study_fixture(root_dir: str | Path) -> None:
    """Write the shipped plagiarism walk-through fixture (fully deterministic).

    Layout: ``corpus/source_doc_01.txt`` .. ``source_doc_20.txt`` plus
    ``suspect.txt`` (a lightly obfuscated copy of passages from document 14),
    ``mild_suspect.txt`` (a borderline anomaly that a -13 threshold ignores),
    and ``clean_suspect.txt`` (verbatim corpus-attested text).
    """
    root = Path(root_dir)
    corpus_dir = root / "corpus"
    corpus_dir.mkdir(parents=True, exist_ok=True)
    taken = set(_CS_BACKBONE) | _CS_RESERVED

    special_rng = _rng(_CS_SEED, "case-special")
    special_a = _cs_jargon_sentence(special_rng, taken)
    special_b = _cs_jargon_sentence(special_rng, taken)

    for doc_num in range(1, 21):
        rng = _rng(_CS_SEED, "case-doc", doc_num)
        soup = [_cs_soup_sentence(rng) for _ in range(16)]
        if doc_num == 5:
            words = soup[3].split()
            words[4] = "spectral"
            soup[3] = " ".join(words)
        if doc_num == 9:
            words = soup[7].split()
            words[4] = "kurtosis"
            soup[7] = " ".join(words)
        if doc_num == 14:
            jargon = [_cs_jargon_sentence(rng, taken) for _ in range(10)]
            sentences = (
                soup
                + jargon
                + [_CS_KEY_SENTENCE, _CS_BOOSTER_1, _CS_BOOSTER_2]
                + [special_a, special_b] * 3
            )
        else:
            jargon = [_cs_jargon_sentence(rng, taken) for _ in range(14)]
            sentences = soup + jargon
        (corpus_dir / f"source_doc_{doc_num:02d}.txt").write_text(" ".join(sentences) + "\n", encoding="utf-8")

    suspect = " ".join([CASE_STUDY_TORTURED_SENTENCE, _CS_BOOSTER_1, special_a, special_b])
    (root / "suspect.txt").write_text(suspect + "\n", encoding="utf-8")

    mild = " ".join(
        [
            CASE_STUDY_MILD_SENTENCE,
            "The stable baseline procedure covered tabulated values throughout the sessions.",
        ]
    )
    (root / "mild_suspect.txt").write_text(mild + "\n", encoding="utf-8")

    clean_rng = _rng(_CS_SEED, "case-doc", 3)
    clean = " ".join([_cs_soup_sentence(clean_rng) for _ in range(2)])
    (root / "clean_suspect.txt").write_text(clean + "\n", encoding="utf-8")
