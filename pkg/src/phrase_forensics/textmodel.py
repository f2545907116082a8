"""Canonical document representation.

Deterministic, rule-based sentence segmentation, word tokenization, and
sliding-window phrase extraction. All offsets are character offsets
(Unicode scalar values) into the original text, so every span maps back
to a verbatim substring.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

# Abbreviations that end with "." but do not terminate a sentence even when
# followed by whitespace and an uppercase letter. Matched case-insensitively
# at a word boundary.
ABBREVIATIONS: tuple[str, ...] = (
    "e.g.",
    "i.e.",
    "et al.",
    "al.",
    "cf.",
    "vs.",
    "fig.",
    "figs.",
    "eq.",
    "eqs.",
    "sec.",
    "ref.",
    "refs.",
    "no.",
    "ca.",
    "resp.",
    "dr.",
    "prof.",
)

_TERMINATORS = frozenset(".!?")

# Maximal runs of alphanumeric / hyphen / apostrophe characters; underscores
# count as punctuation. Runs without any alphanumeric (e.g. "--") are dropped.
_TOKEN_RE = re.compile(r"(?:[^\W_]|['-])+", re.UNICODE)
_HAS_ALNUM_RE = re.compile(r"[^\W_]", re.UNICODE)


@dataclass(frozen=True)
class TokenSpan:
    """Half-open character span [start, end) of one word token."""

    start: int
    end: int


@dataclass(frozen=True)
class SentenceSpan:
    """Half-open character span of one sentence plus its word tokens."""

    start: int
    end: int
    tokens: tuple[TokenSpan, ...]


@dataclass(frozen=True)
class AnalyzedDocument:
    doc_id: str
    raw_text: str
    sentences: tuple[SentenceSpan, ...]

    def sentence_text(self, index: int) -> str:
        s = self.sentences[index]
        return self.raw_text[s.start : s.end]

    def token_text(self, token: TokenSpan) -> str:
        return self.raw_text[token.start : token.end]


@dataclass(frozen=True)
class PhraseWindow:
    """A within-sentence word n-gram candidate."""

    sentence_index: int
    token_start: int
    token_len: int
    text: str
    char_span: tuple[int, int]


def _ends_with_abbreviation(text: str, end: int) -> bool:
    """True if text[:end] ends with a guarded abbreviation at a word boundary."""
    prefix = text[:end].lower()
    for abbr in ABBREVIATIONS:
        if not prefix.endswith(abbr):
            continue
        before = end - len(abbr) - 1
        if before < 0 or not (text[before].isalnum() or text[before] in "'-"):
            return True
    return False


def segment_sentences(raw_text: str) -> list[SentenceSpan]:
    """Split text into sentence spans.

    A sentence ends at a run of ``.``, ``!``, ``?`` that is followed by
    whitespace and an uppercase letter (or by end of text). A single ``.``
    preceded by an entry of ``ABBREVIATIONS`` never splits. Leading and
    trailing whitespace is excluded from each span; trailing text without a
    terminator forms a final sentence. Total and deterministic.
    """
    n = len(raw_text)
    spans: list[tuple[int, int]] = []
    start = 0
    i = 0
    while i < n:
        if raw_text[i] not in _TERMINATORS:
            i += 1
            continue
        j = i
        while j < n and raw_text[j] in _TERMINATORS:
            j += 1
        run_len = j - i
        is_boundary = False
        if j >= n:
            is_boundary = True
        else:
            k = j
            while k < n and raw_text[k].isspace():
                k += 1
            if k > j and k < n and raw_text[k].isupper():
                is_boundary = True
        if is_boundary and run_len == 1 and raw_text[i] == "." and _ends_with_abbreviation(raw_text, j):
            is_boundary = False
        if is_boundary:
            spans.append((start, j))
            start = j
        i = j
    if start < n:
        spans.append((start, n))

    out: list[SentenceSpan] = []
    for s, e in spans:
        while s < e and raw_text[s].isspace():
            s += 1
        while e > s and raw_text[e - 1].isspace():
            e -= 1
        if e > s:
            out.append(SentenceSpan(start=s, end=e, tokens=word_spans(raw_text, s, e)))
    return out


def word_spans(text: str, start: int = 0, end: int | None = None) -> tuple[TokenSpan, ...]:
    """Token spans within text[start:end], offsets absolute into ``text``."""
    region = text[start : len(text) if end is None else end]
    spans = []
    for m in _TOKEN_RE.finditer(region):
        if _HAS_ALNUM_RE.search(m.group()):
            spans.append(TokenSpan(start + m.start(), start + m.end()))
    return tuple(spans)


def tokenize_words(sentence: SentenceSpan, raw_text: str) -> list[TokenSpan]:
    """Word tokens of one sentence: maximal alphanumeric/hyphen/apostrophe runs."""
    return list(word_spans(raw_text, sentence.start, sentence.end))


def words_of(text: str) -> list[str]:
    """Token strings of a bare string, in order, original case."""
    return [text[t.start : t.end] for t in word_spans(text)]


def analyze_document(doc_id: str, raw_text: str) -> AnalyzedDocument:
    """Segment and tokenize a document into its canonical representation."""
    return AnalyzedDocument(doc_id=doc_id, raw_text=raw_text, sentences=tuple(segment_sentences(raw_text)))


def extract_windows(doc: AnalyzedDocument, min_len: int, max_len: int) -> list[PhraseWindow]:
    """All within-sentence word n-grams with min_len <= n <= max_len, stride 1.

    Windows are ordered by (sentence, first token, length) and never cross a
    sentence boundary. A sentence with W words contributes max(0, W - n + 1)
    windows for each fixed n.
    """
    if not (1 <= min_len <= max_len):
        raise ValueError(f"window bounds must satisfy 1 <= min_len <= max_len, got {min_len}..{max_len}")
    windows: list[PhraseWindow] = []
    for s_idx, sentence in enumerate(doc.sentences):
        toks = sentence.tokens
        w = len(toks)
        for t_start in range(w):
            for n in range(min_len, max_len + 1):
                t_end = t_start + n
                if t_end > w:
                    break
                c_start = toks[t_start].start
                c_end = toks[t_end - 1].end
                windows.append(
                    PhraseWindow(
                        sentence_index=s_idx,
                        token_start=t_start,
                        token_len=n,
                        text=doc.raw_text[c_start:c_end],
                        char_span=(c_start, c_end),
                    )
                )
    return windows
