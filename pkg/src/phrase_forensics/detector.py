"""Phrase likelihood scoring and static-threshold flagging.

A candidate window's score is the length-normalized sum of its per-token
log-probabilities; windows scoring strictly below the anomaly threshold
are flagged. Overlapping flagged windows within a sentence are merged
into maximal character spans so each obfuscated term yields one finding.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

from .backends import MlmScorerBackend
from .errors import BackendError, PhraseForensicsError
from .textmodel import AnalyzedDocument, PhraseWindow, extract_windows


@dataclass(frozen=True)
class PhraseScore:
    window: PhraseWindow
    s_phrase: float
    token_count: int
    flagged: bool = False


@dataclass(frozen=True)
class DetectorConfig:
    t_anomaly: float = -8.0
    min_window: int = 2
    max_window: int = 4

    def __post_init__(self):
        if not self.t_anomaly < 0:
            raise ValueError(f"t_anomaly must be negative, got {self.t_anomaly}")
        if not (1 <= self.min_window <= self.max_window):
            raise ValueError(f"bad window bounds {self.min_window}..{self.max_window}")


def score_phrase(window: PhraseWindow, scorer: MlmScorerBackend) -> PhraseScore:
    """Mean per-token log-probability of one window; ``flagged`` left False."""
    try:
        logprobs = scorer.score_tokens(window.text)
    except PhraseForensicsError:
        raise
    except Exception as exc:
        raise BackendError(str(exc), context=window.text) from exc
    if not logprobs:
        raise BackendError("scorer returned no token scores", context=window.text)
    return PhraseScore(window=window, s_phrase=sum(logprobs) / len(logprobs), token_count=len(logprobs))


def apply_threshold(score: PhraseScore, cfg: DetectorConfig) -> PhraseScore:
    """Flag iff s_phrase < t_anomaly; a score exactly at the threshold passes."""
    return replace(score, flagged=score.s_phrase < cfg.t_anomaly)


def _merge_sentence_flags(flagged: list[PhraseScore], doc: AnalyzedDocument) -> list[PhraseScore]:
    """Merge overlapping flagged windows of one sentence into maximal spans.

    The merged span keeps the minimum (most anomalous) score of its members,
    along with that member's token count.
    """
    ordered = sorted(flagged, key=lambda s: (s.window.char_span[0], s.window.char_span[1]))
    merged: list[PhraseScore] = []
    group: list[PhraseScore] = []
    group_end = -1

    def close_group():
        start = min(s.window.char_span[0] for s in group)
        end = max(s.window.char_span[1] for s in group)
        worst = min(group, key=lambda s: s.s_phrase)
        t_start = min(s.window.token_start for s in group)
        t_end = max(s.window.token_start + s.window.token_len for s in group)
        window = PhraseWindow(
            sentence_index=group[0].window.sentence_index,
            token_start=t_start,
            token_len=t_end - t_start,
            text=doc.raw_text[start:end],
            char_span=(start, end),
        )
        merged.append(PhraseScore(window=window, s_phrase=worst.s_phrase, token_count=worst.token_count, flagged=True))

    for score in ordered:
        start, end = score.window.char_span
        if group and start < group_end:
            group.append(score)
            group_end = max(group_end, end)
        else:
            if group:
                close_group()
            group = [score]
            group_end = end
    if group:
        close_group()
    return merged


def detect_document(
    doc: AnalyzedDocument,
    scorer: MlmScorerBackend,
    cfg: DetectorConfig = DetectorConfig(),
    jobs: int = 1,
) -> list[PhraseScore]:
    """Score every candidate window and return merged flagged spans in document order."""
    windows = extract_windows(doc, cfg.min_window, cfg.max_window)
    if not windows:
        return []
    texts = [w.text for w in windows]
    try:
        if jobs > 1:
            chunks = [texts[i::jobs] for i in range(jobs)]
            with ThreadPoolExecutor(max_workers=jobs) as pool:
                scored_chunks = list(pool.map(scorer.score_batch, chunks))
            all_scores: list[list[float]] = [None] * len(texts)  # type: ignore[list-item]
            for lane, chunk_scores in enumerate(scored_chunks):
                for j, s in enumerate(chunk_scores):
                    all_scores[lane + j * jobs] = s
        else:
            all_scores = scorer.score_batch(texts)
    except PhraseForensicsError:
        raise
    except Exception as exc:
        raise BackendError(str(exc), context=f"scoring {len(texts)} windows") from exc

    by_sentence: dict[int, list[PhraseScore]] = {}
    for window, logprobs in zip(windows, all_scores):
        if not logprobs:
            raise BackendError("scorer returned no token scores", context=window.text)
        score = apply_threshold(
            PhraseScore(window=window, s_phrase=sum(logprobs) / len(logprobs), token_count=len(logprobs)),
            cfg,
        )
        if score.flagged:
            by_sentence.setdefault(window.sentence_index, []).append(score)

    merged: list[PhraseScore] = []
    for sentence_index in sorted(by_sentence):
        merged.extend(_merge_sentence_flags(by_sentence[sentence_index], doc))
    merged.sort(key=lambda s: s.window.char_span)
    return merged
