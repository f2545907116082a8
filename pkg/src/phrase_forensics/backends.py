"""Model backends: token-likelihood scoring and text embedding.

Two small interfaces decouple the analysis pipeline from any neural
dependency. The reference implementations here are fully deterministic
(hash-seeded embedder, Laplace bigram scorer) and are the default for
tests and CLI runs; the remote clients talk to an inference sidecar over
HTTP for real-model runs.
"""

from __future__ import annotations

import math
import struct
from abc import ABC, abstractmethod
from collections import Counter
from collections.abc import Callable, Iterable, Mapping, Sequence
from hashlib import blake2b

import numpy as np
import requests

from .errors import DimensionMismatch, EmptyText, ProtocolError, TransportError
from .textmodel import words_of

_MASK64 = (1 << 64) - 1
_SMOOTHING = 1e-10

# Upper bound for any log-probability after log(p + 1e-10) smoothing.
MAX_LOGPROB = math.log(1.0 + _SMOOTHING)


class MlmScorerBackend(ABC):
    """Per-token log-probability scorer for a phrase."""

    name: str

    @abstractmethod
    def score_tokens(self, phrase: str) -> list[float]:
        """Log-probability of each token of ``phrase``, all finite and <= 0."""

    def score_batch(self, phrases: Sequence[str]) -> list[list[float]]:
        return [self.score_tokens(p) for p in phrases]


class EmbedderBackend(ABC):
    """Fixed-dimension unit-norm text embedder."""

    name: str
    dim: int

    @abstractmethod
    def embed(self, texts: Sequence[str]) -> np.ndarray:
        """Embed texts into a (len(texts), dim) float32 array of unit rows."""

    def embed_one(self, text: str) -> np.ndarray:
        return self.embed([text])[0]


def _token_hash(token: str) -> int:
    """Stable 64-bit hash of a lowercased token (little-endian blake2b-8)."""
    return int.from_bytes(blake2b(token.encode("utf-8"), digest_size=8).digest(), "little")


def _token_direction(seed: int, token_hash: int, dim: int) -> np.ndarray:
    """Deterministic pseudo-random direction for one token.

    Stream recipe (the documented generator; tests re-derive it verbatim):
    for block j = 0, 1, ... take blake2b(key=None, digest_size=64) of the
    packed little-endian triple (seed mod 2**64, token_hash, j), split the
    64-byte digest into eight little-endian uint64 words, and map each word
    u to the float (u >> 11) * 2**-53 * 2 - 1, i.e. uniform in [-1, 1).
    The first ``dim`` values form the direction vector.
    """
    vals: list[float] = []
    j = 0
    while len(vals) < dim:
        digest = blake2b(struct.pack("<QQQ", seed & _MASK64, token_hash & _MASK64, j), digest_size=64).digest()
        for k in range(8):
            u = int.from_bytes(digest[8 * k : 8 * k + 8], "little")
            vals.append((u >> 11) * 2.0**-53 * 2.0 - 1.0)
        j += 1
    return np.array(vals[:dim], dtype=np.float64)


class ReferenceEmbedder(EmbedderBackend):
    """Deterministic bag-of-words embedder.

    A text embeds to the L2-normalized sum of its tokens' unit direction
    vectors. Token directions come from ``_token_direction`` seeded by
    (seed, 64-bit hash of the lowercased token), so identical token
    multisets embed identically, bit for bit, on every platform. Summation
    runs in sorted token order to keep addition order-independent.
    """

    def __init__(self, dim: int = 64, seed: int = 0):
        if dim < 8:
            raise ValueError(f"embedding dim must be >= 8, got {dim}")
        self.dim = dim
        self.seed = seed
        self.name = f"ref-embed(dim={dim},seed={seed})"
        self._cache: dict[str, np.ndarray] = {}

    def _token_vector(self, token: str) -> np.ndarray:
        vec = self._cache.get(token)
        if vec is None:
            direction = _token_direction(self.seed, _token_hash(token), self.dim)
            vec = direction / np.linalg.norm(direction)
            self._cache[token] = vec
        return vec

    def embed(self, texts: Sequence[str]) -> np.ndarray:
        out = np.empty((len(texts), self.dim), dtype=np.float32)
        for i, text in enumerate(texts):
            tokens = sorted(t.lower() for t in words_of(text))
            if not tokens:
                raise EmptyText(f"no word tokens in text: {text!r}")
            total = np.zeros(self.dim, dtype=np.float64)
            for tok in tokens:
                total += self._token_vector(tok)
            norm = np.linalg.norm(total)
            if norm == 0.0:
                raise ValueError("degenerate embedding: token vectors cancelled")
            out[i] = (total / norm).astype(np.float32)
        return out


class BigramTable:
    """Word unigram/bigram counts with Laplace smoothing over the vocabulary.

    Counts never cross text boundaries; tokens are lowercased words.
    """

    def __init__(self, unigrams: Counter, bigrams: Counter, contexts: Counter, total: int):
        self.unigrams = unigrams
        self.bigrams = bigrams
        self.contexts = contexts
        self.total = total
        self.vocab_size = len(unigrams)

    @classmethod
    def from_texts(cls, texts: Iterable[str]) -> "BigramTable":
        unigrams: Counter = Counter()
        bigrams: Counter = Counter()
        contexts: Counter = Counter()
        total = 0
        for text in texts:
            tokens = [t.lower() for t in words_of(text)]
            unigrams.update(tokens)
            total += len(tokens)
            for a, b in zip(tokens, tokens[1:]):
                bigrams[(a, b)] += 1
                contexts[a] += 1
        return cls(unigrams, bigrams, contexts, total)

    def p_unigram(self, token: str) -> float:
        if self.total == 0:
            return 0.0
        return self.unigrams.get(token, 0) / self.total

    def p_bigram(self, prev: str, token: str) -> float:
        """Laplace estimate (count(prev,token) + 1) / (count(prev,*) + V)."""
        if self.vocab_size == 0:
            return 0.0
        return (self.bigrams.get((prev, token), 0) + 1) / (self.contexts.get(prev, 0) + self.vocab_size)

    def content_hash(self) -> str:
        h = blake2b(digest_size=8)
        for token, count in sorted(self.unigrams.items()):
            h.update(f"u:{token}:{count};".encode("utf-8"))
        for (a, b), count in sorted(self.bigrams.items()):
            h.update(f"b:{a}:{b}:{count};".encode("utf-8"))
        return h.hexdigest()


class ReferenceMlmScorer(MlmScorerBackend):
    """Deterministic scorer over a ``BigramTable``.

    The first token scores log(p_unigram + 1e-10); each later token scores
    log(p_bigram + 1e-10) given its predecessor. Values are clamped to <= 0
    (the clamp only matters for degenerate one-word corpora).
    """

    def __init__(self, table: BigramTable):
        self.table = table
        self.name = f"ref-mlm({table.content_hash()})"

    def score_tokens(self, phrase: str) -> list[float]:
        tokens = [t.lower() for t in words_of(phrase)]
        if not tokens:
            raise EmptyText(f"no word tokens in phrase: {phrase!r}")
        scores = [min(math.log(self.table.p_unigram(tokens[0]) + _SMOOTHING), 0.0)]
        for prev, tok in zip(tokens, tokens[1:]):
            scores.append(min(math.log(self.table.p_bigram(prev, tok) + _SMOOTHING), 0.0))
        return scores


class StaticScorer(MlmScorerBackend):
    """Synthetic scorer mapping each phrase to fixed token scores (tests, sweeps)."""

    def __init__(self, scores: Mapping[str, Sequence[float] | float] | Callable[[str], Sequence[float]]):
        self.name = "static"
        self._scores = scores

    def score_tokens(self, phrase: str) -> list[float]:
        if callable(self._scores):
            got = self._scores(phrase)
        else:
            got = self._scores[phrase]
        if isinstance(got, (int, float)):
            return [float(got)]
        return [float(v) for v in got]


def _post_json(endpoint: str, path: str, payload: dict, timeout: float) -> dict:
    url = endpoint.rstrip("/") + path
    try:
        resp = requests.post(url, json=payload, timeout=timeout)
    except requests.RequestException as exc:
        raise TransportError(f"cannot reach {url}: {exc}") from exc
    if resp.status_code != 200:
        raise TransportError(f"{url} returned HTTP {resp.status_code}: {resp.text[:200]}")
    try:
        body = resp.json()
    except ValueError as exc:
        raise ProtocolError(f"{url} returned non-JSON body") from exc
    if not isinstance(body, dict):
        raise ProtocolError(f"{url} returned a non-object JSON body")
    return body


class RemoteEmbedder(EmbedderBackend):
    """Client for the sidecar's POST /v1/embed endpoint.

    Large inputs are transparently split into request batches of
    ``batch_size`` texts so callers never trip the service's batch cap.
    """

    def __init__(self, endpoint: str, timeout: float = 60.0, batch_size: int = 32):
        self.endpoint = endpoint
        self.timeout = timeout
        self.batch_size = batch_size
        self.name = f"remote-embed({endpoint})"
        self._dim: int | None = None

    @property
    def dim(self) -> int:
        if self._dim is None:
            self.embed(["dimension probe"])
        assert self._dim is not None
        return self._dim

    def embed(self, texts: Sequence[str]) -> np.ndarray:
        if not texts:
            return np.empty((0, self._dim or 0), dtype=np.float32)
        if len(texts) > self.batch_size:
            parts = [
                self.embed(texts[i : i + self.batch_size]) for i in range(0, len(texts), self.batch_size)
            ]
            return np.vstack(parts)
        body = _post_json(self.endpoint, "/v1/embed", {"texts": list(texts)}, self.timeout)
        try:
            dim = int(body["dim"])
            vectors = body["vectors"]
        except (KeyError, TypeError, ValueError) as exc:
            raise ProtocolError(f"embed response missing dim/vectors: {exc}") from exc
        if not isinstance(vectors, list) or len(vectors) != len(texts):
            raise ProtocolError(f"expected {len(texts)} vectors, got {len(vectors) if isinstance(vectors, list) else 'none'}")
        if self._dim is not None and dim != self._dim:
            raise DimensionMismatch(f"sidecar changed dim from {self._dim} to {dim}")
        out = np.empty((len(texts), dim), dtype=np.float32)
        for i, vec in enumerate(vectors):
            arr = np.asarray(vec, dtype=np.float64)
            if arr.shape != (dim,):
                raise DimensionMismatch(f"vector {i} has shape {arr.shape}, expected ({dim},)")
            if not np.all(np.isfinite(arr)):
                raise ProtocolError(f"vector {i} contains non-finite components")
            norm = np.linalg.norm(arr)
            if norm == 0.0:
                raise ProtocolError(f"vector {i} has zero norm")
            out[i] = (arr / norm).astype(np.float32)
        self._dim = dim
        return out


class RemoteMlmScorer(MlmScorerBackend):
    """Client for the sidecar's POST /v1/mlm_scores endpoint.

    Batches larger than ``batch_size`` are split across requests.
    """

    def __init__(self, endpoint: str, timeout: float = 60.0, batch_size: int = 32):
        self.endpoint = endpoint
        self.timeout = timeout
        self.batch_size = batch_size
        self.name = f"remote-mlm({endpoint})"

    def score_tokens(self, phrase: str) -> list[float]:
        return self.score_batch([phrase])[0]

    def score_batch(self, phrases: Sequence[str]) -> list[list[float]]:
        if not phrases:
            return []
        if len(phrases) > self.batch_size:
            out: list[list[float]] = []
            for i in range(0, len(phrases), self.batch_size):
                out.extend(self.score_batch(phrases[i : i + self.batch_size]))
            return out
        body = _post_json(self.endpoint, "/v1/mlm_scores", {"phrases": list(phrases)}, self.timeout)
        results = body.get("results")
        if not isinstance(results, list) or len(results) != len(phrases):
            raise ProtocolError(f"expected {len(phrases)} results, got {len(results) if isinstance(results, list) else 'none'}")
        out: list[list[float]] = []
        for i, entry in enumerate(results):
            try:
                logprobs = [float(v) for v in entry["token_logprobs"]]
                count = int(entry["token_count"])
            except (KeyError, TypeError, ValueError) as exc:
                raise ProtocolError(f"result {i} malformed: {exc}") from exc
            if len(logprobs) != count:
                raise ProtocolError(f"result {i}: token_count {count} != {len(logprobs)} scores")
            if count == 0:
                raise ProtocolError(f"result {i}: empty token scores")
            for v in logprobs:
                if not math.isfinite(v) or v > MAX_LOGPROB:
                    raise ProtocolError(f"result {i}: log-probability {v} out of range")
            out.append([min(v, 0.0) for v in logprobs])
        return out
