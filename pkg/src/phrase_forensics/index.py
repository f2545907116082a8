"""Reference-corpus ingestion, exact nearest-neighbor search, persistence.

The index is a flat exact store: unit-norm document vectors plus stable
document ids (corpus-relative paths). Search ranks by cosine similarity,
computed in float64 as a dot product of unit vectors, with ties broken by
insertion order. The on-disk format is versioned, little-endian, and
checksummed so round-trips are bit-exact across platforms.
"""

from __future__ import annotations

import codecs
import json
import struct
import zlib
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .backends import EmbedderBackend
from .errors import DimensionMismatch, EmptyCorpus, EmptyIndex, EmptyText, FormatError

MAGIC = b"PHFX"
FORMAT_VERSION = 1
DEFAULT_CHUNK_BYTES = 5 * 2**20


@dataclass(frozen=True)
class RetrievalHit:
    doc_id: str
    cosine: float
    rank: int


class CorpusIndex:
    """Immutable-after-build flat vector index (append during build only)."""

    def __init__(self, dim: int, backend_name: str):
        self.dim = dim
        self.backend_name = backend_name
        self.doc_ids: list[str] = []
        self._vectors: list[np.ndarray] = []
        self._matrix: np.ndarray | None = None

    def __len__(self) -> int:
        return len(self.doc_ids)

    def __eq__(self, other) -> bool:
        if not isinstance(other, CorpusIndex):
            return NotImplemented
        return (
            self.dim == other.dim
            and self.backend_name == other.backend_name
            and self.doc_ids == other.doc_ids
            and self.matrix.tobytes() == other.matrix.tobytes()
        )

    @property
    def matrix(self) -> np.ndarray:
        if self._matrix is None:
            if self._vectors:
                self._matrix = np.vstack(self._vectors)
            else:
                self._matrix = np.empty((0, self.dim), dtype=np.float32)
        return self._matrix

    def add(self, doc_id: str, vector: np.ndarray) -> None:
        vec = np.asarray(vector, dtype=np.float32)
        if vec.shape != (self.dim,):
            raise DimensionMismatch(f"vector for {doc_id!r} has shape {vec.shape}, index dim is {self.dim}")
        norm = float(np.linalg.norm(vec.astype(np.float64)))
        if abs(norm - 1.0) > 1e-3:
            raise ValueError(f"vector for {doc_id!r} is not unit-norm (|v| = {norm})")
        self.doc_ids.append(doc_id)
        self._vectors.append(vec)
        self._matrix = None

    def entries(self) -> list[tuple[str, np.ndarray]]:
        return list(zip(self.doc_ids, self.matrix))


def search(index: CorpusIndex, query: np.ndarray, k: int) -> list[RetrievalHit]:
    """Exact top-k by descending cosine; ties keep insertion order (earlier wins)."""
    if len(index) == 0:
        raise EmptyIndex("cannot search an index with no entries")
    q = np.asarray(query, dtype=np.float64).reshape(-1)
    if q.shape[0] != index.dim:
        raise DimensionMismatch(f"query dim {q.shape[0]} != index dim {index.dim}")
    if not (1 <= k <= len(index)):
        raise ValueError(f"k must be in 1..{len(index)}, got {k}")
    scores = index.matrix.astype(np.float64) @ q
    order = np.argsort(-scores, kind="stable")[:k]
    # Ranking uses raw scores; the reported cosine is clamped into [-1, 1]
    # to absorb float32 storage round-off.
    return [
        RetrievalHit(doc_id=index.doc_ids[int(i)], cosine=min(max(float(scores[int(i)]), -1.0), 1.0), rank=rank)
        for rank, i in enumerate(order, start=1)
    ]


@dataclass
class IngestManifest:
    root: str
    chunk_bytes: int
    documents: list[dict] = field(default_factory=list)
    skipped: list[dict] = field(default_factory=list)

    def to_json_dict(self) -> dict:
        return {
            "root": self.root,
            "chunk_bytes": self.chunk_bytes,
            "documents": self.documents,
            "skipped": self.skipped,
        }


@dataclass
class IngestResult:
    index: CorpusIndex
    manifest: IngestManifest


def iter_text_chunks(path: Path, chunk_bytes: int):
    """Yield decoded text chunks of at most ``chunk_bytes`` raw bytes each.

    Multi-byte UTF-8 sequences split across a chunk boundary are carried
    into the next chunk by the incremental decoder; undecodable bytes are
    replaced rather than dropped.
    """
    decoder = codecs.getincrementaldecoder("utf-8")(errors="replace")
    with open(path, "rb") as fh:
        while True:
            raw = fh.read(chunk_bytes)
            if not raw:
                tail = decoder.decode(b"", final=True)
                if tail:
                    yield tail
                return
            text = decoder.decode(raw)
            if text:
                yield text


def embed_document_text(text: str, embedder: EmbedderBackend, chunk_chars: int | None = None) -> np.ndarray:
    """Unit-normalized mean of chunk embeddings for an in-memory text."""
    if chunk_chars is None or len(text) <= chunk_chars:
        chunks = [text]
    else:
        chunks = [text[i : i + chunk_chars] for i in range(0, len(text), chunk_chars)]
    return _mean_normalize(embedder.embed(chunks))


def _mean_normalize(chunk_vectors: np.ndarray) -> np.ndarray:
    mean = chunk_vectors.astype(np.float64).mean(axis=0)
    norm = np.linalg.norm(mean)
    if norm == 0.0:
        raise ValueError("chunk embeddings cancelled to a zero vector")
    return (mean / norm).astype(np.float32)


def ingest_corpus(root_dir: str | Path, embedder: EmbedderBackend, chunk_bytes: int = DEFAULT_CHUNK_BYTES) -> IngestResult:
    """Index every ``.txt`` file under ``root_dir``.

    Files are read in ``chunk_bytes``-sized chunks; a document's vector is
    the unit-normalized mean of its chunk embeddings. Unreadable or empty
    files are skipped with a manifest record rather than aborting the run.
    Raises EmptyCorpus when nothing could be indexed.
    """
    root = Path(root_dir)
    if chunk_bytes < 16:
        raise ValueError(f"chunk_bytes must be >= 16, got {chunk_bytes}")
    index = CorpusIndex(dim=embedder.dim, backend_name=embedder.name)
    manifest = IngestManifest(root=str(root), chunk_bytes=chunk_bytes)
    paths = sorted(p for p in root.rglob("*.txt") if p.is_file()) if root.is_dir() else []
    for path in paths:
        doc_id = path.relative_to(root).as_posix()
        try:
            chunk_vecs = []
            byte_count = path.stat().st_size
            for chunk in iter_text_chunks(path, chunk_bytes):
                chunk_vecs.append(embedder.embed([chunk])[0])
            if not chunk_vecs:
                raise EmptyText("file decoded to empty text")
            vector = _mean_normalize(np.vstack(chunk_vecs))
        except (OSError, EmptyText, ValueError) as exc:
            manifest.skipped.append({"path": doc_id, "reason": str(exc)})
            continue
        index.add(doc_id, vector)
        manifest.documents.append({"doc_id": doc_id, "bytes": byte_count, "chunks": len(chunk_vecs)})
    if len(index) == 0:
        raise EmptyCorpus(f"no usable .txt documents under {root}")
    return IngestResult(index=index, manifest=manifest)


def write_manifest(manifest: IngestManifest, path: str | Path) -> None:
    Path(path).write_text(json.dumps(manifest.to_json_dict(), indent=2) + "\n", encoding="utf-8")


class SourceReader:
    """Resolves an indexed doc_id back to its full text."""

    def read_text(self, doc_id: str) -> str:
        raise NotImplementedError


class DirectoryCorpusReader(SourceReader):
    def __init__(self, root_dir: str | Path):
        self.root = Path(root_dir)

    def read_text(self, doc_id: str) -> str:
        return "".join(iter_text_chunks(self.root / doc_id, DEFAULT_CHUNK_BYTES))


class InMemorySourceReader(SourceReader):
    def __init__(self, texts: dict[str, str]):
        self.texts = dict(texts)

    def read_text(self, doc_id: str) -> str:
        return self.texts[doc_id]


def save_index(index: CorpusIndex, path: str | Path) -> None:
    """Write the versioned binary format; trailing CRC32 covers all prior bytes."""
    name_bytes = index.backend_name.encode("utf-8")
    parts = [MAGIC, struct.pack("<IIQH", FORMAT_VERSION, index.dim, len(index), len(name_bytes)), name_bytes]
    matrix = index.matrix
    for i, doc_id in enumerate(index.doc_ids):
        id_bytes = doc_id.encode("utf-8")
        parts.append(struct.pack("<H", len(id_bytes)))
        parts.append(id_bytes)
        parts.append(matrix[i].astype("<f4").tobytes())
    payload = b"".join(parts)
    blob = payload + struct.pack("<I", zlib.crc32(payload) & 0xFFFFFFFF)
    tmp = Path(str(path) + ".tmp")
    tmp.write_bytes(blob)
    tmp.replace(path)


class _Cursor:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise FormatError(f"truncated index file: needed {n} bytes at offset {self.pos}")
        out = self.data[self.pos : self.pos + n]
        self.pos += n
        return out


def load_index(path: str | Path) -> CorpusIndex:
    """Load and validate a persisted index; bit-exact inverse of ``save_index``."""
    blob = Path(path).read_bytes()
    if len(blob) < len(MAGIC) + 4:
        raise FormatError("file too small to be an index")
    payload, (stored_crc,) = blob[:-4], struct.unpack("<I", blob[-4:])
    if zlib.crc32(payload) & 0xFFFFFFFF != stored_crc:
        raise FormatError("checksum mismatch: index file is corrupted")
    cur = _Cursor(payload)
    if cur.take(len(MAGIC)) != MAGIC:
        raise FormatError("bad magic bytes: not an index file")
    version, dim, count, name_len = struct.unpack("<IIQH", cur.take(18))
    if version != FORMAT_VERSION:
        raise FormatError(f"unsupported format version {version}")
    backend_name = cur.take(name_len).decode("utf-8")
    index = CorpusIndex(dim=dim, backend_name=backend_name)
    for _ in range(count):
        (id_len,) = struct.unpack("<H", cur.take(2))
        doc_id = cur.take(id_len).decode("utf-8")
        vec = np.frombuffer(cur.take(4 * dim), dtype="<f4").copy()
        index.doc_ids.append(doc_id)
        index._vectors.append(vec)
    if cur.pos != len(payload):
        raise FormatError(f"{len(payload) - cur.pos} trailing bytes after last entry")
    return index
