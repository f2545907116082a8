from __future__ import annotations

import numpy as np
import pytest

from phrase_forensics.errors import DimensionMismatch, EmptyCorpus, EmptyIndex, FormatError
from phrase_forensics.index import (
    CorpusIndex,
    DirectoryCorpusReader,
    embed_document_text,
    ingest_corpus,
    iter_text_chunks,
    load_index,
    save_index,
    search,
)


def unit_rows(rng: np.random.Generator, n: int, dim: int) -> np.ndarray:
    m = rng.normal(size=(n, dim))
    return (m / np.linalg.norm(m, axis=1, keepdims=True)).astype(np.float32)


def build_index(vectors: np.ndarray, name: str = "test") -> CorpusIndex:
    index = CorpusIndex(dim=vectors.shape[1], backend_name=name)
    for i, row in enumerate(vectors):
        index.add(f"doc-{i:05d}", row)
    return index


def oracle_ranking(vectors: np.ndarray, query: np.ndarray) -> list[int]:
    """Brute-force linear scan: per-row float64 dot, stable sort, earlier wins ties."""
    scores = [float(np.dot(vectors[i].astype(np.float64), query.astype(np.float64))) for i in range(len(vectors))]
    return sorted(range(len(vectors)), key=lambda i: (-scores[i], i))


class TestSearch:
    def test_self_retrieval(self, tmp_path, ref_embedder):
        texts = {
            "a.txt": "retrieval systems index documents",
            "b.txt": "chemistry of organic compounds",
            "c.txt": "deep learning for vision",
        }
        for name, text in texts.items():
            (tmp_path / name).write_text(text, encoding="utf-8")
        index = ingest_corpus(tmp_path, ref_embedder).index
        query = ref_embedder.embed_one(texts["b.txt"])
        hits = search(index, query, 1)
        assert hits[0].doc_id == "b.txt"
        assert hits[0].cosine == pytest.approx(1.0, abs=1e-6)
        assert hits[0].rank == 1

    def test_matches_brute_force_oracle(self):
        rng = np.random.default_rng(7)
        vectors = unit_rows(rng, 100, 16)
        index = build_index(vectors)
        for _ in range(20):
            query = unit_rows(rng, 1, 16)[0]
            hits = search(index, query, len(index))
            got = [h.doc_id for h in hits]
            want = [f"doc-{i:05d}" for i in oracle_ranking(vectors, query)]
            assert got == want

    def test_matches_brute_force_oracle_at_ten_thousand_entries(self):
        rng = np.random.default_rng(170)
        vectors = unit_rows(rng, 10_000, 32)
        index = build_index(vectors)
        for _ in range(3):
            query = unit_rows(rng, 1, 32)[0]
            got = [h.doc_id for h in search(index, query, len(index))]
            want = [f"doc-{i:05d}" for i in oracle_ranking(vectors, query)]
            assert got == want

    def test_tie_break_by_insertion_order(self):
        v = np.zeros(8, dtype=np.float32)
        v[0] = 1.0
        index = CorpusIndex(dim=8, backend_name="t")
        index.add("first", v)
        index.add("second", v.copy())
        hits = search(index, v, 2)
        assert [h.doc_id for h in hits] == ["first", "second"]

    def test_dimension_mismatch(self):
        index = build_index(unit_rows(np.random.default_rng(0), 3, 8))
        with pytest.raises(DimensionMismatch):
            search(index, np.ones(16) / 4.0, 1)

    def test_empty_index(self):
        with pytest.raises(EmptyIndex):
            search(CorpusIndex(dim=8, backend_name="t"), np.ones(8) / np.sqrt(8), 1)

    def test_k_bounds(self):
        index = build_index(unit_rows(np.random.default_rng(0), 3, 8))
        with pytest.raises(ValueError):
            search(index, index.matrix[0], 4)
        with pytest.raises(ValueError):
            search(index, index.matrix[0], 0)

    def test_l2_cosine_duality(self):
        rng = np.random.default_rng(11)
        vectors = unit_rows(rng, 200, 32).astype(np.float64)
        query = unit_rows(rng, 1, 32)[0].astype(np.float64)
        by_cosine = sorted(range(200), key=lambda i: (-float(vectors[i] @ query), i))
        by_l2 = sorted(range(200), key=lambda i: (float(np.sum((vectors[i] - query) ** 2)), i))
        assert by_cosine == by_l2


class TestIngestion:
    def test_one_entry_per_file(self, tmp_path, ref_embedder):
        for i in range(3):
            (tmp_path / f"doc{i}.txt").write_text(f"document number {i} content", encoding="utf-8")
        result = ingest_corpus(tmp_path, ref_embedder)
        assert len(result.index) == 3
        assert [d["doc_id"] for d in result.manifest.documents] == ["doc0.txt", "doc1.txt", "doc2.txt"]

    def test_multi_chunk_embedding_is_mean_then_normalize(self, tmp_path, ref_embedder):
        text = ("alpha bravo charlie delta echo " * 40).strip()
        path = tmp_path / "big.txt"
        path.write_text(text, encoding="utf-8")
        chunk_bytes = 400  # forces several chunks through the same code path as 5 MiB
        result = ingest_corpus(tmp_path, ref_embedder, chunk_bytes=chunk_bytes)
        entry = dict(result.index.entries())["big.txt"]
        # straight-line recomputation: decode chunks, embed each, mean, normalize
        chunks = list(iter_text_chunks(path, chunk_bytes))
        assert len(chunks) > 1
        stacked = ref_embedder.embed(chunks).astype(np.float64)
        mean = stacked.mean(axis=0)
        want = (mean / np.linalg.norm(mean)).astype(np.float32)
        assert entry.tobytes() == want.tobytes()
        assert result.manifest.documents[0]["chunks"] == len(chunks)

    def test_default_chunk_size_is_five_mebibytes(self):
        from phrase_forensics.index import DEFAULT_CHUNK_BYTES

        assert DEFAULT_CHUNK_BYTES == 5 * 2**20

    def test_twelve_megabyte_file_reads_as_three_default_chunks(self, tmp_path):
        path = tmp_path / "large.txt"
        path.write_bytes(b"lorem ipsum padding " * (12 * 2**20 // 20))
        chunks = sum(1 for _ in iter_text_chunks(path, 5 * 2**20))
        assert chunks == 3

    def test_chunk_boundary_never_splits_utf8(self, tmp_path):
        path = tmp_path / "u.txt"
        path.write_text("é" * 100, encoding="utf-8")  # 2 bytes per char
        joined = "".join(iter_text_chunks(path, 15))  # odd chunk size straddles code points
        assert joined == "é" * 100

    def test_empty_directory_raises(self, tmp_path, ref_embedder):
        with pytest.raises(EmptyCorpus):
            ingest_corpus(tmp_path, ref_embedder)

    def test_unreadable_file_skipped_with_manifest_record(self, tmp_path, ref_embedder):
        (tmp_path / "ok.txt").write_text("regular document text", encoding="utf-8")
        (tmp_path / "empty.txt").write_text("", encoding="utf-8")
        result = ingest_corpus(tmp_path, ref_embedder)
        assert len(result.index) == 1
        assert [s["path"] for s in result.manifest.skipped] == ["empty.txt"]

    def test_ingestion_deterministic(self, tmp_path, ref_embedder):
        for i in range(3):
            (tmp_path / f"d{i}.txt").write_text(f"text body {i} with words", encoding="utf-8")
        a = ingest_corpus(tmp_path, ref_embedder).index
        b = ingest_corpus(tmp_path, ref_embedder).index
        assert a == b

    def test_embed_document_text_matches_directory_ingest(self, tmp_path, ref_embedder):
        text = "the same document either way"
        (tmp_path / "x.txt").write_text(text, encoding="utf-8")
        via_dir = dict(ingest_corpus(tmp_path, ref_embedder).index.entries())["x.txt"]
        via_mem = embed_document_text(text, ref_embedder)
        assert via_dir.tobytes() == via_mem.tobytes()

    def test_directory_reader_round_trip(self, tmp_path):
        (tmp_path / "sub").mkdir()
        (tmp_path / "sub" / "a.txt").write_text("nested text", encoding="utf-8")
        reader = DirectoryCorpusReader(tmp_path)
        assert reader.read_text("sub/a.txt") == "nested text"


class TestPersistence:
    def test_round_trip_is_bit_exact(self, tmp_path):
        index = build_index(unit_rows(np.random.default_rng(3), 50, 24), name="ref-embed(dim=24,seed=0)")
        path = tmp_path / "x.pfidx"
        save_index(index, path)
        assert load_index(path) == index

    def test_empty_index_round_trips(self, tmp_path):
        index = CorpusIndex(dim=16, backend_name="empty-ok")
        path = tmp_path / "empty.pfidx"
        save_index(index, path)
        loaded = load_index(path)
        assert loaded == index
        assert len(loaded) == 0

    def test_unicode_doc_ids_round_trip(self, tmp_path):
        index = CorpusIndex(dim=8, backend_name="t")
        v = np.zeros(8, dtype=np.float32)
        v[1] = 1.0
        index.add("päpers/ü.txt", v)
        path = tmp_path / "u.pfidx"
        save_index(index, path)
        assert load_index(path).doc_ids == ["päpers/ü.txt"]

    def test_truncated_file_rejected(self, tmp_path):
        index = build_index(unit_rows(np.random.default_rng(3), 5, 8))
        path = tmp_path / "x.pfidx"
        save_index(index, path)
        blob = path.read_bytes()
        path.write_bytes(blob[: len(blob) // 2])
        with pytest.raises(FormatError):
            load_index(path)

    def test_corrupted_byte_rejected_by_checksum(self, tmp_path):
        index = build_index(unit_rows(np.random.default_rng(3), 5, 8))
        path = tmp_path / "x.pfidx"
        save_index(index, path)
        blob = bytearray(path.read_bytes())
        blob[30] ^= 0xFF
        path.write_bytes(bytes(blob))
        with pytest.raises(FormatError):
            load_index(path)

    def test_bad_magic_rejected(self, tmp_path):
        path = tmp_path / "x.pfidx"
        path.write_bytes(b"NOTANIDX" + b"\x00" * 64)
        with pytest.raises(FormatError):
            load_index(path)

    def test_mixed_dim_append_rejected(self):
        index = CorpusIndex(dim=8, backend_name="t")
        with pytest.raises(DimensionMismatch):
            index.add("bad", np.ones(16, dtype=np.float32) / 4.0)

    def test_non_unit_vector_rejected(self):
        index = CorpusIndex(dim=8, backend_name="t")
        with pytest.raises(ValueError):
            index.add("bad", np.ones(8, dtype=np.float32))

    def test_loaded_index_queryable_with_matching_dim_only(self, tmp_path):
        index = build_index(unit_rows(np.random.default_rng(5), 4, 8))
        path = tmp_path / "x.pfidx"
        save_index(index, path)
        loaded = load_index(path)
        with pytest.raises(DimensionMismatch):
            search(loaded, np.ones(384) / np.sqrt(384), 1)
