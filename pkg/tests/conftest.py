from __future__ import annotations

from pathlib import Path

import pytest

from phrase_forensics.backends import BigramTable, ReferenceEmbedder, ReferenceMlmScorer
from phrase_forensics.index import DirectoryCorpusReader, ingest_corpus, iter_text_chunks

REPO_ROOT = Path(__file__).resolve().parent.parent
CASE_STUDY_DIR = REPO_ROOT / "fixtures" / "case_study"


@pytest.fixture(scope="session")
def ref_embedder():
    return ReferenceEmbedder()


@pytest.fixture(scope="session")
def case_study():
    """Shipped case-study fixture: index, scorer, reader, and text paths."""
    corpus_dir = CASE_STUDY_DIR / "corpus"
    embedder = ReferenceEmbedder()
    result = ingest_corpus(corpus_dir, embedder)
    paths = sorted(corpus_dir.rglob("*.txt"))
    scorer = ReferenceMlmScorer(
        BigramTable.from_texts("".join(iter_text_chunks(p, 5 << 20)) for p in paths)
    )
    return {
        "index": result.index,
        "scorer": scorer,
        "embedder": embedder,
        "reader": DirectoryCorpusReader(corpus_dir),
        "corpus_dir": corpus_dir,
        "suspect": (CASE_STUDY_DIR / "suspect.txt").read_text(encoding="utf-8"),
        "mild": (CASE_STUDY_DIR / "mild_suspect.txt").read_text(encoding="utf-8"),
        "clean": (CASE_STUDY_DIR / "clean_suspect.txt").read_text(encoding="utf-8"),
    }
