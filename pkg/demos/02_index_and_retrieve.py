"""
Indexing a corpus and retrieving probable sources
=================================================

Every corpus document embeds to a unit vector (chunked reading keeps
memory flat for large files); a suspect document retrieves its most
probable source by exact cosine search. The index round-trips through
a checksummed binary file.
"""

import tempfile
from pathlib import Path

from phrase_forensics import ReferenceEmbedder, ingest_corpus, load_index, save_index, search

root = Path(__file__).resolve().parent.parent / "fixtures" / "case_study"
embedder = ReferenceEmbedder()

result = ingest_corpus(root / "corpus", embedder)
index = result.index
print(f"indexed {len(index)} documents with backend {index.backend_name}")
print(f"manifest records {len(result.manifest.documents)} documents, {len(result.manifest.skipped)} skipped\n")

suspect = (root / "suspect.txt").read_text(encoding="utf-8")
query = embedder.embed_one(suspect)
print("top 5 probable sources for the suspect document:")
for hit in search(index, query, 5):
    print(f"  rank {hit.rank}: {hit.doc_id:<22} cosine {hit.cosine:.3f}")

with tempfile.TemporaryDirectory() as tmp:
    path = Path(tmp) / "corpus.pfidx"
    save_index(index, path)
    reloaded = load_index(path)
    print(f"\nsaved {path.stat().st_size} bytes; reload equals original: {reloaded == index}")
