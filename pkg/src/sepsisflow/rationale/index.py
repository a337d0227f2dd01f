"""Exact cosine-similarity retrieval over the embedded knowledge base."""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .embed import HashedTfidfEmbedder
from .kb import KnowledgeChunk


@dataclass
class RetrievalIndex:
    embedder: HashedTfidfEmbedder
    chunks: list
    vectors: np.ndarray      # (n_chunks, dim), unit rows


def index_knowledge(chunks: list[KnowledgeChunk],
                    embedder: HashedTfidfEmbedder | None = None) -> RetrievalIndex:
    if not chunks:
        raise ValueError("empty knowledge corpus")
    # insertion-order invariance: canonical order is by chunk id
    chunks = sorted(chunks, key=lambda c: c.id)
    if embedder is None:
        embedder = HashedTfidfEmbedder()
    if embedder.idf is None:
        embedder.fit([c.text for c in chunks])
    vectors = np.stack([embedder.embed(c.text) for c in chunks])
    return RetrievalIndex(embedder=embedder, chunks=chunks, vectors=vectors)


def query_text(state_terms: list[str], action_name: str, tier: str) -> str:
    """Canonical query string from clinical findings, action and tier."""
    return " ".join([*state_terms, action_name, f"{tier} risk"])


def retrieve(index: RetrievalIndex, query: str, k: int) -> list[dict]:
    """Top-k chunks by exact cosine similarity, descending score, ties broken
    by chunk id. k larger than the corpus is clamped with a warning."""
    if k < 1:
        raise ValueError("k must be >= 1")
    n = len(index.chunks)
    if k > n:
        warnings.warn(f"k={k} exceeds corpus size {n}: clamped")
        k = n
    q = index.embedder.embed(query)
    scores = index.vectors @ q
    order = sorted(range(n), key=lambda i: (-scores[i], index.chunks[i].id))
    return [{"chunk": index.chunks[i], "score": float(scores[i])}
            for i in order[:k]]


def save_index(path, index: RetrievalIndex):
    doc = {
        "format_version": 1,
        "embedder": index.embedder.to_dict(),
        "chunks": [{"id": c.id, "text": c.text, "tags": sorted(c.tags)}
                   for c in index.chunks],
        "vectors": [row.tolist() for row in index.vectors],
    }
    Path(path).write_text(json.dumps(doc), encoding="utf-8")


def load_index(path) -> RetrievalIndex:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    if doc.get("format_version") != 1:
        raise ValueError("unsupported index format")
    chunks = [KnowledgeChunk(id=c["id"], text=c["text"],
                             tags=frozenset(c["tags"]))
              for c in doc["chunks"]]
    return RetrievalIndex(
        embedder=HashedTfidfEmbedder.from_dict(doc["embedder"]),
        chunks=chunks,
        vectors=np.asarray(doc["vectors"], dtype=np.float64))
