"""Deterministic lexical embedder: hashed term frequencies weighted by
inverse document frequency, unit-normalized."""

from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass, field

import numpy as np

_TOKEN_RE = re.compile(r"[a-z0-9]+")


def tokenize(text: str) -> list[str]:
    return _TOKEN_RE.findall(text.lower())


def bucket(token: str, dim: int) -> int:
    """Stable hash bucket (md5-based, independent of PYTHONHASHSEED)."""
    digest = hashlib.md5(token.encode("utf-8")).hexdigest()
    return int(digest[:8], 16) % dim


@dataclass
class HashedTfidfEmbedder:
    dim: int = 256
    idf: np.ndarray | None = None
    name: str = "hashed-tfidf"

    def fit(self, texts: list[str]) -> "HashedTfidfEmbedder":
        df = np.zeros(self.dim)
        for text in texts:
            for b in {bucket(t, self.dim) for t in tokenize(text)}:
                df[b] += 1
        n = len(texts)
        self.idf = np.log((1.0 + n) / (1.0 + df)) + 1.0
        return self

    def embed(self, text: str) -> np.ndarray:
        if self.idf is None:
            raise ValueError("embedder not fitted")
        v = np.zeros(self.dim)
        for t in tokenize(text):
            v[bucket(t, self.dim)] += 1.0
        v *= self.idf
        norm = np.linalg.norm(v)
        return v / norm if norm > 0 else v

    def to_dict(self) -> dict:
        return {"name": self.name, "dim": self.dim,
                "idf": self.idf.tolist() if self.idf is not None else None}

    @classmethod
    def from_dict(cls, doc: dict) -> "HashedTfidfEmbedder":
        e = cls(dim=doc["dim"], name=doc["name"])
        if doc["idf"] is not None:
            e.idf = np.asarray(doc["idf"], dtype=np.float64)
        return e
