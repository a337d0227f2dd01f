"""Pluggable dimensionality reduction: deterministic PCA (default) and a
simplified neighbor-embedding alternative behind the same interface."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist


@dataclass
class PcaReducer:
    mean: np.ndarray
    components: np.ndarray  # (target_dim, d)
    explained_variance: np.ndarray

    method = "pca"

    def transform(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        return (X - self.mean) @ self.components.T

    def to_dict(self):
        return {"method": "pca", "mean": self.mean.tolist(),
                "components": [row.tolist() for row in self.components],
                "explained_variance": self.explained_variance.tolist()}

    @classmethod
    def from_dict(cls, d):
        return cls(mean=np.asarray(d["mean"]),
                   components=np.asarray(d["components"]),
                   explained_variance=np.asarray(d["explained_variance"]))


@dataclass
class NeighborEmbeddingReducer:
    """k-NN attraction / random repulsion embedding. Out-of-sample points map
    to the inverse-distance-weighted average of their nearest training rows."""

    train_X: np.ndarray
    embedding: np.ndarray
    n_neighbors: int

    method = "neighbor_embedding"

    def transform(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        D = cdist(X, self.train_X)
        k = min(self.n_neighbors, self.train_X.shape[0])
        out = np.empty((X.shape[0], self.embedding.shape[1]))
        for i in range(X.shape[0]):
            idx = np.argsort(D[i], kind="stable")[:k]
            w = 1.0 / (D[i, idx] + 1e-12)
            out[i] = (w[:, None] * self.embedding[idx]).sum(axis=0) / w.sum()
        return out

    def to_dict(self):
        return {"method": "neighbor_embedding",
                "train_X": [r.tolist() for r in self.train_X],
                "embedding": [r.tolist() for r in self.embedding],
                "n_neighbors": self.n_neighbors}

    @classmethod
    def from_dict(cls, d):
        return cls(train_X=np.asarray(d["train_X"]),
                   embedding=np.asarray(d["embedding"]),
                   n_neighbors=int(d["n_neighbors"]))


def fit_pca(X: np.ndarray, target_dim: int) -> PcaReducer:
    X = np.asarray(X, dtype=np.float64)
    if target_dim <= 0:
        raise ValueError("target_dim must be positive")
    if X.size == 0:
        raise ValueError("empty matrix")
    if target_dim > X.shape[1]:
        raise ValueError("target_dim exceeds input dimension")
    mean = X.mean(axis=0)
    _, s, vt = np.linalg.svd(X - mean, full_matrices=False)
    comps = vt[:target_dim]
    # sign convention: largest-magnitude entry of each component positive
    for row in comps:
        j = int(np.argmax(np.abs(row)))
        if row[j] < 0:
            row *= -1
    var = (s ** 2) / max(X.shape[0] - 1, 1)
    return PcaReducer(mean=mean, components=comps, explained_variance=var[:target_dim])


def fit_neighbor_embedding(X: np.ndarray, target_dim: int, seed: int = 0,
                           n_neighbors: int = 15, n_iter: int = 200,
                           lr: float = 0.1) -> NeighborEmbeddingReducer:
    X = np.asarray(X, dtype=np.float64)
    if target_dim <= 0:
        raise ValueError("target_dim must be positive")
    n = X.shape[0]
    rng = np.random.default_rng(seed)
    k = min(n_neighbors, n - 1)
    D = cdist(X, X)
    np.fill_diagonal(D, np.inf)
    nn = np.argsort(D, axis=1, kind="stable")[:, :k]
    # PCA warm start keeps the layout deterministic
    emb = fit_pca(X, min(target_dim, X.shape[1])).transform(X)[:, :target_dim].copy()
    if emb.shape[1] < target_dim:
        emb = np.hstack([emb, np.zeros((n, target_dim - emb.shape[1]))])
    scale = np.abs(emb).max() or 1.0
    emb /= scale
    for _ in range(n_iter):
        i = rng.integers(0, n)
        j = int(nn[i, rng.integers(0, k)])
        d = emb[i] - emb[j]
        emb[i] -= lr * d
        emb[j] += lr * d
        # repulsion against a random non-neighbor
        r = int(rng.integers(0, n))
        if r != i:
            d = emb[i] - emb[r]
            norm2 = float(d @ d) + 1e-3
            emb[i] += lr * d / norm2 * 0.1
    return NeighborEmbeddingReducer(train_X=X, embedding=emb, n_neighbors=k)


def reduce_matrix(X: np.ndarray, target_dim: int, method: str = "pca", seed: int = 0):
    """Returns (low-dim matrix, reducer state)."""
    if method == "pca":
        reducer = fit_pca(X, target_dim)
    elif method == "neighbor_embedding":
        reducer = fit_neighbor_embedding(X, target_dim, seed=seed)
    else:
        raise ValueError(f"unknown reduction method {method!r}")
    return reducer.transform(X), reducer


def reducer_from_dict(d):
    if d["method"] == "pca":
        return PcaReducer.from_dict(d)
    return NeighborEmbeddingReducer.from_dict(d)
