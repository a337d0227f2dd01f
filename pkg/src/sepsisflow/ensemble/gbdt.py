"""Multiclass gradient-boosted regression trees: one-vs-all additive boosting
on the softmax log loss with exact greedy variance-reduction splits."""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


@dataclass(frozen=True)
class GbdtConfig:
    n_trees: int = 100
    depth: int = 3
    lr: float = 0.1
    seed: int = 0

    def __post_init__(self):
        if self.n_trees < 0 or self.depth < 1 or self.lr <= 0:
            raise ValueError("invalid GBDT config")


@dataclass
class Tree:
    """Flat node table; children index -1 marks a leaf."""
    feature: list = field(default_factory=lambda: [-1])
    threshold: list = field(default_factory=lambda: [0.0])
    left: list = field(default_factory=lambda: [-1])
    right: list = field(default_factory=lambda: [-1])
    value: list = field(default_factory=lambda: [0.0])
    gain: list = field(default_factory=lambda: [0.0])

    def predict(self, X: np.ndarray) -> np.ndarray:
        feature = np.asarray(self.feature)
        threshold = np.asarray(self.threshold)
        left = np.asarray(self.left)
        right = np.asarray(self.right)
        value = np.asarray(self.value)
        node = np.zeros(X.shape[0], dtype=np.int64)
        active = left[node] != -1
        while np.any(active):
            idx = np.flatnonzero(active)
            cur = node[idx]
            goes_left = X[idx, feature[cur]] <= threshold[cur]
            node[idx] = np.where(goes_left, left[cur], right[cur])
            active[idx] = left[node[idx]] != -1
        return value[node]

    def feature_gains(self, n_features: int) -> np.ndarray:
        g = np.zeros(n_features)
        for node, f in enumerate(self.feature):
            if f >= 0:
                g[f] += self.gain[node]
        return g


def best_split(x: np.ndarray, g: np.ndarray) -> tuple[float, float]:
    """Exact greedy search over one feature: returns (gain, threshold) for the
    variance-reduction-maximizing threshold, or (0, nan) if no split helps."""
    order = np.argsort(x, kind="stable")
    xs, gs = x[order], g[order]
    n = len(xs)
    if n < 2:
        return 0.0, float("nan")
    csum = np.cumsum(gs)
    total = csum[-1]
    nl = np.arange(1, n)
    left_sum = csum[:-1]
    # SSE_parent - SSE_left - SSE_right reduces to this sum-of-squares form
    gains = left_sum ** 2 / nl + (total - left_sum) ** 2 / (n - nl) - total ** 2 / n
    valid = xs[:-1] != xs[1:]
    gains = np.where(valid, gains, -np.inf)
    i = int(np.argmax(gains))
    if gains[i] <= 1e-12:
        return 0.0, float("nan")
    return float(gains[i]), 0.5 * (xs[i] + xs[i + 1])


def fit_tree(X: np.ndarray, g: np.ndarray, depth: int) -> Tree:
    tree = Tree(feature=[], threshold=[], left=[], right=[], value=[], gain=[])

    def grow(idx: np.ndarray, d: int) -> int:
        node = len(tree.feature)
        tree.feature.append(-1)
        tree.threshold.append(0.0)
        tree.left.append(-1)
        tree.right.append(-1)
        tree.value.append(float(np.mean(g[idx])))
        tree.gain.append(0.0)
        if d == 0 or len(idx) < 2:
            return node
        best = (0.0, float("nan"), -1)
        for f in range(X.shape[1]):
            gain, thr = best_split(X[idx, f], g[idx])
            if gain > best[0]:
                best = (gain, thr, f)
        gain, thr, f = best
        if f < 0:
            return node
        tree.feature[node] = f
        tree.threshold[node] = float(thr)
        tree.gain[node] = float(gain)
        mask = X[idx, f] <= thr
        tree.left[node] = grow(idx[mask], d - 1)
        tree.right[node] = grow(idx[~mask], d - 1)
        return node

    grow(np.arange(X.shape[0]), depth)
    return tree


@dataclass
class GbdtModel:
    config: GbdtConfig
    n_features: int
    n_classes: int
    priors: np.ndarray                   # prior class logits
    rounds: list = field(default_factory=list)   # list of per-class Tree lists

    def scores(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        if X.shape[1] != self.n_features:
            raise ValueError(f"expected {self.n_features} features, got {X.shape[1]}")
        s = np.tile(self.priors, (X.shape[0], 1))
        for trees in self.rounds:
            for k, tree in enumerate(trees):
                s[:, k] += self.config.lr * tree.predict(X)
        return s


def gbdt_train(X: np.ndarray, y: np.ndarray, config: GbdtConfig = GbdtConfig(),
               n_classes: int = 4) -> GbdtModel:
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    y = np.asarray(y, dtype=np.int64)
    if X.shape[0] < 1:
        raise ValueError("empty training set")
    if np.any(y < 0) or np.any(y >= n_classes):
        raise ValueError(f"labels must be in [0, {n_classes})")
    freq = np.bincount(y, minlength=n_classes) / len(y)
    if np.count_nonzero(freq) == 1:
        warnings.warn("single-class training data: model predicts that class")
    priors = np.log(np.maximum(freq, 1e-12))
    model = GbdtModel(config=config, n_features=X.shape[1],
                      n_classes=n_classes, priors=priors)
    onehot = np.eye(n_classes)[y]
    s = np.tile(priors, (X.shape[0], 1))
    for _ in range(config.n_trees):
        e = np.exp(s - s.max(axis=1, keepdims=True))
        p = e / e.sum(axis=1, keepdims=True)
        resid = onehot - p
        trees = [fit_tree(X, resid[:, k], config.depth) for k in range(n_classes)]
        for k, tree in enumerate(trees):
            s[:, k] += config.lr * tree.predict(X)
        model.rounds.append(trees)
    return model


def gbdt_predict_proba(model: GbdtModel, X: np.ndarray) -> np.ndarray:
    s = model.scores(X)
    e = np.exp(s - s.max(axis=1, keepdims=True))
    return e / e.sum(axis=1, keepdims=True)


@dataclass
class GainReport:
    rows: list          # [{feature, mean_gain, is_noise}] descending by gain
    reliable: bool


def feature_gain_report(model: GbdtModel, feature_names: list[str] | None = None,
                        noise_index: int | None = None) -> GainReport:
    """Mean split gain per feature over all trees, ranked descending. The
    noise column (by index) is flagged; an all-zero ranking is marked
    unreliable."""
    gains = np.zeros(model.n_features)
    n_trees = 0
    for trees in model.rounds:
        for tree in trees:
            gains += tree.feature_gains(model.n_features)
            n_trees += 1
    mean = gains / max(n_trees, 1)
    if feature_names is None:
        feature_names = [f"f{i}" for i in range(model.n_features)]
    order = np.argsort(-mean, kind="stable")
    rows = [{"feature": feature_names[i], "mean_gain": float(mean[i]),
             "is_noise": bool(noise_index is not None and i == noise_index)}
            for i in order]
    return GainReport(rows=rows, reliable=bool(mean.max() > 1e-12))


def save_gbdt(path, model: GbdtModel):
    doc = {
        "format_version": 1,
        "config": {"n_trees": model.config.n_trees, "depth": model.config.depth,
                   "lr": model.config.lr, "seed": model.config.seed},
        "n_features": model.n_features,
        "n_classes": model.n_classes,
        "priors": model.priors.tolist(),
        "rounds": [[{"feature": t.feature, "threshold": t.threshold,
                     "left": t.left, "right": t.right, "value": t.value,
                     "gain": t.gain} for t in trees]
                   for trees in model.rounds],
    }
    Path(path).write_text(json.dumps(doc), encoding="utf-8")


def load_gbdt(path) -> GbdtModel:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    if doc.get("format_version") != 1:
        raise ValueError("unsupported GBDT format")
    model = GbdtModel(config=GbdtConfig(**doc["config"]),
                      n_features=doc["n_features"], n_classes=doc["n_classes"],
                      priors=np.asarray(doc["priors"], dtype=np.float64))
    model.rounds = [[Tree(**t) for t in trees] for trees in doc["rounds"]]
    return model
