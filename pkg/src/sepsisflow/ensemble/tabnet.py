"""Sequential-attention tabular classifier: per-step sparsemax feature masks
gate the input before shared decision layers; step outputs sum into the
class head."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..neural import (
    MLP, Adam, Affine, NonFiniteError, ParamStore, Tensor, load_tensors,
    save_tensors,
)


@dataclass(frozen=True)
class TabConfig:
    n_steps: int = 3
    hidden: int = 32
    epochs: int = 60
    lr: float = 3e-3
    batch_size: int = 256
    seed: int = 0

    def __post_init__(self):
        if self.n_steps < 1 or self.hidden < 1 or self.epochs < 1 or self.lr <= 0:
            raise ValueError("invalid TabClassifier config")


@dataclass
class TabClassifier:
    store: ParamStore
    config: TabConfig
    n_features: int
    n_classes: int = 4
    losses: list = field(default_factory=list)

    def __post_init__(self):
        c = self.config
        d, h = self.n_features, c.hidden
        self.mask_nets = [MLP(self.store, f"tab.mask{t}", [d, h, d])
                          for t in range(c.n_steps)]
        self.decision = MLP(self.store, "tab.dec", [d, h, h])
        self.head = Affine(self.store, "tab.head", h, self.n_classes)

    def forward(self, x: Tensor) -> tuple[Tensor, list[Tensor]]:
        """Returns (class logits, per-step sparsemax masks)."""
        masks, agg = [], None
        for net in self.mask_nets:
            m = net(x).sparsemax()
            masks.append(m)
            out = self.decision(m * x)
            agg = out if agg is None else agg + out
        return self.head(agg), masks

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        if X.shape[1] != self.n_features:
            raise ValueError(f"expected {self.n_features} features, got {X.shape[1]}")
        logits, _ = self.forward(Tensor(X))
        e = np.exp(logits.value - logits.value.max(axis=1, keepdims=True))
        return e / e.sum(axis=1, keepdims=True)

    def masks_np(self, X: np.ndarray) -> np.ndarray:
        """(n_steps, n, n_features) mask tensor for inspection."""
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        _, masks = self.forward(Tensor(X))
        return np.stack([m.value for m in masks])


def tab_train(X: np.ndarray, y: np.ndarray,
              config: TabConfig = TabConfig(), n_classes: int = 4) -> TabClassifier:
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    y = np.asarray(y, dtype=np.int64)
    if X.shape[0] < 1:
        raise ValueError("empty training set")
    store = ParamStore(seed=config.seed)
    clf = TabClassifier(store=store, config=config, n_features=X.shape[1],
                        n_classes=n_classes)
    opt = Adam(store, lr=config.lr)
    rng = np.random.default_rng(config.seed)
    n = X.shape[0]
    for _ in range(config.epochs):
        order = rng.permutation(n)
        epoch_losses = []
        for start in range(0, n, config.batch_size):
            idx = order[start:start + config.batch_size]
            logits, _ = clf.forward(Tensor(X[idx]))
            loss = -logits.log_softmax().gather_cols(y[idx]).mean()
            if not np.isfinite(loss.value):
                raise NonFiniteError("TabClassifier training diverged")
            store.zero_grad()
            loss.backward()
            opt.step()
            epoch_losses.append(float(loss.value))
        clf.losses.append(float(np.mean(epoch_losses)))
    return clf


def save_tab(path, clf: TabClassifier):
    meta = {"config": {"n_steps": clf.config.n_steps, "hidden": clf.config.hidden,
                       "epochs": clf.config.epochs, "lr": clf.config.lr,
                       "batch_size": clf.config.batch_size, "seed": clf.config.seed},
            "n_features": clf.n_features, "n_classes": clf.n_classes}
    save_tensors(path, clf.store.state_dict(), meta=meta)


def load_tab(path) -> TabClassifier:
    tensors, meta = load_tensors(path)
    config = TabConfig(**meta["config"])
    clf = TabClassifier(store=ParamStore(seed=config.seed), config=config,
                        n_features=meta["n_features"], n_classes=meta["n_classes"])
    clf.store.load_state_dict(tensors)
    return clf
