"""Discrete batch-constrained Q-learning baseline: a behavior-cloning head
restricts the Q-maximization to actions the logged policy plausibly takes."""

from __future__ import annotations

import numpy as np

from ..cohort import Transition, transitions_to_arrays
from ..neural import Adam, NonFiniteError, ParamStore, Tensor
from .awr import PolicyBundle, TrainConfig


def _bc_probs_np(bundle: PolicyBundle, z: np.ndarray) -> np.ndarray:
    logits = bundle.policy(Tensor(z)).value
    e = np.exp(logits - logits.max(axis=1, keepdims=True))
    return e / e.sum(axis=1, keepdims=True)


def _allowed_mask(bc: np.ndarray, threshold: float) -> np.ndarray:
    """Actions with bc probability within `threshold` of the per-row max."""
    return bc >= threshold * bc.max(axis=1, keepdims=True)


def bcq_probs(bundle: PolicyBundle, s: np.ndarray) -> np.ndarray:
    """Action distribution of the constrained greedy policy: softmax over
    Q restricted to BC-allowed actions; disallowed actions get probability 0."""
    z, _ = bundle.encode_np(s)
    bc = _bc_probs_np(bundle, z)
    mask = _allowed_mask(bc, bundle.bc_threshold)
    q = bundle.q(Tensor(z)).value
    masked = np.where(mask, q, -np.inf)
    e = np.exp(masked - masked.max(axis=1, keepdims=True))
    return e / e.sum(axis=1, keepdims=True)


def bcq_train(transitions: list[Transition],
              config: TrainConfig = TrainConfig(),
              bc_threshold: float = 0.3) -> PolicyBundle:
    if not transitions:
        raise ValueError("no transitions to train on")
    if not 0.0 <= bc_threshold <= 1.0:
        raise ValueError("bc_threshold must be in [0, 1]")
    arr = transitions_to_arrays(transitions)
    store = ParamStore(seed=config.seed)
    bundle = PolicyBundle(store=store, config=config, kind="bcq",
                          bc_threshold=bc_threshold)
    opt = Adam(store, lr=config.lr)
    rng = np.random.default_rng(config.seed)
    n = len(transitions)
    for step in range(config.steps):
        idx = rng.integers(n, size=min(config.batch_size, n))
        s, a = arr["s"][idx], arr["a"][idx]
        z_next, _ = bundle.encode_np(arr["s_next"][idx])
        bc_next = _bc_probs_np(bundle, z_next)
        mask = _allowed_mask(bc_next, bc_threshold)
        zt_next = bundle.target_encode_np(arr["s_next"][idx])
        q_next = np.where(mask, bundle.target_q_np(zt_next), -np.inf).max(axis=1)
        y = arr["r"][idx] + config.gamma * (1.0 - arr["d"][idx]) * q_next

        z, _ = bundle.encoder(Tensor(s))
        logp = bundle.policy(z).log_softmax().gather_cols(a)
        loss_bc = -logp.mean()
        q_sa = bundle.q(z).gather_cols(a)
        loss_q = (q_sa - Tensor(y)).square().mean()
        total = loss_bc + loss_q
        if not np.isfinite(total.value):
            raise NonFiniteError(f"non-finite loss at step {step}")
        store.zero_grad()
        total.backward()
        opt.step()
        bundle.soft_update("q")
        bundle.soft_update("e")
        bundle.history.append({"step": step, "loss_bc": float(loss_bc.value),
                               "loss_q": float(loss_q.value)})
    return bundle
