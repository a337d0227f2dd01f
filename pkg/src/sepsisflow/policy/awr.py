"""Advantage-weighted regression with a shared feature-attention encoder:
V trained by expectile regression on one-step targets, Q regressed to the
same target, and the policy fit by advantage-weighted log-likelihood."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..cohort import N_ACTIONS, N_FEATURES, Transition, transitions_to_arrays
from ..neural import (
    MLP, Adam, AttentionEncoder, IdentityEncoder, NonFiniteError, ParamStore,
    Tensor,
)

WEIGHT_CLIP = 20.0


@dataclass(frozen=True)
class TrainConfig:
    gamma: float = 0.99
    tau: float = 0.7
    beta: float = 1.0
    alpha: float = 0.005
    batch_size: int = 256
    steps: int = 2000
    lr: float = 3e-4
    seed: int = 0
    use_attention: bool = True
    z_dim: int = 32
    head_hidden: int = 64

    def __post_init__(self):
        if not 0.0 < self.gamma <= 1.0:
            raise ValueError("gamma must be in (0, 1]")
        if not 0.0 < self.tau < 1.0:
            raise ValueError("tau must be in (0, 1)")
        if self.beta <= 0.0:
            raise ValueError("beta must be positive")
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError("alpha must be in [0, 1]")
        if self.batch_size < 1 or self.steps < 1 or self.lr <= 0:
            raise ValueError("invalid batch/steps/lr")


def value_target(r, d, v_next, gamma, v=None):
    """One-step target y_V = r + gamma (1 - d) V'(z') and, when the online
    value V(z) is supplied, the TD residual delta = y_V - V(z)."""
    y = np.asarray(r) + gamma * (1.0 - np.asarray(d, dtype=np.float64)) * np.asarray(v_next)
    if v is None:
        return y
    return y, y - np.asarray(v)


def expectile_loss(delta: np.ndarray, tau: float) -> float:
    """Mean asymmetric squared loss: weight tau above, 1 - tau below."""
    if not 0.0 < tau < 1.0:
        raise ValueError("tau must be in (0, 1)")
    delta = np.asarray(delta, dtype=np.float64)
    w = np.where(delta > 0, tau, 1.0 - tau)
    return float(np.mean(w * delta ** 2))


def advantage_weights(adv: np.ndarray, beta: float) -> np.ndarray:
    """exp(A / beta) normalized to batch mean 1, clipped for stability."""
    if beta <= 0:
        raise ValueError("beta must be positive")
    adv = np.asarray(adv, dtype=np.float64)
    e = np.exp((adv - adv.max()) / beta)
    return np.minimum(e / e.mean(), WEIGHT_CLIP)


def _mlp_forward_np(params: list[tuple[np.ndarray, np.ndarray]], x: np.ndarray) -> np.ndarray:
    for i, (w, b) in enumerate(params):
        x = x @ w + b
        if i < len(params) - 1:
            x = np.tanh(x)
    return x


def _mlp_params(store: ParamStore, name: str, n_layers: int):
    return [(store[f"{name}.{i}.W"].value, store[f"{name}.{i}.b"].value)
            for i in range(n_layers)]


@dataclass
class PolicyBundle:
    store: ParamStore
    config: TrainConfig
    kind: str                      # "awr" or "bcq"
    bc_threshold: float = 0.0
    history: list = field(default_factory=list)
    v_target: list = field(default_factory=list)   # target-head (W, b) copies
    q_target: list = field(default_factory=list)   # BCQ target Q (W, b) copies
    e_target: list = field(default_factory=list)   # target encoder (W, b) copies

    def __post_init__(self):
        c = self.config
        self.encoder = (AttentionEncoder(self.store, state_dim=N_FEATURES,
                                         z_dim=c.z_dim)
                        if c.use_attention else IdentityEncoder(N_FEATURES))
        zd = self.encoder.z_dim
        h = c.head_hidden
        self.policy = MLP(self.store, "pi", [zd, h, N_ACTIONS])
        self.q = MLP(self.store, "q", [zd, h, N_ACTIONS])
        self.v = MLP(self.store, "v", [zd, h, 1])
        if not self.v_target:
            self.v_target = [(w.copy(), b.copy())
                             for w, b in _mlp_params(self.store, "v", 2)]
        if not self.q_target:
            self.q_target = [(w.copy(), b.copy())
                             for w, b in _mlp_params(self.store, "q", 2)]
        if c.use_attention and not self.e_target:
            self.e_target = [(w.copy(), b.copy())
                             for w, b in self._encoder_params()]

    def _encoder_params(self):
        return (_mlp_params(self.store, "attn.score", 2)
                + _mlp_params(self.store, "attn.enc", 2))

    # ---- numpy-side forwards (no gradients) --------------------------

    def encode_np(self, s: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        z, w = self.encoder(Tensor(np.atleast_2d(s)))
        return z.value, w.value

    def target_v_np(self, z: np.ndarray) -> np.ndarray:
        return _mlp_forward_np(self.v_target, z)[:, 0]

    def target_encode_np(self, s: np.ndarray) -> np.ndarray:
        """Latent for bootstrap targets from the frozen encoder copy, so the
        target heads do not chase a moving representation. Identity encoders
        have no parameters: z = s."""
        s = np.atleast_2d(s)
        if not self.e_target:
            return s
        score = _mlp_forward_np(self.e_target[:2], s)
        e = np.exp(score - score.max(axis=1, keepdims=True))
        w = e / e.sum(axis=1, keepdims=True)
        return _mlp_forward_np(self.e_target[2:],
                               w * s * float(self.encoder.state_dim))

    def probs_np(self, s: np.ndarray) -> np.ndarray:
        z, _ = self.encode_np(s)
        logits = self.policy(Tensor(z)).value
        e = np.exp(logits - logits.max(axis=1, keepdims=True))
        return e / e.sum(axis=1, keepdims=True)

    def target_q_np(self, z: np.ndarray) -> np.ndarray:
        return _mlp_forward_np(self.q_target, z)

    def soft_update(self, head: str = "v"):
        a = self.config.alpha
        if head == "e":
            if not self.e_target:
                return
            online = self._encoder_params()
            current = self.e_target
        else:
            online = _mlp_params(self.store, head, 2)
            current = self.v_target if head == "v" else self.q_target
        updated = [((1.0 - a) * tw + a * ow, (1.0 - a) * tb + a * ob)
                   for (tw, tb), (ow, ob) in zip(current, online)]
        if head == "e":
            self.e_target = updated
        elif head == "v":
            self.v_target = updated
        else:
            self.q_target = updated


def awr_train(transitions: list[Transition],
              config: TrainConfig = TrainConfig()) -> PolicyBundle:
    if not transitions:
        raise ValueError("no transitions to train on")
    arr = transitions_to_arrays(transitions)
    store = ParamStore(seed=config.seed)
    bundle = PolicyBundle(store=store, config=config, kind="awr")
    opt = Adam(store, lr=config.lr)
    rng = np.random.default_rng(config.seed)
    n = len(transitions)
    for step in range(config.steps):
        idx = rng.integers(n, size=min(config.batch_size, n))
        s, a = arr["s"][idx], arr["a"][idx]
        z_next = bundle.target_encode_np(arr["s_next"][idx])
        y = value_target(arr["r"][idx], arr["d"][idx],
                         bundle.target_v_np(z_next), config.gamma)

        z, _ = bundle.encoder(Tensor(s))
        v_flat = bundle.v(z).gather_cols(np.zeros(len(idx), dtype=np.int64))
        delta = y - v_flat.value
        w_v = np.where(delta > 0, config.tau, 1.0 - config.tau)
        loss_v = ((Tensor(y) - v_flat).square() * w_v).mean()

        q_sa = bundle.q(z).gather_cols(a)
        loss_q = (q_sa - Tensor(y)).square().mean()

        adv = q_sa.value - v_flat.value
        w_a = advantage_weights(adv, config.beta)   # constant in the policy grad
        logp = bundle.policy(z).log_softmax().gather_cols(a)
        loss_pi = -(logp * w_a).mean()

        total = loss_v + loss_q + loss_pi
        if not np.isfinite(total.value):
            raise NonFiniteError(f"non-finite loss at step {step}")
        store.zero_grad()
        total.backward()
        opt.step()
        bundle.soft_update()
        bundle.soft_update("e")
        bundle.history.append({"step": step, "loss_v": float(loss_v.value),
                               "loss_q": float(loss_q.value),
                               "loss_pi": float(loss_pi.value)})
    return bundle


def policy_action(bundle: PolicyBundle, s: np.ndarray) -> dict:
    """Greedy action with probabilities and attention weights for one
    normalized state. Ties break to the lowest action id."""
    s = np.asarray(s, dtype=np.float64)
    if s.shape != (N_FEATURES,):
        raise ValueError(f"expected state shape ({N_FEATURES},), got {s.shape}")
    if bundle.kind == "bcq":
        from .bcq import bcq_probs
        probs = bcq_probs(bundle, s[None, :])[0]
    else:
        probs = bundle.probs_np(s[None, :])[0]
    _, w = bundle.encode_np(s[None, :])
    return {"action": int(np.argmax(probs)),
            "probabilities": probs,
            "attention_weights": w[0]}


def attention_trajectory(bundle: PolicyBundle, values: np.ndarray) -> np.ndarray:
    """Per-window attention weight matrix (n_windows x n_features) for one
    normalized episode."""
    values = np.atleast_2d(np.asarray(values, dtype=np.float64))
    if values.shape[1] != N_FEATURES:
        raise ValueError("dimension mismatch")
    _, w = bundle.encode_np(values)
    return w
