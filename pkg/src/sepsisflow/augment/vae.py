"""Conditional VAE over transitions: encode (s, one-hot a), decode (z, a, r, d) -> s'."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..cohort import N_ACTIONS, N_FEATURES, Transition, transitions_to_arrays
from ..neural import MLP, Adam, NonFiniteError, ParamStore, Tensor


@dataclass(frozen=True)
class VaeConfig:
    z_dim: int = 8
    beta: float = 1.0
    hidden: int = 64
    epochs: int = 30
    lr: float = 1e-3
    batch_size: int = 128
    seed: int = 0

    def __post_init__(self):
        if self.z_dim < 1 or self.epochs < 1 or self.lr <= 0:
            raise ValueError("invalid VAE config")


def kl_gaussian_np(mu: np.ndarray, logvar: np.ndarray) -> np.ndarray:
    """Closed-form KL(N(mu, diag exp(logvar)) || N(0, I)) per row."""
    return 0.5 * np.sum(mu ** 2 + np.exp(logvar) - 1.0 - logvar, axis=-1)


@dataclass
class VaeModel:
    store: ParamStore
    config: VaeConfig
    lo: np.ndarray           # per-feature plausibility bounds from real s'
    hi: np.ndarray
    losses: list = field(default_factory=list)

    def __post_init__(self):
        z, h = self.config.z_dim, self.config.hidden
        self.encoder = MLP(self.store, "vae.enc", [N_FEATURES + N_ACTIONS, h, 2 * z])
        self.decoder = MLP(self.store, "vae.dec", [z + N_ACTIONS + 2, h, N_FEATURES])
        # constant selection matrices split the encoder head into (mu, logvar)
        eye = np.eye(2 * z)
        self._sel_mu = Tensor(eye[:, :z])
        self._sel_lv = Tensor(eye[:, z:])

    def encode(self, s: Tensor, a_onehot: Tensor) -> tuple[Tensor, Tensor]:
        head = self.encoder(s.concat(a_onehot))
        return head @ self._sel_mu, head @ self._sel_lv

    def decode(self, z: Tensor, a_onehot: Tensor, r: Tensor, d: Tensor) -> Tensor:
        return self.decoder(z.concat(a_onehot).concat(r).concat(d))


def _onehot(a: np.ndarray) -> np.ndarray:
    return np.eye(N_ACTIONS)[np.asarray(a, dtype=np.int64)]


def vae_loss(model: VaeModel, s, a_onehot, r, d, s_next, eps) -> tuple[Tensor, Tensor, Tensor]:
    """Returns (total, reconstruction, KL) as scalar tensors for one batch."""
    mu, logvar = model.encode(s, a_onehot)
    sigma = (logvar * 0.5).exp()
    z = mu + sigma * eps
    s_hat = model.decode(z, a_onehot, r, d)
    recon = (s_hat - s_next).square().sum(axis=1).mean()
    kl = ((mu.square() + (sigma.square() - 1.0) - logvar) * 0.5).sum(axis=1).mean()
    total = recon + kl * model.config.beta
    return total, recon, kl


def vae_train(transitions: list[Transition], config: VaeConfig = VaeConfig()) -> VaeModel:
    if not transitions:
        raise ValueError("no transitions to train on")
    arr = transitions_to_arrays(transitions)
    store = ParamStore(seed=config.seed)
    lo = arr["s_next"].min(axis=0)
    hi = arr["s_next"].max(axis=0)
    model = VaeModel(store=store, config=config, lo=lo, hi=hi)
    opt = Adam(store, lr=config.lr)
    rng = np.random.default_rng(config.seed)
    n = len(transitions)
    a1h = _onehot(arr["a"])
    for _ in range(config.epochs):
        order = rng.permutation(n)
        epoch_losses = []
        for start in range(0, n, config.batch_size):
            idx = order[start:start + config.batch_size]
            eps = rng.standard_normal((len(idx), config.z_dim))
            total, _, _ = vae_loss(
                model,
                Tensor(arr["s"][idx]), Tensor(a1h[idx]),
                Tensor(arr["r"][idx, None]), Tensor(arr["d"][idx, None]),
                Tensor(arr["s_next"][idx]), Tensor(eps))
            if not np.isfinite(total.value):
                raise NonFiniteError("VAE training diverged")
            store.zero_grad()
            total.backward()
            opt.step()
            epoch_losses.append(float(total.value))
        model.losses.append(float(np.mean(epoch_losses)))
    return model


def vae_sample(model: VaeModel, a, r, d, n: int, seed: int = 0) -> np.ndarray:
    """Decode n next states from prior draws conditioned on (a, r, d).

    Outputs are clipped to the per-feature bounds seen in training; rows with
    non-finite values are dropped, so fewer than n rows may come back."""
    if n <= 0:
        raise ValueError("n must be positive")
    rng = np.random.default_rng(seed)
    z = rng.standard_normal((n, model.config.z_dim))
    a_arr = np.broadcast_to(np.asarray(a, dtype=np.int64), (n,))
    r_arr = np.broadcast_to(np.asarray(r, dtype=np.float64), (n,))
    d_arr = np.broadcast_to(np.asarray(d, dtype=np.float64), (n,))
    out = model.decode(Tensor(z), Tensor(_onehot(a_arr)),
                       Tensor(r_arr[:, None]), Tensor(d_arr[:, None])).value
    out = out[np.all(np.isfinite(out), axis=1)]
    return np.clip(out, model.lo, model.hi)
