"""DDPM-style diffusion over normalized observation windows."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..neural import MLP, Adam, NonFiniteError, ParamStore, Tensor

EMB_DIM = 8


@dataclass(frozen=True)
class DiffusionConfig:
    T: int = 100
    beta_min: float = 1e-4
    beta_max: float = 0.02
    hidden: int = 64
    epochs: int = 30
    lr: float = 1e-3
    batch_size: int = 128
    seed: int = 0

    def __post_init__(self):
        if self.T < 1 or not 0.0 <= self.beta_min <= self.beta_max < 1.0:
            raise ValueError("invalid diffusion config")


def make_schedule(config: DiffusionConfig) -> tuple[np.ndarray, np.ndarray]:
    """Linear beta schedule and its cumulative-product alpha-bar."""
    betas = np.linspace(config.beta_min, config.beta_max, config.T)
    alpha_bar = np.cumprod(1.0 - betas)
    return betas, alpha_bar


def timestep_embedding(t: np.ndarray, T: int) -> np.ndarray:
    """Sinusoidal embedding of t/T at EMB_DIM//2 geometric frequencies."""
    tn = np.asarray(t, dtype=np.float64)[:, None] / T
    freqs = 2.0 ** np.arange(EMB_DIM // 2)
    ang = 2.0 * np.pi * tn * freqs
    return np.concatenate([np.sin(ang), np.cos(ang)], axis=1)


def diffusion_forward(x0: np.ndarray, t: int, noise: np.ndarray,
                      config: DiffusionConfig = DiffusionConfig()) -> np.ndarray:
    """Closed-form jump to step t: sqrt(ab_t) x0 + sqrt(1 - ab_t) noise."""
    if not 1 <= t <= config.T:
        raise ValueError(f"t={t} outside [1, {config.T}]")
    _, alpha_bar = make_schedule(config)
    ab = alpha_bar[t - 1]
    return np.sqrt(ab) * x0 + np.sqrt(1.0 - ab) * noise


@dataclass
class DiffusionModel:
    store: ParamStore
    config: DiffusionConfig
    dim: int
    lo: np.ndarray
    hi: np.ndarray
    losses: list = field(default_factory=list)

    def __post_init__(self):
        self.betas, self.alpha_bar = make_schedule(self.config)
        h = self.config.hidden
        self.denoiser = MLP(self.store, "diff.eps",
                            [self.dim + EMB_DIM, h, h, self.dim])

    def predict_noise(self, x_t: np.ndarray, t: np.ndarray) -> np.ndarray:
        emb = timestep_embedding(t, self.config.T)
        return self.denoiser(Tensor(np.concatenate([x_t, emb], axis=1))).value


def diffusion_train(windows: np.ndarray,
                    config: DiffusionConfig = DiffusionConfig()) -> DiffusionModel:
    windows = np.asarray(windows, dtype=np.float64)
    if windows.ndim != 2 or windows.shape[0] == 0:
        raise ValueError("windows must be a non-empty 2-D array")
    n, dim = windows.shape
    store = ParamStore(seed=config.seed)
    model = DiffusionModel(store=store, config=config, dim=dim,
                           lo=windows.min(axis=0), hi=windows.max(axis=0))
    opt = Adam(store, lr=config.lr)
    rng = np.random.default_rng(config.seed)
    for _ in range(config.epochs):
        order = rng.permutation(n)
        epoch_losses = []
        for start in range(0, n, config.batch_size):
            idx = order[start:start + config.batch_size]
            x0 = windows[idx]
            t = rng.integers(1, config.T + 1, size=len(idx))
            eps = rng.standard_normal(x0.shape)
            ab = model.alpha_bar[t - 1][:, None]
            x_t = np.sqrt(ab) * x0 + np.sqrt(1.0 - ab) * eps
            inp = np.concatenate([x_t, timestep_embedding(t, config.T)], axis=1)
            pred = model.denoiser(Tensor(inp))
            loss = (pred - Tensor(eps)).square().sum(axis=1).mean()
            if not np.isfinite(loss.value):
                raise NonFiniteError("diffusion training diverged")
            store.zero_grad()
            loss.backward()
            opt.step()
            epoch_losses.append(float(loss.value))
        model.losses.append(float(np.mean(epoch_losses)))
    return model


def diffusion_sample(model: DiffusionModel, n: int, seed: int = 0,
                     eps_fn=None) -> np.ndarray:
    """Ancestral reverse loop from pure noise using the DDPM posterior mean.

    `eps_fn(x_t, t_array) -> noise estimate` overrides the trained denoiser
    (used to verify the loop against analytically known denoisers). Outputs
    are clipped to the training bounds; non-finite rows are dropped."""
    if n <= 0:
        raise ValueError("n must be positive")
    predict = eps_fn if eps_fn is not None else model.predict_noise
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((n, model.dim))
    for t in range(model.config.T, 0, -1):
        beta = model.betas[t - 1]
        ab = model.alpha_bar[t - 1]
        eps_hat = predict(x, np.full(n, t))
        x = (x - beta / np.sqrt(1.0 - ab) * eps_hat) / np.sqrt(1.0 - beta)
        if t > 1:
            x = x + np.sqrt(beta) * rng.standard_normal(x.shape)
    x = x[np.all(np.isfinite(x), axis=1)]
    return np.clip(x, model.lo, model.hi)
