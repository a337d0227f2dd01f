"""Parameter store, affine/MLP building blocks and the feature-attention encoder."""

from __future__ import annotations

import numpy as np

from .engine import NonFiniteError, Tensor


class ParamStore:
    """Named float64 parameter tensors with a shared RNG for initialization."""

    def __init__(self, seed: int = 0):
        self.rng = np.random.default_rng(seed)
        self.params: dict[str, Tensor] = {}

    def add(self, name: str, shape: tuple[int, ...], fan_in: int | None = None) -> Tensor:
        if name in self.params:
            raise ValueError(f"duplicate parameter {name!r}")
        if fan_in is None:
            fan_in = shape[0] if len(shape) > 1 else max(shape[0], 1)
        bound = 1.0 / np.sqrt(fan_in)
        t = Tensor(self.rng.uniform(-bound, bound, size=shape), requires_grad=True, name=name)
        self.params[name] = t
        return t

    def add_zeros(self, name: str, shape: tuple[int, ...]) -> Tensor:
        if name in self.params:
            raise ValueError(f"duplicate parameter {name!r}")
        t = Tensor(np.zeros(shape), requires_grad=True, name=name)
        self.params[name] = t
        return t

    def __getitem__(self, name: str) -> Tensor:
        return self.params[name]

    def zero_grad(self):
        for t in self.params.values():
            t.grad = None

    def items(self):
        return self.params.items()

    def state_dict(self) -> dict[str, np.ndarray]:
        return {k: v.value.copy() for k, v in self.params.items()}

    def load_state_dict(self, state: dict[str, np.ndarray]):
        for k, v in state.items():
            if k not in self.params:
                raise KeyError(f"unknown parameter {k!r}")
            if self.params[k].value.shape != np.asarray(v).shape:
                raise ValueError(f"shape mismatch for {k!r}")
            self.params[k].value = np.asarray(v, dtype=np.float64).copy()


class Affine:
    """y = x W + b"""

    def __init__(self, store: ParamStore, name: str, d_in: int, d_out: int):
        self.W = store.add(f"{name}.W", (d_in, d_out), fan_in=d_in)
        self.b = store.add_zeros(f"{name}.b", (d_out,))

    def __call__(self, x: Tensor) -> Tensor:
        return x @ self.W + self.b


class MLP:
    """Stack of affine layers with tanh (or relu) between them."""

    def __init__(self, store, name, dims, activation="tanh"):
        self.layers = [Affine(store, f"{name}.{i}", a, b)
                       for i, (a, b) in enumerate(zip(dims[:-1], dims[1:]))]
        self.activation = activation

    def __call__(self, x: Tensor) -> Tensor:
        for i, layer in enumerate(self.layers):
            x = layer(x)
            if i < len(self.layers) - 1:
                x = x.tanh() if self.activation == "tanh" else x.relu()
        return x


class AttentionEncoder:
    """Feature-attention encoder: per-feature softmax weights gate the state
    before a shared MLP maps it to the latent embedding.

    Weights are non-negative and sum to 1 across features; the gated state is
    scaled back up by the feature count so its magnitude stays comparable to
    the raw input.
    """

    def __init__(self, store: ParamStore, state_dim: int = 30,
                 score_hidden: int = 32, enc_hidden: int = 64, z_dim: int = 32,
                 prefix: str = "attn"):
        self.state_dim = state_dim
        self.z_dim = z_dim
        self.score_net = MLP(store, f"{prefix}.score", [state_dim, score_hidden, state_dim])
        self.encoder = MLP(store, f"{prefix}.enc", [state_dim, enc_hidden, z_dim])

    def __call__(self, s: Tensor) -> tuple[Tensor, Tensor]:
        """Returns (latent embedding z, attention weights w)."""
        s.check_finite("attention input")
        w = self.score_net(s).softmax()
        z = self.encoder(w * s * float(self.state_dim))
        return z, w

    def weights(self, s: np.ndarray) -> np.ndarray:
        _, w = self(Tensor(np.atleast_2d(s)))
        return w.value


class IdentityEncoder:
    """No-op encoder used by the attention-ablated variants: z = s."""

    def __init__(self, state_dim: int = 30):
        self.state_dim = state_dim
        self.z_dim = state_dim

    def __call__(self, s: Tensor) -> tuple[Tensor, Tensor]:
        n = np.atleast_2d(s.value).shape[0]
        uniform = Tensor(np.full((n, self.state_dim), 1.0 / self.state_dim))
        return s, uniform

    def weights(self, s: np.ndarray) -> np.ndarray:
        return np.full((np.atleast_2d(s).shape[0], self.state_dim), 1.0 / self.state_dim)


def check_gradients_finite(store: ParamStore):
    for name, t in store.items():
        if t.grad is not None and not np.all(np.isfinite(t.grad)):
            raise NonFiniteError(f"gradient of {name}")
