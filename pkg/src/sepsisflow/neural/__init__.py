from .engine import NonFiniteError, Tensor, softmax_np, sparsemax_np
from .layers import Affine, AttentionEncoder, IdentityEncoder, MLP, ParamStore
from .optim import Adam
from .checkpoint import load_tensors, save_tensors

__all__ = [
    "Adam", "Affine", "AttentionEncoder", "IdentityEncoder", "MLP",
    "NonFiniteError", "ParamStore", "Tensor",
    "load_tensors", "save_tensors", "softmax_np", "sparsemax_np",
]
