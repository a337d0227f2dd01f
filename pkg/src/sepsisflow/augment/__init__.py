from .diffusion import (
    DiffusionConfig, DiffusionModel, diffusion_forward, diffusion_sample,
    diffusion_train, make_schedule, timestep_embedding,
)
from .rebalance import augment_minority
from .vae import VaeConfig, VaeModel, kl_gaussian_np, vae_loss, vae_sample, vae_train

__all__ = [
    "DiffusionConfig", "DiffusionModel", "VaeConfig", "VaeModel",
    "augment_minority", "diffusion_forward", "diffusion_sample",
    "diffusion_train", "kl_gaussian_np", "make_schedule",
    "timestep_embedding", "vae_loss", "vae_sample", "vae_train",
]
