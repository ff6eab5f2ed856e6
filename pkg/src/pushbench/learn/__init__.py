from .nets import MlpSpec, init_mlp, mlp_forward, mlp_loss_and_grad
from .optim import AdamState, adam_step
from .standardize import Standardiser
from .checkpoint import Checkpoint, TrainConfig
from .train import train_mlp
from .diffusion import (
    DiffusionSpec,
    noise_schedule,
    ddpm_train,
    ddpm_sample,
    ddpm_sample_batch,
)

__all__ = [
    "MlpSpec",
    "init_mlp",
    "mlp_forward",
    "mlp_loss_and_grad",
    "AdamState",
    "adam_step",
    "Standardiser",
    "Checkpoint",
    "TrainConfig",
    "train_mlp",
    "DiffusionSpec",
    "noise_schedule",
    "ddpm_train",
    "ddpm_sample",
    "ddpm_sample_batch",
]
