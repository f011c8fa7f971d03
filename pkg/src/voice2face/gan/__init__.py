from .latent import sample_latent, truncate_latent
from .scores import (
    Discriminator,
    discriminator_score,
    relativistic_scores,
    relativistic_identity_scores,
    d_loss_from_scores,
    g_loss_from_scores,
    d_loss,
    g_loss,
    r1_penalty,
)
from .training import train_gan, load_gan_checkpoint, GanTrainResult

__all__ = [
    "Discriminator",
    "sample_latent",
    "truncate_latent",
    "discriminator_score",
    "relativistic_scores",
    "relativistic_identity_scores",
    "d_loss_from_scores",
    "g_loss_from_scores",
    "d_loss",
    "g_loss",
    "r1_penalty",
    "train_gan",
    "load_gan_checkpoint",
    "GanTrainResult",
]
