"""Discriminator scores and adversarial losses.

The discriminator is the transferred face-encoder trunk phi plus a scalar
affine head psi; the condition enters as an inner product:

    score(f, c) = c . phi(f) + psi(phi(f))

Relativistic scores are differences of that score between the two face
arguments, and the identity variant adds matched-minus-mismatched
condition terms so mismatched pairs are penalized.  Losses are the
non-saturating form -log sigmoid(score), computed via softplus for
stability.
"""

from __future__ import annotations

from typing import Callable

import torch
import torch.nn.functional as F
from torch import nn

from ..config import FaceEncoderConfig
from ..errors import InvalidInputError
from ..nets.face import FaceEncoder


class Discriminator(nn.Module):
    """Projection discriminator over a face-encoder trunk."""

    def __init__(self, face_config: FaceEncoderConfig) -> None:
        super().__init__()
        self.phi = FaceEncoder(face_config)
        self.psi = nn.Linear(face_config.embed_dim, 1)

    def features(self, f: torch.Tensor) -> torch.Tensor:
        """phi(f): the embedding the projection term dots against."""
        return self.phi(f)

    def score_from_features(self, phi_f: torch.Tensor, c: torch.Tensor) -> torch.Tensor:
        if c.shape != phi_f.shape:
            raise InvalidInputError(
                f"condition shape {tuple(c.shape)} != feature shape {tuple(phi_f.shape)}"
            )
        return (c * phi_f).sum(dim=1) + self.psi(phi_f).squeeze(1)

    def forward(self, f: torch.Tensor, c: torch.Tensor) -> torch.Tensor:
        return self.score_from_features(self.features(f), c)

    def arch_descriptor(self) -> dict:
        desc = self.phi.arch_descriptor()
        return {"class": "Discriminator", "trunk": desc}

    @classmethod
    def from_descriptor(cls, desc: dict) -> "Discriminator":
        trunk = desc["trunk"]
        cfg = FaceEncoderConfig(
            resolution=trunk["resolution"],
            channels=tuple(trunk["channels"]),
            final_block=trunk["final_block"],
            embed_dim=trunk["embed_dim"],
        )
        return cls(cfg)


def discriminator_score(disc: Discriminator, f: torch.Tensor, c: torch.Tensor) -> torch.Tensor:
    """Pre-activation conditional score c.phi(f) + psi(phi(f))."""
    return disc(f, c)


def relativistic_scores(
    disc: Discriminator, f_a: torch.Tensor, f_b: torch.Tensor, c: torch.Tensor
) -> torch.Tensor:
    """score(f_a, c) - score(f_b, c); antisymmetric in (f_a, f_b)."""
    return disc(f_a, c) - disc(f_b, c)


def relativistic_identity_scores(
    disc: Discriminator,
    f_real: torch.Tensor,
    f_fake: torch.Tensor,
    c_pos: torch.Tensor,
    c_neg: torch.Tensor,
) -> tuple[torch.Tensor, torch.Tensor]:
    """(d_score, g_score) with the mismatched-identity terms.

    d_score grades the real face against the fake and rewards the real
    face matching c_pos better than c_neg; g_score is the mirror for the
    fake face.  With c_pos == c_neg the identity terms cancel exactly and
    both reduce to the plain relativistic scores.
    """
    phi_real = disc.features(f_real)
    phi_fake = disc.features(f_fake)
    s_real = disc.score_from_features(phi_real, c_pos)
    s_fake = disc.score_from_features(phi_fake, c_pos)
    id_real = (c_pos * phi_real).sum(dim=1) - (c_neg * phi_real).sum(dim=1)
    id_fake = (c_pos * phi_fake).sum(dim=1) - (c_neg * phi_fake).sum(dim=1)
    d_score = (s_real - s_fake) + id_real
    g_score = (s_fake - s_real) + id_fake
    return d_score, g_score


def d_loss_from_scores(d_score: torch.Tensor) -> torch.Tensor:
    """-mean log sigmoid(d_score), in the overflow-safe softplus form."""
    return F.softplus(-d_score).mean()


def g_loss_from_scores(g_score: torch.Tensor) -> torch.Tensor:
    return F.softplus(-g_score).mean()


def d_loss(
    disc: Discriminator,
    f_real: torch.Tensor,
    f_fake: torch.Tensor,
    c_pos: torch.Tensor,
    c_neg: torch.Tensor,
    use_mismatched_identity_loss: bool = True,
) -> torch.Tensor:
    if use_mismatched_identity_loss:
        d_score, _ = relativistic_identity_scores(disc, f_real, f_fake, c_pos, c_neg)
    else:
        d_score = relativistic_scores(disc, f_real, f_fake, c_pos)
    return d_loss_from_scores(d_score)


def g_loss(
    disc: Discriminator,
    f_real: torch.Tensor,
    f_fake: torch.Tensor,
    c_pos: torch.Tensor,
    c_neg: torch.Tensor,
    use_mismatched_identity_loss: bool = True,
) -> torch.Tensor:
    if use_mismatched_identity_loss:
        _, g_score = relativistic_identity_scores(disc, f_real, f_fake, c_pos, c_neg)
    else:
        g_score = relativistic_scores(disc, f_fake, f_real, c_pos)
    return g_loss_from_scores(g_score)


def r1_penalty(
    score_fn: Callable[[torch.Tensor], torch.Tensor],
    images: torch.Tensor,
    gamma: float,
) -> torch.Tensor:
    """(gamma / 2) * mean_b || d score / d image ||^2 on real samples.

    ``score_fn`` maps an image batch to per-sample pre-activation scores;
    the returned penalty supports backprop into the score function's
    parameters (double backward).
    """
    x = images.detach().requires_grad_(True)
    scores = score_fn(x)
    if scores.dim() != 1 or scores.shape[0] != x.shape[0]:
        raise InvalidInputError(
            f"score_fn must return one scalar per sample, got {tuple(scores.shape)}"
        )
    (grads,) = torch.autograd.grad(scores.sum(), x, create_graph=True, allow_unused=True)
    if grads is None:
        # Constant score function: zero gradient, zero penalty.
        return scores.sum() * 0.0
    sq_norms = grads.reshape(grads.shape[0], -1).pow(2).sum(dim=1)
    return 0.5 * gamma * sq_norms.mean()
