"""Conditional image generator.

The latent z and the speech condition c are concatenated into the input
stage; on top of that, every stage re-injects c through adaptive instance
normalization whose per-channel scale and bias are affine functions of c.
A tanh keeps outputs in [-1, 1].
"""

from __future__ import annotations

import numpy as np
import torch
import torch.nn.functional as F
from torch import nn

from ..config import GeneratorConfig
from ..errors import InvalidInputError


def adain(x: torch.Tensor, scale: torch.Tensor, bias: torch.Tensor, eps: float = 1e-5) -> torch.Tensor:
    """Instance-normalize each channel over space, then apply an affine.

    ``scale`` and ``bias`` are [B, C] (or [C]); the output has per-channel
    spatial mean ``bias`` and std ``|scale|`` up to the epsilon guard.
    """
    if x.dim() != 4:
        raise InvalidInputError(f"adain expects [B, C, H, W], got {tuple(x.shape)}")
    if scale.dim() == 1:
        scale = scale.unsqueeze(0).expand(x.shape[0], -1)
    if bias.dim() == 1:
        bias = bias.unsqueeze(0).expand(x.shape[0], -1)
    if scale.shape[1] != x.shape[1] or bias.shape[1] != x.shape[1]:
        raise InvalidInputError(
            f"scale/bias channels {scale.shape[1]}/{bias.shape[1]} != feature channels {x.shape[1]}"
        )
    mean = x.mean(dim=(2, 3), keepdim=True)
    std = torch.sqrt(x.var(dim=(2, 3), unbiased=False, keepdim=True) + eps)
    normed = (x - mean) / std
    return scale.unsqueeze(-1).unsqueeze(-1) * normed + bias.unsqueeze(-1).unsqueeze(-1)


class CondAffine(nn.Module):
    """Maps the condition vector to per-channel (scale, bias); initialized
    at identity (scale 1, bias 0)."""

    def __init__(self, cond_dim: int, channels: int) -> None:
        super().__init__()
        self.fc = nn.Linear(cond_dim, 2 * channels)
        nn.init.zeros_(self.fc.weight)
        nn.init.zeros_(self.fc.bias)
        self.channels = channels

    def forward(self, c: torch.Tensor) -> tuple[torch.Tensor, torch.Tensor]:
        out = self.fc(c)
        return 1.0 + out[:, : self.channels], out[:, self.channels :]


class GenBlockUp(nn.Module):
    """Residual upsampling stage conditioned through two AdaIN sites."""

    def __init__(self, cin: int, cout: int, cond_dim: int) -> None:
        super().__init__()
        self.affine1 = CondAffine(cond_dim, cin)
        self.conv1 = nn.Conv2d(cin, cout, 3, padding=1)
        self.affine2 = CondAffine(cond_dim, cout)
        self.conv2 = nn.Conv2d(cout, cout, 3, padding=1)
        self.skip = nn.Conv2d(cin, cout, 1)

    def forward(self, x: torch.Tensor, c: torch.Tensor) -> torch.Tensor:
        s1, b1 = self.affine1(c)
        h = F.relu(adain(x, s1, b1))
        h = F.interpolate(h, scale_factor=2, mode="nearest")
        h = self.conv1(h)
        s2, b2 = self.affine2(c)
        h = self.conv2(F.relu(adain(h, s2, b2)))
        return h + self.skip(F.interpolate(x, scale_factor=2, mode="nearest"))


class Generator(nn.Module):
    def __init__(self, config: GeneratorConfig) -> None:
        super().__init__()
        if config.resolution != 4 * 2 ** len(config.channels):
            raise InvalidInputError(
                f"resolution {config.resolution} incompatible with "
                f"{len(config.channels)} upsampling stages"
            )
        self.config = config
        self.fc = nn.Linear(config.z_dim + config.cond_dim, config.seed_channels * 16)
        widths = [config.seed_channels] + list(config.channels)
        self.blocks = nn.ModuleList(
            GenBlockUp(widths[i], widths[i + 1], config.cond_dim)
            for i in range(len(config.channels))
        )
        self.out_affine = CondAffine(config.cond_dim, widths[-1])
        self.out_conv = nn.Conv2d(widths[-1], 3, 3, padding=1)

    def forward(self, z: torch.Tensor, c: torch.Tensor) -> torch.Tensor:
        if z.dim() != 2 or z.shape[1] != self.config.z_dim:
            raise InvalidInputError(f"z must be [B, {self.config.z_dim}], got {tuple(z.shape)}")
        if c.dim() != 2 or c.shape[1] != self.config.cond_dim:
            raise InvalidInputError(f"c must be [B, {self.config.cond_dim}], got {tuple(c.shape)}")
        if z.shape[0] != c.shape[0]:
            raise InvalidInputError("z and c batch sizes differ")
        h = self.fc(torch.cat([z, c], dim=1))
        h = h.view(-1, self.config.seed_channels, 4, 4)
        for block in self.blocks:
            h = block(h, c)
        s, b = self.out_affine(c)
        return torch.tanh(self.out_conv(F.relu(adain(h, s, b))))

    def generate_numpy(self, z: np.ndarray, c: np.ndarray) -> np.ndarray:
        """Eval-mode generation from numpy latents; returns [B, 3, H, W]."""
        z = np.asarray(z, dtype=np.float32)
        c = np.asarray(c, dtype=np.float32)
        if z.ndim == 1:
            z = z[None]
        if c.ndim == 1:
            c = c[None]
        was_training = self.training
        self.eval()
        try:
            with torch.no_grad():
                out = self(torch.from_numpy(z), torch.from_numpy(c))
        finally:
            self.train(was_training)
        return out.numpy()

    def arch_descriptor(self) -> dict:
        return {
            "class": "Generator",
            "resolution": self.config.resolution,
            "channels": list(self.config.channels),
            "z_dim": self.config.z_dim,
            "cond_dim": self.config.cond_dim,
            "seed_channels": self.config.seed_channels,
        }

    @classmethod
    def from_descriptor(cls, desc: dict) -> "Generator":
        cfg = GeneratorConfig(
            resolution=desc["resolution"],
            channels=tuple(desc["channels"]),
            z_dim=desc["z_dim"],
            cond_dim=desc["cond_dim"],
            seed_channels=desc["seed_channels"],
        )
        return cls(cfg)
