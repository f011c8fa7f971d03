"""Residual face encoder.

Downsampling residual stages shrink the input to a 4x4 map, global sum
pooling collapses space, and a fully-connected head emits the shared
embedding.  The same trunk serves as the discriminator feature extractor
during adversarial training.
"""

from __future__ import annotations

import numpy as np
import torch
import torch.nn.functional as F
from torch import nn

from ..config import FaceEncoderConfig
from ..errors import InvalidInputError
from ..data.images import FaceImage


class StemBlockDown(nn.Module):
    """First stage: conv-relu-conv-pool with a pooled 1x1 skip."""

    def __init__(self, cin: int, cout: int) -> None:
        super().__init__()
        self.conv1 = nn.Conv2d(cin, cout, 3, padding=1)
        self.conv2 = nn.Conv2d(cout, cout, 3, padding=1)
        self.skip = nn.Conv2d(cin, cout, 1)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        h = self.conv2(F.relu(self.conv1(x)))
        h = F.avg_pool2d(h, 2)
        return h + self.skip(F.avg_pool2d(x, 2))


class ResBlockDown(nn.Module):
    """Pre-activation residual stage with 2x spatial downsampling."""

    def __init__(self, cin: int, cout: int) -> None:
        super().__init__()
        self.conv1 = nn.Conv2d(cin, cout, 3, padding=1)
        self.conv2 = nn.Conv2d(cout, cout, 3, padding=1)
        self.skip = nn.Conv2d(cin, cout, 1)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        h = self.conv2(F.relu(self.conv1(F.relu(x))))
        h = F.avg_pool2d(h, 2)
        return h + F.avg_pool2d(self.skip(x), 2)


class ResBlock(nn.Module):
    """Pre-activation residual stage at constant resolution."""

    def __init__(self, channels: int) -> None:
        super().__init__()
        self.conv1 = nn.Conv2d(channels, channels, 3, padding=1)
        self.conv2 = nn.Conv2d(channels, channels, 3, padding=1)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return x + self.conv2(F.relu(self.conv1(F.relu(x))))


class FaceEncoder(nn.Module):
    def __init__(self, config: FaceEncoderConfig) -> None:
        super().__init__()
        if config.resolution != 4 * 2 ** len(config.channels):
            raise InvalidInputError(
                f"resolution {config.resolution} incompatible with "
                f"{len(config.channels)} downsampling stages"
            )
        self.config = config
        widths = list(config.channels)
        self.stem = StemBlockDown(3, widths[0])
        self.downs = nn.ModuleList(
            ResBlockDown(widths[i], widths[i + 1]) for i in range(len(widths) - 1)
        )
        self.final = ResBlock(widths[-1]) if config.final_block else None
        self.head = nn.Linear(widths[-1], config.embed_dim)

    def feature_map(self, x: torch.Tensor) -> torch.Tensor:
        """Trunk output before pooling; 4x4 spatial for valid inputs."""
        if x.dim() != 4 or x.shape[1] != 3:
            raise InvalidInputError(f"expected [B, 3, H, W] images, got {tuple(x.shape)}")
        if x.shape[2] != self.config.resolution or x.shape[3] != self.config.resolution:
            raise InvalidInputError(
                f"expected {self.config.resolution}x{self.config.resolution} input, "
                f"got {x.shape[2]}x{x.shape[3]}"
            )
        h = self.stem(x)
        for block in self.downs:
            h = block(h)
        if self.final is not None:
            h = self.final(h)
        return h

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        h = F.relu(self.feature_map(x))
        pooled = h.sum(dim=(2, 3))  # global sum pooling
        return self.head(pooled)

    def embed_numpy(self, faces) -> np.ndarray:
        """Eval-mode embeddings for FaceImages or a [B, 3, H, W] array."""
        if isinstance(faces, FaceImage):
            faces = [faces]
        if isinstance(faces, (list, tuple)):
            arr = np.stack([f.pixels for f in faces])
        else:
            arr = np.asarray(faces, dtype=np.float32)
            if arr.ndim == 3:
                arr = arr[None]
        was_training = self.training
        self.eval()
        try:
            with torch.no_grad():
                out = self(torch.from_numpy(np.ascontiguousarray(arr, dtype=np.float32)))
        finally:
            self.train(was_training)
        return out.numpy()

    def arch_descriptor(self) -> dict:
        return {
            "class": "FaceEncoder",
            "resolution": self.config.resolution,
            "channels": list(self.config.channels),
            "final_block": self.config.final_block,
            "embed_dim": self.config.embed_dim,
        }

    @classmethod
    def from_descriptor(cls, desc: dict) -> "FaceEncoder":
        cfg = FaceEncoderConfig(
            resolution=desc["resolution"],
            channels=tuple(desc["channels"]),
            final_block=desc["final_block"],
            embed_dim=desc["embed_dim"],
        )
        return cls(cfg)
