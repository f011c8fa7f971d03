"""Raw-waveform speech encoder.

Sinc band-pass front end, a stack of strided 1-D conv blocks
(conv / batch norm / per-channel PReLU), average pooling over time so the
embedding size is input-length invariant, and a final fully-connected
projection to the shared embedding width.
"""

from __future__ import annotations

import math

import numpy as np
import torch
from torch import nn

from ..config import SpeechEncoderConfig
from ..errors import InvalidInputError
from ..data.audio import AudioWaveform
from .sinc import SincConv1d


class ConvBlock1d(nn.Module):
    def __init__(self, cin: int, cout: int, kernel: int, stride: int) -> None:
        super().__init__()
        self.conv = nn.Conv1d(cin, cout, kernel, stride=stride, padding=kernel // 2)
        self.bn = nn.BatchNorm1d(cout)
        self.act = nn.PReLU(cout)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.act(self.bn(self.conv(x)))


class SpeechEncoder(nn.Module):
    def __init__(self, config: SpeechEncoderConfig, sample_rate: int) -> None:
        super().__init__()
        if not (len(config.block_channels) == len(config.block_kernels) == len(config.block_strides)):
            raise InvalidInputError("block_channels/kernels/strides lengths differ")
        self.config = config
        self.sample_rate = sample_rate
        self.sinc = SincConv1d(
            config.n_filters,
            config.sinc_kernel_size,
            sample_rate,
            stride=config.sinc_stride,
            min_low_hz=config.min_low_hz,
            min_band_hz=config.min_band_hz,
        )
        self.sinc_bn = nn.BatchNorm1d(config.n_filters)
        self.sinc_act = nn.PReLU(config.n_filters)
        widths = (config.n_filters,) + tuple(config.block_channels)
        self.blocks = nn.ModuleList(
            ConvBlock1d(widths[i], widths[i + 1], config.block_kernels[i], config.block_strides[i])
            for i in range(len(config.block_channels))
        )
        self.head = nn.Linear(config.block_channels[-1], config.embed_dim)

    @property
    def min_input_length(self) -> int:
        total_stride = self.config.sinc_stride * math.prod(self.config.block_strides)
        return max(self.config.sinc_kernel_size, total_stride)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        if x.dim() != 2:
            raise InvalidInputError(f"expected [B, T] waveforms, got {tuple(x.shape)}")
        if x.shape[1] < self.min_input_length:
            raise InvalidInputError(
                f"waveform length {x.shape[1]} below minimum receptive field "
                f"{self.min_input_length}"
            )
        h = self.sinc_act(self.sinc_bn(self.sinc(x * self.config.input_gain)))
        for block in self.blocks:
            h = block(h)
        return self.head(h.mean(dim=2))

    def embed_numpy(self, waves) -> np.ndarray:
        """Eval-mode embeddings for AudioWaveforms or a [B, T] array."""
        if isinstance(waves, AudioWaveform):
            waves = [waves]
        if isinstance(waves, (list, tuple)):
            arr = np.stack([w.samples for w in waves])
        else:
            arr = np.asarray(waves, dtype=np.float32)
            if arr.ndim == 1:
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
            "class": "SpeechEncoder",
            "sample_rate": self.sample_rate,
            "n_filters": self.config.n_filters,
            "sinc_kernel_size": self.config.sinc_kernel_size,
            "sinc_stride": self.config.sinc_stride,
            "input_gain": self.config.input_gain,
            "min_low_hz": self.config.min_low_hz,
            "min_band_hz": self.config.min_band_hz,
            "block_channels": list(self.config.block_channels),
            "block_kernels": list(self.config.block_kernels),
            "block_strides": list(self.config.block_strides),
            "embed_dim": self.config.embed_dim,
        }

    @classmethod
    def from_descriptor(cls, desc: dict) -> "SpeechEncoder":
        cfg = SpeechEncoderConfig(
            n_filters=desc["n_filters"],
            sinc_kernel_size=desc["sinc_kernel_size"],
            sinc_stride=desc["sinc_stride"],
            input_gain=desc["input_gain"],
            min_low_hz=desc["min_low_hz"],
            min_band_hz=desc["min_band_hz"],
            block_channels=tuple(desc["block_channels"]),
            block_kernels=tuple(desc["block_kernels"]),
            block_strides=tuple(desc["block_strides"]),
            embed_dim=desc["embed_dim"],
        )
        return cls(cfg, desc["sample_rate"])
