"""Trainable band-pass front end for raw waveforms.

Each output channel convolves the input with a Hamming-windowed ideal
band-pass kernel parameterized by its low cutoff and bandwidth.  Window
leakage would otherwise let narrow low-frequency filters respond at DC,
so after windowing each kernel gets an exact DC/Nyquist null: the unique
window-shaped correction making both edge responses zero.  This keeps
every realized filter band-pass no matter where training pushes the
cutoffs.
"""

from __future__ import annotations

import math

import numpy as np
import torch
import torch.nn.functional as F
from torch import nn

from ..errors import InvalidInputError


def _hz_to_mel(hz: np.ndarray | float) -> np.ndarray:
    return 2595.0 * np.log10(1.0 + np.asarray(hz) / 700.0)


def _mel_to_hz(mel: np.ndarray | float) -> np.ndarray:
    return 700.0 * (10.0 ** (np.asarray(mel) / 2595.0) - 1.0)


class SincConv1d(nn.Module):
    """First conv layer: n_filters learnable band-pass sinc kernels.

    Cutoffs are reparameterized so any raw parameter value yields a valid
    band: low >= min_low_hz, bandwidth >= min_band_hz, high below Nyquist
    with headroom.  Degenerate parameters are re-clamped, never an error.
    """

    NYQUIST_HEADROOM = 0.99

    def __init__(
        self,
        n_filters: int,
        kernel_size: int,
        sample_rate: int,
        stride: int = 1,
        min_low_hz: float = 30.0,
        min_band_hz: float = 50.0,
    ) -> None:
        super().__init__()
        if kernel_size % 2 == 0:
            raise InvalidInputError("sinc kernel_size must be odd (symmetric filters)")
        self.n_filters = n_filters
        self.kernel_size = kernel_size
        self.sample_rate = sample_rate
        self.stride = stride
        self.min_low_hz = float(min_low_hz)
        self.min_band_hz = float(min_band_hz)

        low, band = self._mel_init()
        self.low_hz_ = nn.Parameter(torch.from_numpy(low - self.min_low_hz).float())
        self.band_hz_ = nn.Parameter(torch.from_numpy(band - self.min_band_hz).float())

        half = kernel_size // 2
        m = torch.arange(-half, half + 1, dtype=torch.float32)
        window = 0.54 + 0.46 * torch.cos(2.0 * math.pi * m / (kernel_size - 1))
        alternating = torch.cos(math.pi * m)  # (-1)^m for integer m
        self.register_buffer("_m", m)
        self.register_buffer("_window", window)
        self.register_buffer("_alt", alternating)

    def _mel_init(self) -> tuple[np.ndarray, np.ndarray]:
        high_max = self.NYQUIST_HEADROOM * self.sample_rate / 2.0
        mel_points = np.linspace(
            _hz_to_mel(self.min_low_hz), _hz_to_mel(high_max), self.n_filters + 1
        )
        hz = _mel_to_hz(mel_points)
        return hz[:-1], np.diff(hz)

    def cutoffs_hz(self) -> tuple[torch.Tensor, torch.Tensor]:
        """Realized (low, high) cutoffs in Hz after the clamp."""
        high_max = self.NYQUIST_HEADROOM * self.sample_rate / 2.0
        low = self.min_low_hz + torch.abs(self.low_hz_)
        low = torch.clamp(low, max=high_max - self.min_band_hz)
        high = torch.clamp(low + self.min_band_hz + torch.abs(self.band_hz_), max=high_max)
        return low, high

    def kernels(self) -> torch.Tensor:
        """Realized [n_filters, kernel_size] kernels used by forward."""
        low, high = self.cutoffs_hz()
        f_lo = (low / self.sample_rate).unsqueeze(1)
        f_hi = (high / self.sample_rate).unsqueeze(1)
        m = self._m.to(self.low_hz_.dtype).unsqueeze(0)
        window = self._window.to(self.low_hz_.dtype)
        alt = self._alt.to(self.low_hz_.dtype)

        half = self.kernel_size // 2
        m_side = m[:, half + 1 :]
        side = (
            torch.sin(2.0 * math.pi * f_hi * m_side) - torch.sin(2.0 * math.pi * f_lo * m_side)
        ) / (math.pi * m_side)
        center = 2.0 * (f_hi - f_lo)
        ideal = torch.cat([side.flip(1), center, side], dim=1)
        g = ideal * window.unsqueeze(0)

        # Exact DC and Nyquist nulls: subtract the window-shaped component
        # (alpha + beta * (-1)^m) * w solving both edge constraints.
        s0 = g.sum(dim=1, keepdim=True)
        s1 = (g * alt).sum(dim=1, keepdim=True)
        w0 = window.sum()
        w1 = (window * alt).sum()
        det = w0 * w0 - w1 * w1
        alpha = (s0 * w0 - s1 * w1) / det
        beta = (s1 * w0 - s0 * w1) / det
        return g - (alpha + beta * alt.unsqueeze(0)) * window.unsqueeze(0)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        if x.dim() == 2:
            x = x.unsqueeze(1)
        if x.dim() != 3 or x.shape[1] != 1:
            raise InvalidInputError(f"expected [B, T] or [B, 1, T] input, got {tuple(x.shape)}")
        kernels = self.kernels().unsqueeze(1)
        return F.conv1d(x, kernels, stride=self.stride, padding=self.kernel_size // 2)

    def frequency_response(self, n_fft: int = 4096) -> np.ndarray:
        """Magnitude response [n_filters, n_fft // 2 + 1] of the realized
        kernels, for inspection and tests."""
        with torch.no_grad():
            k = self.kernels().detach().cpu().double().numpy()
        return np.abs(np.fft.rfft(k, n=n_fft, axis=1))
