"""Waveform loading and preprocessing.

Audio enters as arbitrary-rate PCM and leaves as a fixed-length mono
float32 waveform at the configured rate with its RMS pinned to the
reference level (0.01 by default).
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy.io import wavfile
from scipy.signal import resample_poly

from ..config import AudioConfig
from ..errors import InvalidInputError, ZeroEnergyError

_RMS_FLOOR = 1e-20


@dataclass
class AudioWaveform:
    """Fixed-length mono speech segment."""

    samples: np.ndarray  # float32, shape (n,)
    sample_rate: int

    @property
    def duration_s(self) -> float:
        return len(self.samples) / self.sample_rate


def rms(x: np.ndarray) -> float:
    return float(np.sqrt(np.mean(np.square(x, dtype=np.float64))))


def to_mono(raw: np.ndarray) -> np.ndarray:
    raw = np.asarray(raw)
    if raw.ndim == 2:
        raw = raw.mean(axis=1)
    elif raw.ndim != 1:
        raise InvalidInputError(f"audio must be 1-D or 2-D, got shape {raw.shape}")
    return raw.astype(np.float64)


def resample(x: np.ndarray, rate_in: int, rate_out: int) -> np.ndarray:
    if rate_in == rate_out:
        return x
    frac = Fraction(rate_out, rate_in).limit_denominator(1 << 16)
    return resample_poly(x, frac.numerator, frac.denominator)


def fit_length(x: np.ndarray, target: int, rng: np.random.Generator) -> np.ndarray:
    """Duplicate-then-truncate short signals, randomly truncate long ones."""
    if len(x) < target:
        reps = -(-target // len(x))  # ceil
        x = np.tile(x, reps)
    if len(x) > target:
        offset = int(rng.integers(0, len(x) - target + 1))
        x = x[offset : offset + target]
    return x


def preprocess_audio(
    raw: np.ndarray,
    raw_rate: int,
    config: AudioConfig,
    rng: np.random.Generator,
) -> AudioWaveform:
    """Resample to the target rate, fix the duration, normalize RMS.

    Raises:
        InvalidInputError: empty input, non-positive rate, or input too
            short to survive resampling.
        ZeroEnergyError: all-zero input (RMS normalization undefined).
    """
    if raw_rate <= 0:
        raise InvalidInputError(f"raw_rate must be positive, got {raw_rate}")
    raw = to_mono(raw)
    if raw.size == 0:
        raise InvalidInputError("audio input is empty")
    x = resample(raw, raw_rate, config.sample_rate)
    if len(x) < 1:
        raise InvalidInputError("audio input shorter than one sample after resampling")
    x = fit_length(x, config.n_samples, rng)
    level = rms(x)
    if level < _RMS_FLOOR:
        raise ZeroEnergyError("audio input has zero energy; RMS normalization undefined")
    x = x * (config.rms_reference / level)
    return AudioWaveform(samples=x.astype(np.float32), sample_rate=config.sample_rate)


def extract_window(
    samples: np.ndarray,
    sample_rate: int,
    config: AudioConfig,
    slot: int,
    n_slots: int,
) -> AudioWaveform:
    """Deterministic fixed-duration window at one of ``n_slots`` evenly
    spaced offsets, then RMS-normalized.  Used for slot-indexed positive
    sampling where the random-truncation path would break pairing."""
    if not 0 <= slot < n_slots:
        raise InvalidInputError(f"slot {slot} outside [0, {n_slots})")
    x = to_mono(samples)
    if sample_rate != config.sample_rate:
        x = resample(x, sample_rate, config.sample_rate)
    target = config.n_samples
    if len(x) < target:
        reps = -(-target // len(x))
        x = np.tile(x, reps)
    span = len(x) - target
    offset = 0 if n_slots == 1 else int(round(span * slot / (n_slots - 1)))
    x = x[offset : offset + target]
    level = rms(x)
    if level < _RMS_FLOOR:
        raise ZeroEnergyError("audio window has zero energy")
    x = x * (config.rms_reference / level)
    return AudioWaveform(samples=x.astype(np.float32), sample_rate=config.sample_rate)


def load_wav(path: str) -> tuple[np.ndarray, int]:
    """Read a PCM WAV file as float64 in [-1, 1]."""
    rate, data = wavfile.read(path)
    if data.dtype == np.int16:
        data = data / 32768.0
    elif data.dtype == np.int32:
        data = data / 2147483648.0
    elif data.dtype == np.uint8:
        data = (data.astype(np.float64) - 128.0) / 128.0
    else:
        data = data.astype(np.float64)
    return data, int(rate)


def save_wav(path: str, samples: np.ndarray, sample_rate: int) -> None:
    """Write 16-bit PCM."""
    clipped = np.clip(np.asarray(samples, dtype=np.float64), -1.0, 1.0)
    wavfile.write(path, sample_rate, (clipped * 32767.0).astype(np.int16))
