"""Shared test utilities: tiny network presets and independent oracles."""

from __future__ import annotations

import numpy as np
import torch

from voice2face.config import (
    AudioConfig,
    FaceEncoderConfig,
    GeneratorConfig,
    ImageConfig,
    SpeechEncoderConfig,
)

# Tiny presets: small enough for exhaustive-ish finite differences.
TINY_AUDIO = AudioConfig(sample_rate=4000, duration_s=0.25)  # 1000 samples
TINY_IMAGE = ImageConfig(resolution=8, augment_flip=False)


def tiny_speech_config() -> SpeechEncoderConfig:
    return SpeechEncoderConfig(
        n_filters=4,
        sinc_kernel_size=17,
        sinc_stride=4,
        input_gain=100.0,
        min_low_hz=30.0,
        min_band_hz=50.0,
        block_channels=(6, 8),
        block_kernels=(5, 5),
        block_strides=(4, 4),
    )


def tiny_face_config() -> FaceEncoderConfig:
    return FaceEncoderConfig(resolution=8, channels=(4,), final_block=False)


def tiny_generator_config() -> GeneratorConfig:
    return GeneratorConfig(resolution=8, channels=(6,), seed_channels=6)


def random_waveforms(rng: np.random.Generator, n: int, length: int, rms: float = 0.01) -> np.ndarray:
    x = rng.standard_normal((n, length))
    x *= rms / np.sqrt(np.mean(np.square(x), axis=1, keepdims=True))
    return x.astype(np.float32)


def random_images(rng: np.random.Generator, n: int, resolution: int) -> np.ndarray:
    return rng.uniform(-1.0, 1.0, size=(n, 3, resolution, resolution)).astype(np.float32)


def finite_difference_check(
    loss_fn,
    params: list[torch.nn.Parameter],
    rng: np.random.Generator,
    h: float = 1e-5,
    rel_tol: float = 1e-4,
    abs_floor: float = 1e-7,
    max_coords_per_tensor: int = 40,
) -> float:
    """Compare analytic gradients against central finite differences.

    ``loss_fn`` recomputes the (deterministic) scalar loss from the current
    parameter values.  Returns the worst relative error over all sampled
    coordinates; raises AssertionError when any coordinate exceeds the
    tolerance.  Everything runs in the tensors' own dtype (use float64).
    """
    for p in params:
        if p.grad is not None:
            p.grad = None
    loss = loss_fn()
    loss.backward()
    worst = 0.0
    with torch.no_grad():
        for p in params:
            grad = p.grad
            assert grad is not None, "parameter received no gradient"
            flat = p.data.view(-1)
            gflat = grad.view(-1)
            n = flat.numel()
            if n <= max_coords_per_tensor:
                coords = np.arange(n)
            else:
                coords = rng.choice(n, size=max_coords_per_tensor, replace=False)
            for idx in coords:
                idx = int(idx)
                orig = flat[idx].item()
                flat[idx] = orig + h
                plus = loss_fn().item()
                flat[idx] = orig - h
                minus = loss_fn().item()
                flat[idx] = orig
                fd = (plus - minus) / (2.0 * h)
                an = gflat[idx].item()
                err = abs(fd - an)
                scale = max(abs(fd), abs(an), abs_floor)
                rel = err / scale
                worst = max(worst, rel)
                assert rel < rel_tol, (
                    f"gradient mismatch at coord {idx}: analytic={an:.6e} "
                    f"fd={fd:.6e} rel={rel:.3e}"
                )
    return worst


def two_pass_pearson(x: np.ndarray, y: np.ndarray) -> float:
    """Textbook two-pass Pearson correlation, the oracle for the module."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    mx, my = x.mean(), y.mean()
    num = np.sum((x - mx) * (y - my))
    den = np.sqrt(np.sum((x - mx) ** 2) * np.sum((y - my) ** 2))
    return float(num / den)


def brute_force_ranking(query: np.ndarray, gallery: np.ndarray, metric: str) -> list[int]:
    """Naive per-item distance computation and stable ranking."""
    dists = []
    for row in gallery:
        if metric == "l1":
            d = float(np.sum(np.abs(query - row)))
        elif metric == "l2":
            d = float(np.sqrt(np.sum((query - row) ** 2)))
        elif metric == "cd":
            d = 1.0 - float(
                np.dot(query, row) / (np.linalg.norm(query) * np.linalg.norm(row))
            )
        else:
            raise ValueError(metric)
        dists.append(d)
    return sorted(range(len(gallery)), key=lambda i: (dists[i], i))
