"""Latent sampling and the resampling-based truncation trick."""

from __future__ import annotations

import numpy as np

from ..errors import InvalidInputError


def sample_latent(rng: np.random.Generator, batch: int, dim: int = 128) -> np.ndarray:
    """Standard Gaussian latents, [batch, dim] float32."""
    return rng.standard_normal((batch, dim)).astype(np.float32)


def truncate_latent(
    z: np.ndarray, threshold: float, rng: np.random.Generator
) -> np.ndarray:
    """Resample any component with |value| > threshold until it lands
    inside; the result is marginally a truncated standard Gaussian.
    Clipping would pile mass at the boundary, so values are redrawn."""
    if threshold <= 0:
        raise InvalidInputError(f"truncation threshold must be > 0, got {threshold}")
    out = np.array(z, dtype=np.float32, copy=True)
    mask = np.abs(out) > threshold
    while mask.any():
        out[mask] = rng.standard_normal(int(mask.sum())).astype(np.float32)
        mask = np.abs(out) > threshold
    return out
