"""Linear interpolation sweeps through either latent.

Fix one of (z, c), slide the other along the straight line between two
endpoints, and render the row of images.
"""

from __future__ import annotations

import numpy as np
import torch

from ..errors import InvalidInputError
from ..nets.generator import Generator

CONDITION = "condition"
LATENT = "latent"


def interpolate_grid(
    generator: Generator,
    endpoint_a: np.ndarray,
    endpoint_b: np.ndarray,
    which: str,
    fixed_other: np.ndarray,
    n_steps: int,
) -> np.ndarray:
    """Images [n_steps, 3, H, W]; step 0 and step n_steps-1 are exactly
    the endpoint generations."""
    if which not in (CONDITION, LATENT):
        raise InvalidInputError(f"which must be '{CONDITION}' or '{LATENT}', got {which!r}")
    if n_steps < 2:
        raise InvalidInputError("n_steps must be >= 2")
    a = np.asarray(endpoint_a, dtype=np.float32)
    b = np.asarray(endpoint_b, dtype=np.float32)
    fixed = np.asarray(fixed_other, dtype=np.float32)
    expected = generator.config.cond_dim if which == CONDITION else generator.config.z_dim
    if a.shape != (expected,) or b.shape != (expected,):
        raise InvalidInputError(f"endpoints must have shape ({expected},)")
    t = np.linspace(0.0, 1.0, n_steps, dtype=np.float32)[:, None]
    swept = (1.0 - t) * a[None, :] + t * b[None, :]
    fixed_batch = np.repeat(fixed[None, :], n_steps, axis=0)
    z, c = (fixed_batch, swept) if which == CONDITION else (swept, fixed_batch)
    generator.eval()
    with torch.no_grad():
        return generator(torch.from_numpy(z), torch.from_numpy(c)).numpy()
