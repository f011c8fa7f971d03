"""Seed handling: one user-facing seed, independent derived streams."""

from __future__ import annotations

import numpy as np
import torch

# Fixed stream labels so adding a new consumer never shifts existing ones.
_STREAMS = ("data", "model", "train", "eval", "latent")


def derive_rngs(seed: int) -> dict[str, np.random.Generator]:
    """Independent generators for each subsystem from a single seed."""
    seqs = np.random.SeedSequence(seed).spawn(len(_STREAMS))
    return {name: np.random.default_rng(seq) for name, seq in zip(_STREAMS, seqs)}


def seed_torch(seed: int) -> None:
    torch.manual_seed(seed)


def torch_generator(seed: int) -> torch.Generator:
    gen = torch.Generator()
    gen.manual_seed(seed)
    return gen
