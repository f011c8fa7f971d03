"""Versioned single-file checkpoints.

Layout: ``{"format_version": int, "kind": str, "arch": {name: descriptor},
"state": {name: state_dict}, "meta": {...}}``.  Loading verifies the
format version and kind, and loading a state into an existing module
verifies the stored architecture descriptor matches the module.
"""

from __future__ import annotations

import os
from typing import Optional

import torch
from torch import nn

from ..errors import CheckpointError

FORMAT_VERSION = 1


def save_checkpoint(
    path: str,
    kind: str,
    modules: dict[str, nn.Module],
    meta: Optional[dict] = None,
) -> None:
    payload = {
        "format_version": FORMAT_VERSION,
        "kind": kind,
        "arch": {name: mod.arch_descriptor() for name, mod in modules.items()},
        "state": {name: mod.state_dict() for name, mod in modules.items()},
        "meta": meta or {},
    }
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    torch.save(payload, path)


def load_checkpoint(path: str, expected_kind: Optional[str] = None) -> dict:
    if not os.path.exists(path):
        raise CheckpointError(f"checkpoint not found: {path}")
    try:
        payload = torch.load(path, map_location="cpu", weights_only=False)
    except Exception as exc:  # unreadable / corrupted file
        raise CheckpointError(f"cannot read checkpoint {path}: {exc}") from exc
    version = payload.get("format_version")
    if version != FORMAT_VERSION:
        raise CheckpointError(
            f"checkpoint {path} has format version {version}, expected {FORMAT_VERSION}"
        )
    if expected_kind is not None and payload.get("kind") != expected_kind:
        raise CheckpointError(
            f"checkpoint {path} is of kind {payload.get('kind')!r}, expected {expected_kind!r}"
        )
    return payload


def restore_module(payload: dict, name: str, module: nn.Module) -> None:
    """Load one named state dict, verifying the architecture matches."""
    if name not in payload["state"]:
        raise CheckpointError(f"checkpoint has no module named {name!r}")
    stored = payload["arch"][name]
    actual = module.arch_descriptor()
    if stored != actual:
        diffs = [
            f"{key}: checkpoint={stored.get(key)!r} model={actual.get(key)!r}"
            for key in sorted(set(stored) | set(actual))
            if stored.get(key) != actual.get(key)
        ]
        raise CheckpointError(
            f"architecture mismatch for {name!r}: " + "; ".join(diffs)
        )
    module.load_state_dict(payload["state"][name])
