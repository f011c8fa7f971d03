"""Synthetic paired-modality dataset for desk-scale verification.

Each identity owns a scalar factor u in [0, 1) that controls both
modalities: the audio is a sum of sinusoids whose fundamental rises with
u, and the frames show a procedurally drawn shape whose colors follow u.
Phase, noise, shape position, and brightness are per-sample nuisance so a
stochastic latent has something to model.  Identity is recoverable from
either modality by construction.
"""

from __future__ import annotations

import colorsys
import json
import os
from dataclasses import dataclass

import numpy as np

from ..config import AudioConfig, ToyDataConfig
from ..errors import InvalidInputError
from .audio import save_wav
from .images import save_png
from .manifest import ClipRecord, save_manifest

_F0_LOW = 120.0
_F0_HIGH = 3200.0
_PARTIAL_RATIOS = (1.0, 2.13, 3.41)


@dataclass
class _Identity:
    u: float          # primary identity factor, shared across modalities
    shape: int        # 0 circle, 1 square, 2 triangle
    size_factor: float
    partial_mix: float


def _identity_params(n_identities: int, rng: np.random.Generator) -> list[_Identity]:
    grid = rng.permutation(n_identities) / n_identities
    return [
        _Identity(
            u=float(u),
            shape=int(rng.integers(0, 3)),
            size_factor=float(rng.uniform(0.0, 1.0)),
            partial_mix=float(rng.uniform(0.3, 0.9)),
        )
        for u in grid
    ]


def _clip_waveform(
    ident: _Identity, n_samples: int, sample_rate: int, rng: np.random.Generator
) -> np.ndarray:
    f0 = _F0_LOW * (_F0_HIGH / _F0_LOW) ** ident.u
    f0 = min(f0, 0.45 * sample_rate / 2.0)  # keep the fundamental audible at low rates
    f0 *= 1.0 + rng.uniform(-0.015, 0.015)  # per-clip nuisance detune
    t = np.arange(n_samples) / sample_rate
    amps = np.array([1.0, ident.partial_mix, 0.5 * (1.0 - ident.partial_mix) + 0.15])
    x = np.zeros(n_samples)
    nyquist = sample_rate / 2.0
    for ratio, amp in zip(_PARTIAL_RATIOS, amps):
        freq = f0 * ratio
        if freq >= 0.95 * nyquist:
            continue
        x += amp * np.sin(2.0 * np.pi * freq * t + rng.uniform(0.0, 2.0 * np.pi))
    x *= 0.25 / np.max(np.abs(x))
    x += rng.normal(0.0, 0.02, size=n_samples)
    return x


def _shape_mask(shape: int, size: int, cy: float, cx: float, radius: float) -> np.ndarray:
    """Antialiased occupancy mask via 4x supersampling."""
    ss = 4
    coords = (np.arange(size * ss) + 0.5) / ss
    yy, xx = np.meshgrid(coords, coords, indexing="ij")
    dy, dx = yy - cy, xx - cx
    if shape == 0:
        hard = dy**2 + dx**2 <= radius**2
    elif shape == 1:
        hard = (np.abs(dy) <= radius) & (np.abs(dx) <= radius)
    else:
        # Triangle pointing up: flat bottom edge, apex above center.
        hard = (
            (dy <= radius / 2.0)
            & (dy >= np.sqrt(3.0) * dx - radius)
            & (dy >= -np.sqrt(3.0) * dx - radius)
        )
    return hard.reshape(size, ss, size, ss).mean(axis=(1, 3))


def _clip_frame(ident: _Identity, size: int, rng: np.random.Generator) -> np.ndarray:
    bg_hue = (0.85 * ident.u) % 1.0
    fg_hue = (0.85 * ident.u + 0.5) % 1.0
    bg_v = np.clip(0.60 + rng.uniform(-0.05, 0.05), 0.0, 1.0)
    bg = np.array(colorsys.hsv_to_rgb(bg_hue, 0.80, bg_v))
    fg = np.array(colorsys.hsv_to_rgb(fg_hue, 0.85, 0.90))
    radius = (0.20 + 0.10 * ident.size_factor) * size
    margin = radius + 1.0
    cy = rng.uniform(margin, size - margin)
    cx = rng.uniform(margin, size - margin)
    mask = _shape_mask(ident.shape, size, cy, cx, radius)[..., None]
    img = bg[None, None, :] * (1.0 - mask) + fg[None, None, :] * mask
    img += rng.normal(0.0, 0.01, size=img.shape)
    return (np.clip(img, 0.0, 1.0) * 255.0).round().astype(np.uint8)


def synthesize_toy_dataset(
    out_dir: str,
    n_identities: int,
    clips_per_identity: int,
    seed: int,
    audio_config: AudioConfig | None = None,
    toy_config: ToyDataConfig | None = None,
    image_size: int = 48,
) -> list[ClipRecord]:
    """Write WAVs, PNGs, manifest.jsonl, and dataset_meta.json under
    ``out_dir``; returns the clip records.  Identical seeds produce
    byte-identical outputs."""
    if n_identities < 2:
        raise InvalidInputError("n_identities must be >= 2 (no negative pool otherwise)")
    if clips_per_identity < 1:
        raise InvalidInputError("clips_per_identity must be >= 1")
    audio_config = audio_config or AudioConfig(duration_s=1.0)
    toy_config = toy_config or ToyDataConfig()
    if toy_config.frames_per_clip < 2:
        raise InvalidInputError("frames_per_clip must be >= 2 (positive pairs need distinct slots)")

    rng = np.random.default_rng(seed)
    identities = _identity_params(n_identities, rng)
    file_samples = int(round(audio_config.n_samples * toy_config.file_duration_factor))

    audio_dir = os.path.join(out_dir, "audio")
    frame_dir = os.path.join(out_dir, "frames")
    os.makedirs(audio_dir, exist_ok=True)
    os.makedirs(frame_dir, exist_ok=True)

    records: list[ClipRecord] = []
    for iid, ident in enumerate(identities):
        for c in range(clips_per_identity):
            clip_id = f"id{iid:03d}_c{c:02d}"
            wave = _clip_waveform(ident, file_samples, audio_config.sample_rate, rng)
            audio_rel = f"audio/{clip_id}.wav"
            save_wav(os.path.join(out_dir, audio_rel), wave, audio_config.sample_rate)
            frame_rels = []
            for f in range(toy_config.frames_per_clip):
                frame_rel = f"frames/{clip_id}_f{f}.png"
                save_png(os.path.join(out_dir, frame_rel), _clip_frame(ident, image_size, rng))
                frame_rels.append(frame_rel)
            records.append(
                ClipRecord(
                    clip_id=clip_id,
                    audio_path=audio_rel,
                    frame_paths=frame_rels,
                    identity_id=f"id{iid:03d}",
                    attribute="a" if ident.u < 0.5 else "b",
                )
            )

    save_manifest(records, os.path.join(out_dir, "manifest.jsonl"))
    meta = {
        "seed": seed,
        "n_identities": n_identities,
        "clips_per_identity": clips_per_identity,
        "frames_per_clip": toy_config.frames_per_clip,
        "sample_rate": audio_config.sample_rate,
        "file_duration_s": file_samples / audio_config.sample_rate,
        "image_size": image_size,
    }
    with open(os.path.join(out_dir, "dataset_meta.json"), "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return records
