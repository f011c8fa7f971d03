"""Adversarial training: alternating discriminator/generator updates.

The discriminator trunk starts from the inference-stage face encoder and
the condition comes from the inference-stage speech encoder (frozen by
default); skipping that transfer is the supported ablation.  Every step
draws matched (face, speech) pairs from single clips at distinct time
slots and mismatched conditions from other clips.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass

import numpy as np
import torch

from ..config import RunConfig
from ..errors import ConfigurationError, InsufficientDataError
from ..data.images import image_grid, save_png
from ..data.manifest import ClipDataset
from ..nets.checkpoint import load_checkpoint, restore_module, save_checkpoint
from ..nets.generator import Generator
from ..nets.speech import SpeechEncoder
from ..seeding import derive_rngs, seed_torch
from .latent import sample_latent
from .scores import (
    Discriminator,
    d_loss_from_scores,
    g_loss_from_scores,
    r1_penalty,
    relativistic_identity_scores,
    relativistic_scores,
)


@dataclass
class GanTrainResult:
    checkpoint_path: str
    log_path: str
    sample_dir: str
    iters_run: int


def _grad_norm(params) -> float:
    total = 0.0
    for p in params:
        if p.grad is not None:
            total += float(p.grad.detach().pow(2).sum())
    return total**0.5


def _sample_pair_batch(
    dataset: ClipDataset,
    batch_size: int,
    rng: np.random.Generator,
    augment: bool,
) -> tuple[torch.Tensor, torch.Tensor, list[int]]:
    """Matched (face, speech) pairs: same clip, distinct time slots."""
    if len(dataset) < 2:
        raise InsufficientDataError("GAN training needs at least 2 clips")
    replace = len(dataset) < batch_size
    clip_idx = rng.choice(len(dataset), size=batch_size, replace=replace)
    faces, waves = [], []
    for i in clip_idx:
        n_slots = dataset.n_slots(int(i))
        if n_slots < 2:
            raise InsufficientDataError(
                f"clip {dataset.records[int(i)].clip_id} has fewer than 2 time slots"
            )
        frame_slot, audio_slot = rng.choice(n_slots, size=2, replace=False)
        faces.append(dataset.frame(int(i), int(frame_slot), rng=rng, augment=augment).pixels)
        waves.append(dataset.audio_window(int(i), int(audio_slot)).samples)
    return (
        torch.from_numpy(np.stack(faces)),
        torch.from_numpy(np.stack(waves)),
        [int(i) for i in clip_idx],
    )


def _mismatched_conditions(
    c_pos: torch.Tensor,
    clip_idx: list[int],
    dataset: ClipDataset,
    speech_encoder: SpeechEncoder,
    rng: np.random.Generator,
) -> torch.Tensor:
    """One mismatched condition per item: another clip from the batch when
    possible, a random other clip from the dataset otherwise."""
    neg_rows = []
    ids = [dataset.records[i].clip_id for i in clip_idx]
    for i, cid in enumerate(ids):
        others = [j for j, other in enumerate(ids) if other != cid]
        if others:
            neg_rows.append(c_pos[int(rng.choice(others))])
        else:
            candidates = [j for j in range(len(dataset)) if dataset.records[j].clip_id != cid]
            if not candidates:
                raise InsufficientDataError("no mismatched clip available for negative condition")
            j = int(rng.choice(candidates))
            slot = int(rng.integers(0, dataset.n_slots(j)))
            wave = torch.from_numpy(dataset.audio_window(j, slot).samples[None])
            with torch.no_grad():
                neg_rows.append(speech_encoder(wave)[0])
    return torch.stack(neg_rows)


def train_gan(
    run_cfg: RunConfig,
    dataset: ClipDataset,
    out_dir: str,
    encoder_checkpoint: str | None = None,
) -> GanTrainResult:
    """Run the adversarial stage and write checkpoint, log, and samples."""
    cfg = run_cfg.gan
    cfg.validate()
    os.makedirs(out_dir, exist_ok=True)
    sample_dir = os.path.join(out_dir, "samples")
    os.makedirs(sample_dir, exist_ok=True)

    rngs = derive_rngs(run_cfg.seed)
    seed_torch(run_cfg.seed)

    generator = Generator(run_cfg.generator)
    disc = Discriminator(run_cfg.face_encoder)
    speech_encoder = SpeechEncoder(run_cfg.speech_encoder, run_cfg.audio.sample_rate)

    if cfg.transfer_encoders:
        if encoder_checkpoint is None:
            raise ConfigurationError(
                "encoder transfer requested but no inference checkpoint given "
                "(pass one or disable transfer for the no-transfer ablation)"
            )
        payload = load_checkpoint(encoder_checkpoint, expected_kind="inference")
        restore_module(payload, "speech_encoder", speech_encoder)
        restore_module(payload, "face_encoder", disc.phi)

    if cfg.freeze_speech_encoder:
        speech_encoder.eval()
        for p in speech_encoder.parameters():
            p.requires_grad_(False)
    else:
        speech_encoder.train()
    if not cfg.finetune_face_trunk:
        for p in disc.phi.parameters():
            p.requires_grad_(False)

    opt_g = torch.optim.Adam(
        generator.parameters(), lr=cfg.lr_g, betas=(cfg.adam_beta1, cfg.adam_beta2)
    )
    d_params = [p for p in disc.parameters() if p.requires_grad]
    if not cfg.freeze_speech_encoder:
        d_params += list(speech_encoder.parameters())
    opt_d = torch.optim.Adam(d_params, lr=cfg.lr_d, betas=(cfg.adam_beta1, cfg.adam_beta2))

    def embed_speech(waves: torch.Tensor) -> torch.Tensor:
        if cfg.freeze_speech_encoder:
            with torch.no_grad():
                return speech_encoder(waves)
        return speech_encoder(waves)

    # Fixed probe grid: 4 conditions x 4 latents, reused at every dump.
    probe_waves = _sample_pair_batch(dataset, 4, rngs["eval"], augment=False)[1]
    with torch.no_grad():
        probe_c = speech_encoder(probe_waves)
    probe_z = torch.from_numpy(sample_latent(rngs["eval"], 4, run_cfg.generator.z_dim))

    log_path = os.path.join(out_dir, "train_log.jsonl")
    ckpt_path = os.path.join(out_dir, "checkpoint.pt")
    d_step = 0
    with open(log_path, "w") as log_fh:
        for it in range(cfg.max_iters):
            last_d_loss, last_r1 = 0.0, 0.0
            for _ in range(cfg.d_steps_per_g):
                faces, waves, clip_idx = _sample_pair_batch(
                    dataset, cfg.batch_size, rngs["train"], run_cfg.image.augment_flip
                )
                c_pos = embed_speech(waves)
                c_neg = _mismatched_conditions(c_pos, clip_idx, dataset, speech_encoder, rngs["train"])
                z = torch.from_numpy(
                    sample_latent(rngs["latent"], faces.shape[0], run_cfg.generator.z_dim)
                )
                with torch.no_grad():
                    f_fake = generator(z, c_pos)
                if cfg.use_mismatched_identity_loss:
                    d_score, _ = relativistic_identity_scores(
                        disc, faces, f_fake, c_pos.detach(), c_neg.detach()
                    )
                else:
                    d_score = relativistic_scores(disc, faces, f_fake, c_pos.detach())
                loss_d = d_loss_from_scores(d_score)
                if d_step % cfg.r1_interval == 0:
                    penalty = r1_penalty(
                        lambda x: disc(x, c_pos.detach()), faces, cfg.r1_gamma
                    ) * cfg.r1_interval
                    loss_d = loss_d + penalty
                    last_r1 = penalty.item()
                opt_d.zero_grad()
                opt_g.zero_grad()
                loss_d.backward()
                grad_norm_d = _grad_norm(d_params)
                opt_d.step()
                last_d_loss = loss_d.item()
                d_step += 1

            faces, waves, clip_idx = _sample_pair_batch(
                dataset, cfg.batch_size, rngs["train"], run_cfg.image.augment_flip
            )
            c_pos = embed_speech(waves)
            c_neg = _mismatched_conditions(c_pos, clip_idx, dataset, speech_encoder, rngs["train"])
            z = torch.from_numpy(
                sample_latent(rngs["latent"], faces.shape[0], run_cfg.generator.z_dim)
            )
            f_fake = generator(z, c_pos.detach())
            if cfg.use_mismatched_identity_loss:
                _, g_score = relativistic_identity_scores(
                    disc, faces, f_fake, c_pos.detach(), c_neg.detach()
                )
            else:
                g_score = relativistic_scores(disc, f_fake, faces, c_pos.detach())
            loss_g = g_loss_from_scores(g_score)
            opt_d.zero_grad()
            opt_g.zero_grad()
            loss_g.backward()
            grad_norm_g = _grad_norm(list(generator.parameters()))
            opt_g.step()
            opt_d.zero_grad()

            if it % cfg.log_every == 0 or it == cfg.max_iters - 1:
                log_fh.write(
                    json.dumps(
                        {
                            "iter": it,
                            "L_D": last_d_loss,
                            "L_G": loss_g.item(),
                            "r1": last_r1,
                            "grad_norm_d": grad_norm_d,
                            "grad_norm_g": grad_norm_g,
                        }
                    )
                    + "\n"
                )
                log_fh.flush()

            if cfg.sample_every and (it + 1) % cfg.sample_every == 0:
                _dump_samples(generator, probe_z, probe_c, sample_dir, it + 1)
            if cfg.checkpoint_every and (it + 1) % cfg.checkpoint_every == 0:
                _save(ckpt_path, generator, disc, speech_encoder, cfg, it + 1)

    _dump_samples(generator, probe_z, probe_c, sample_dir, cfg.max_iters)
    _save(ckpt_path, generator, disc, speech_encoder, cfg, cfg.max_iters)
    return GanTrainResult(
        checkpoint_path=ckpt_path,
        log_path=log_path,
        sample_dir=sample_dir,
        iters_run=cfg.max_iters,
    )


def _dump_samples(
    generator: Generator,
    probe_z: torch.Tensor,
    probe_c: torch.Tensor,
    sample_dir: str,
    it: int,
) -> None:
    generator.eval()
    with torch.no_grad():
        rows = []
        for ci in range(probe_c.shape[0]):
            c = probe_c[ci : ci + 1].expand(probe_z.shape[0], -1)
            rows.append(generator(probe_z, c).numpy())
    generator.train()
    grid = image_grid(np.concatenate(rows), n_cols=probe_z.shape[0])
    save_png(os.path.join(sample_dir, f"iter_{it:06d}.png"), grid)


def _save(path, generator, disc, speech_encoder, cfg, it) -> None:
    save_checkpoint(
        path,
        "gan",
        {"generator": generator, "discriminator": disc, "speech_encoder": speech_encoder},
        meta={
            "iter": it,
            "use_mismatched_identity_loss": cfg.use_mismatched_identity_loss,
            "transfer_encoders": cfg.transfer_encoders,
        },
    )


def load_gan_checkpoint(path: str) -> tuple[Generator, Discriminator, SpeechEncoder]:
    payload = load_checkpoint(path, expected_kind="gan")
    generator = Generator.from_descriptor(payload["arch"]["generator"])
    disc = Discriminator.from_descriptor(payload["arch"]["discriminator"])
    speech = SpeechEncoder.from_descriptor(payload["arch"]["speech_encoder"])
    restore_module(payload, "generator", generator)
    restore_module(payload, "discriminator", disc)
    restore_module(payload, "speech_encoder", speech)
    generator.eval()
    disc.eval()
    speech.eval()
    return generator, disc, speech
