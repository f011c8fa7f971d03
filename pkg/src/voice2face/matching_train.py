"""Inference-stage training: SGD with a validate-or-decay schedule.

The learning rate drops by the configured factor whenever validation
loss fails to improve for ``patience_epochs`` epochs; the run stops after
``max_decays`` decays.  Validation examples (negatives included) are
drawn once up front and reused every epoch so the schedule sees a stable
loss.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

import numpy as np
import torch

from .config import RunConfig, VF
from .errors import ConfigurationError, InsufficientDataError
from .data.manifest import ClipDataset, split_clips
from .data.sampling import (
    ValidationExample,
    build_validation_examples,
    realize_example,
    sample_example_spec,
    sample_kway_batch,
)
from .matching import batch_logits, matching_loss_from_logits
from .nets.checkpoint import load_checkpoint, restore_module, save_checkpoint
from .nets.face import FaceEncoder
from .nets.speech import SpeechEncoder
from .seeding import derive_rngs, seed_torch

_EVAL_CHUNK = 32


@dataclass
class EpochStats:
    epoch: int
    lr: float
    train_loss: float
    train_acc: float
    val_loss: float
    val_acc: float
    decays: int

    def to_json(self) -> str:
        return json.dumps(
            {
                "epoch": self.epoch,
                "lr": self.lr,
                "train_loss": self.train_loss,
                "train_acc": self.train_acc,
                "val_loss": self.val_loss,
                "val_acc": self.val_acc,
                "decays": self.decays,
            }
        )


@dataclass
class TrainResult:
    checkpoint_path: str
    log_path: str
    history: list[EpochStats] = field(default_factory=list)
    stopped_reason: str = ""


class PlateauSchedule:
    """Divide the learning rate by ``decay_factor`` whenever validation
    loss fails to improve for ``patience_epochs`` consecutive epochs; stop
    once ``max_decays`` decays have happened."""

    def __init__(self, lr_init: float, decay_factor: float, patience_epochs: int, max_decays: int):
        self.lr = lr_init
        self.decay_factor = decay_factor
        self.patience_epochs = patience_epochs
        self.max_decays = max_decays
        self.best_val = float("inf")
        self.bad_epochs = 0
        self.decays = 0

    def update(self, val_loss: float) -> tuple[bool, bool]:
        """Feed one epoch's validation loss; returns (decayed, stop)."""
        if val_loss < self.best_val:
            self.best_val = val_loss
            self.bad_epochs = 0
            return False, False
        self.bad_epochs += 1
        if self.bad_epochs < self.patience_epochs:
            return False, False
        self.bad_epochs = 0
        self.decays += 1
        self.lr /= self.decay_factor
        return True, self.decays >= self.max_decays

    def state(self) -> dict:
        return {
            "lr": self.lr,
            "best_val": self.best_val,
            "bad_epochs": self.bad_epochs,
            "decays": self.decays,
        }

    def load_state(self, state: dict) -> None:
        self.lr = state["lr"]
        self.best_val = state["best_val"]
        self.bad_epochs = state["bad_epochs"]
        self.decays = state["decays"]


@dataclass
class MatchingEvalReport:
    mode: str
    k: int
    n_repeats: int
    n_examples: int
    mean_acc: float
    std_acc: float
    per_repeat: list[float]

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "k": self.k,
            "n_repeats": self.n_repeats,
            "n_examples": self.n_examples,
            "mean_acc": self.mean_acc,
            "std_acc": self.std_acc,
            "per_repeat": self.per_repeat,
        }


def _eval_on_examples(
    dataset: ClipDataset,
    specs: list[ValidationExample],
    speech_encoder: SpeechEncoder,
    face_encoder: FaceEncoder,
) -> tuple[float, float]:
    """(mean loss, accuracy) on fixed examples, eval mode, no autograd."""
    speech_encoder.eval()
    face_encoder.eval()
    losses, correct = [], 0
    with torch.no_grad():
        for start in range(0, len(specs), _EVAL_CHUNK):
            chunk = specs[start : start + _EVAL_CHUNK]
            batch = [realize_example(dataset, s) for s in chunk]
            logits, positives = batch_logits(batch, speech_encoder, face_encoder)
            loss = matching_loss_from_logits(logits, positives)
            losses.append(float(loss) * len(chunk))
            correct += int((logits.argmax(dim=1) == positives).sum())
    return sum(losses) / len(specs), correct / len(specs)


def train_inference(
    run_cfg: RunConfig,
    dataset: ClipDataset,
    out_dir: str,
    resume: bool = False,
) -> TrainResult:
    """Train both encoders with the K-way matching objective.

    Writes ``checkpoint.pt`` (and per-epoch ``last.pt`` for resuming),
    ``train_log.jsonl``, ``splits.json``, and ``val_examples.json`` under
    ``out_dir``.
    """
    cfg = run_cfg.inference
    cfg.validate()
    os.makedirs(out_dir, exist_ok=True)

    rngs = derive_rngs(run_cfg.seed)
    splits = split_clips(dataset.records, cfg.val_fraction, cfg.test_fraction, rngs["data"])
    for name in ("train", "val"):
        if len(splits[name]) < cfg.k:
            raise ConfigurationError(
                f"{name} split has {len(splits[name])} clips; need >= k={cfg.k}"
            )
    train_ds = dataset.subset(splits["train"])
    val_ds = dataset.subset(splits["val"])
    with open(os.path.join(out_dir, "splits.json"), "w") as fh:
        json.dump({k: [r.clip_id for r in v] for k, v in splits.items()}, fh, indent=2)
        fh.write("\n")

    val_specs = build_validation_examples(val_ds, cfg.k, cfg.mode, cfg.n_val_examples, rngs["data"])
    with open(os.path.join(out_dir, "val_examples.json"), "w") as fh:
        json.dump([s.to_dict() for s in val_specs], fh)
        fh.write("\n")

    seed_torch(run_cfg.seed)
    speech_encoder = SpeechEncoder(run_cfg.speech_encoder, run_cfg.audio.sample_rate)
    face_encoder = FaceEncoder(run_cfg.face_encoder)
    params = list(speech_encoder.parameters()) + list(face_encoder.parameters())
    optimizer = torch.optim.SGD(
        params, lr=cfg.lr_init, momentum=cfg.momentum, weight_decay=cfg.weight_decay
    )

    start_epoch = 0
    schedule = PlateauSchedule(cfg.lr_init, cfg.decay_factor, cfg.patience_epochs, cfg.max_decays)
    history: list[EpochStats] = []
    last_path = os.path.join(out_dir, "last.pt")
    log_path = os.path.join(out_dir, "train_log.jsonl")
    ckpt_path = os.path.join(out_dir, "checkpoint.pt")

    if resume and os.path.exists(last_path):
        payload = load_checkpoint(last_path, expected_kind="inference")
        restore_module(payload, "speech_encoder", speech_encoder)
        restore_module(payload, "face_encoder", face_encoder)
        meta = payload["meta"]
        optimizer.load_state_dict(meta["optimizer"])
        start_epoch = meta["epoch"] + 1
        schedule.load_state(meta["schedule"])
        rngs["train"].bit_generator.state = meta["train_rng_state"]
        torch.set_rng_state(torch.tensor(meta["torch_rng_state"], dtype=torch.uint8))

    batch_size = cfg.resolved_batch_size()
    log_mode = "a" if start_epoch else "w"
    stopped = "max_epochs"
    with open(log_path, log_mode) as log_fh:
        for epoch in range(start_epoch, cfg.max_epochs):
            speech_encoder.train()
            face_encoder.train()
            epoch_loss, epoch_correct, epoch_n = 0.0, 0, 0
            for _ in range(cfg.batches_per_epoch):
                batch = sample_kway_batch(
                    train_ds, cfg.k, cfg.mode, rngs["train"], batch_size,
                    augment=run_cfg.image.augment_flip,
                )
                logits, positives = batch_logits(batch, speech_encoder, face_encoder)
                loss = matching_loss_from_logits(logits, positives)
                optimizer.zero_grad()
                loss.backward()
                optimizer.step()
                epoch_loss += loss.item() * len(batch)
                epoch_correct += int((logits.argmax(dim=1) == positives).sum())
                epoch_n += len(batch)

            val_loss, val_acc = _eval_on_examples(val_ds, val_specs, speech_encoder, face_encoder)
            stats = EpochStats(
                epoch=epoch,
                lr=optimizer.param_groups[0]["lr"],
                train_loss=epoch_loss / epoch_n,
                train_acc=epoch_correct / epoch_n,
                val_loss=val_loss,
                val_acc=val_acc,
                decays=schedule.decays,
            )
            history.append(stats)
            log_fh.write(stats.to_json() + "\n")
            log_fh.flush()

            decayed, stop = schedule.update(val_loss)
            if decayed:
                for group in optimizer.param_groups:
                    group["lr"] = schedule.lr
            if stop:
                stopped = "max_decays"

            meta = {
                "config": {"mode": cfg.mode, "k": cfg.k, "batch_size": batch_size},
                "epoch": epoch,
                "schedule": schedule.state(),
                "optimizer": optimizer.state_dict(),
                "train_rng_state": rngs["train"].bit_generator.state,
                "torch_rng_state": torch.get_rng_state().tolist(),
            }
            save_checkpoint(
                last_path, "inference",
                {"speech_encoder": speech_encoder, "face_encoder": face_encoder},
                meta=meta,
            )
            if stopped == "max_decays":
                break

    save_checkpoint(
        ckpt_path, "inference",
        {"speech_encoder": speech_encoder, "face_encoder": face_encoder},
        meta={"epochs_run": len(history), "stopped": stopped,
              "mode": cfg.mode, "k": cfg.k},
    )
    return TrainResult(checkpoint_path=ckpt_path, log_path=log_path,
                       history=history, stopped_reason=stopped)


def load_inference_encoders(path: str) -> tuple[SpeechEncoder, FaceEncoder]:
    payload = load_checkpoint(path, expected_kind="inference")
    speech = SpeechEncoder.from_descriptor(payload["arch"]["speech_encoder"])
    face = FaceEncoder.from_descriptor(payload["arch"]["face_encoder"])
    restore_module(payload, "speech_encoder", speech)
    restore_module(payload, "face_encoder", face)
    speech.eval()
    face.eval()
    return speech, face


def evaluate_matching(
    speech_encoder: SpeechEncoder,
    face_encoder: FaceEncoder,
    dataset: ClipDataset,
    k: int,
    mode: str,
    rng: np.random.Generator,
    n_repeats: int = 5,
    n_examples: int | None = None,
) -> MatchingEvalReport:
    """Top-1 accuracy averaged over independent negative resamplings.

    K and mode may differ from the training configuration.  Each repeat
    walks every clip (or ``n_examples`` random clips) as the positive and
    redraws its negatives.
    """
    if len(dataset) < k:
        raise InsufficientDataError(f"need >= {k} clips for {k}-way evaluation")
    accs = []
    n_eval = n_examples or len(dataset)
    for _ in range(n_repeats):
        if n_examples is None:
            positives = np.arange(len(dataset))
        else:
            positives = rng.integers(0, len(dataset), size=n_examples)
        specs = [
            sample_example_spec(dataset, k, mode, rng, positive_index=int(i))
            for i in positives
        ]
        _, acc = _eval_on_examples(dataset, specs, speech_encoder, face_encoder)
        accs.append(acc)
    accs_arr = np.asarray(accs)
    return MatchingEvalReport(
        mode=mode,
        k=k,
        n_repeats=n_repeats,
        n_examples=int(n_eval),
        mean_acc=float(accs_arr.mean()),
        std_acc=float(accs_arr.std(ddof=1)) if n_repeats > 1 else 0.0,
        per_repeat=[float(a) for a in accs],
    )
