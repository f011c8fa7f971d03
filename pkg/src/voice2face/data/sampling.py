"""K-way cross-modal example sampling.

An example pairs an anchor from one modality with K candidates from the
other; exactly one candidate (the positive) comes from the anchor's clip,
sampled at a different time slot, and the negatives come from K-1 other
clips chosen uniformly at random.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from ..config import VF, FV
from ..errors import InsufficientDataError, InvalidInputError
from .audio import AudioWaveform
from .images import FaceImage
from .manifest import ClipDataset


@dataclass
class MatchingExample:
    mode: str  # VF: audio anchor, face candidates; FV: face anchor, audio candidates
    anchor: Union[AudioWaveform, FaceImage]
    candidates: list  # K elements of the opposite modality
    positive_index: int
    anchor_clip_id: str
    candidate_clip_ids: list[str] = field(default_factory=list)


@dataclass
class ValidationExample:
    """Index-level description of an example, serializable so validation
    negatives can be fixed once and reused every epoch."""

    mode: str
    anchor_clip_id: str
    anchor_slot: int
    candidate_clip_ids: list[str]
    candidate_slots: list[int]
    positive_index: int

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "anchor_clip_id": self.anchor_clip_id,
            "anchor_slot": self.anchor_slot,
            "candidate_clip_ids": self.candidate_clip_ids,
            "candidate_slots": self.candidate_slots,
            "positive_index": self.positive_index,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ValidationExample":
        return cls(**data)


def _check_kway(dataset: ClipDataset, k: int) -> None:
    if k < 2:
        raise InvalidInputError(f"k must be >= 2, got {k}")
    if len(dataset) < k:
        raise InsufficientDataError(
            f"need at least {k} clips for {k}-way sampling, have {len(dataset)}"
        )


def sample_example_spec(
    dataset: ClipDataset,
    k: int,
    mode: str,
    rng: np.random.Generator,
    positive_index: Optional[int] = None,
) -> ValidationExample:
    """Draw the index-level structure of one K-way example.  The positive
    clip is random unless ``positive_index`` pins it (evaluation sweeps)."""
    _check_kway(dataset, k)
    if mode not in (VF, FV):
        raise InvalidInputError(f"mode must be '{VF}' or '{FV}', got {mode!r}")
    pos = int(rng.integers(0, len(dataset))) if positive_index is None else positive_index
    n_slots = dataset.n_slots(pos)
    if n_slots < 2:
        raise InsufficientDataError(
            f"clip {dataset.records[pos].clip_id} has {n_slots} slot(s); "
            "positive pairs need at least 2 distinct time slots"
        )
    # Positive pair: anchor and candidate from different time slots.
    anchor_slot, pos_slot = rng.choice(n_slots, size=2, replace=False)
    others = [i for i in range(len(dataset)) if i != pos]
    neg_idx = rng.choice(len(others), size=k - 1, replace=False)
    negatives = [others[i] for i in neg_idx]
    positive_index = int(rng.integers(0, k))
    candidate_ids: list[str] = []
    candidate_slots: list[int] = []
    neg_iter = iter(negatives)
    for j in range(k):
        if j == positive_index:
            candidate_ids.append(dataset.records[pos].clip_id)
            candidate_slots.append(int(pos_slot))
        else:
            n = next(neg_iter)
            candidate_ids.append(dataset.records[n].clip_id)
            candidate_slots.append(int(rng.integers(0, dataset.n_slots(n))))
    return ValidationExample(
        mode=mode,
        anchor_clip_id=dataset.records[pos].clip_id,
        anchor_slot=int(anchor_slot),
        candidate_clip_ids=candidate_ids,
        candidate_slots=candidate_slots,
        positive_index=positive_index,
    )


def realize_example(
    dataset: ClipDataset,
    spec: ValidationExample,
    rng: np.random.Generator | None = None,
    augment: bool = False,
) -> MatchingExample:
    """Load media for one example spec.  Augmentation (face flips) only
    applies to the image side and requires an rng."""
    anchor_idx = dataset.index_of(spec.anchor_clip_id)
    if spec.mode == VF:
        anchor = dataset.audio_window(anchor_idx, spec.anchor_slot)
        candidates = [
            dataset.frame(dataset.index_of(cid), slot, rng=rng, augment=augment)
            for cid, slot in zip(spec.candidate_clip_ids, spec.candidate_slots)
        ]
    else:
        anchor = dataset.frame(anchor_idx, spec.anchor_slot, rng=rng, augment=augment)
        candidates = [
            dataset.audio_window(dataset.index_of(cid), slot)
            for cid, slot in zip(spec.candidate_clip_ids, spec.candidate_slots)
        ]
    return MatchingExample(
        mode=spec.mode,
        anchor=anchor,
        candidates=candidates,
        positive_index=spec.positive_index,
        anchor_clip_id=spec.anchor_clip_id,
        candidate_clip_ids=list(spec.candidate_clip_ids),
    )


def sample_kway_batch(
    dataset: ClipDataset,
    k: int,
    mode: str,
    rng: np.random.Generator,
    batch_size: int,
    augment: bool = False,
) -> list[MatchingExample]:
    """Sample a batch of K-way examples with per-example negatives."""
    _check_kway(dataset, k)
    return [
        realize_example(dataset, sample_example_spec(dataset, k, mode, rng),
                        rng=rng, augment=augment)
        for _ in range(batch_size)
    ]


def build_validation_examples(
    dataset: ClipDataset, k: int, mode: str, n_examples: int, rng: np.random.Generator
) -> list[ValidationExample]:
    """Pre-draw fixed validation examples (negatives included) so the
    validation loss is comparable across epochs."""
    _check_kway(dataset, k)
    return [sample_example_spec(dataset, k, mode, rng) for _ in range(n_examples)]
