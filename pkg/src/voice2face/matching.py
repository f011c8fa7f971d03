"""K-way cross-modal identity matching.

The probability that candidate j matches the anchor is the softmax over
inner products of the anchor embedding with each candidate embedding.
Embeddings are used raw (no L2 normalization); cosine distance is an
evaluation-time metric only.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import torch
import torch.nn.functional as F

from .config import VF, FV
from .errors import InvalidInputError
from .data.sampling import MatchingExample
from .nets.face import FaceEncoder
from .nets.speech import SpeechEncoder


def stable_softmax(logits: np.ndarray) -> np.ndarray:
    """Softmax with max subtraction; safe for |logits| up to ~1e300."""
    logits = np.asarray(logits, dtype=np.float64)
    shifted = logits - logits.max(axis=-1, keepdims=True)
    exp = np.exp(shifted)
    return exp / exp.sum(axis=-1, keepdims=True)


@dataclass
class MatchResult:
    probabilities: np.ndarray  # length K, sums to 1
    predicted_index: int       # argmax, ties broken by lowest index
    positive_index: int | None
    mode: str | None = None

    @property
    def correct(self) -> bool:
        if self.positive_index is None:
            raise InvalidInputError("no positive_index recorded")
        return self.predicted_index == self.positive_index


def match_probabilities(
    anchor: np.ndarray,
    candidates,
    positive_index: int | None = None,
    mode: str | None = None,
) -> MatchResult:
    """Eq.-style matching distribution over candidates for one anchor."""
    anchor = np.asarray(anchor, dtype=np.float64)
    cand = np.asarray(candidates, dtype=np.float64)
    if cand.ndim == 1:
        cand = cand[None, :]
    if cand.shape[0] == 0:
        raise InvalidInputError("candidates must be non-empty")
    if anchor.ndim != 1 or cand.ndim != 2 or cand.shape[1] != anchor.shape[0]:
        raise InvalidInputError(
            f"dimension mismatch: anchor {anchor.shape}, candidates {cand.shape}"
        )
    probs = stable_softmax(cand @ anchor)
    return MatchResult(
        probabilities=probs,
        predicted_index=int(np.argmax(probs)),
        positive_index=positive_index,
        mode=mode,
    )


def kway_logits(anchor_emb: torch.Tensor, candidate_embs: torch.Tensor) -> torch.Tensor:
    """Inner products: [B, D] anchors x [B, K, D] candidates -> [B, K]."""
    if anchor_emb.dim() != 2 or candidate_embs.dim() != 3:
        raise InvalidInputError("expected [B, D] anchors and [B, K, D] candidates")
    if anchor_emb.shape[0] != candidate_embs.shape[0] or anchor_emb.shape[1] != candidate_embs.shape[2]:
        raise InvalidInputError(
            f"shape mismatch: {tuple(anchor_emb.shape)} vs {tuple(candidate_embs.shape)}"
        )
    return torch.einsum("bd,bkd->bk", anchor_emb, candidate_embs)


def matching_loss_from_logits(logits: torch.Tensor, positive_index: torch.Tensor) -> torch.Tensor:
    """Mean negative log matching probability of the positive candidate."""
    log_probs = F.log_softmax(logits, dim=-1)
    picked = log_probs.gather(1, positive_index.view(-1, 1)).squeeze(1)
    return -picked.mean()


def _stack_examples(
    batch: list[MatchingExample],
) -> tuple[str, torch.Tensor, torch.Tensor, torch.Tensor]:
    if not batch:
        raise InvalidInputError("batch must be non-empty")
    mode = batch[0].mode
    ks = {len(ex.candidates) for ex in batch}
    if len(ks) != 1:
        raise InvalidInputError(f"mixed K within one batch: {sorted(ks)}")
    if any(ex.mode != mode for ex in batch):
        raise InvalidInputError("mixed modes within one batch")
    if mode == VF:
        anchors = np.stack([ex.anchor.samples for ex in batch])
        cands = np.stack([np.stack([c.pixels for c in ex.candidates]) for ex in batch])
    elif mode == FV:
        anchors = np.stack([ex.anchor.pixels for ex in batch])
        cands = np.stack([np.stack([c.samples for c in ex.candidates]) for ex in batch])
    else:
        raise InvalidInputError(f"unknown mode {mode!r}")
    positives = torch.tensor([ex.positive_index for ex in batch], dtype=torch.long)
    return mode, torch.from_numpy(anchors), torch.from_numpy(cands), positives


def batch_logits(
    batch: list[MatchingExample],
    speech_encoder: SpeechEncoder,
    face_encoder: FaceEncoder,
) -> tuple[torch.Tensor, torch.Tensor]:
    """Differentiable [B, K] logits and positive indices for a batch."""
    mode, anchors, cands, positives = _stack_examples(batch)
    b, k = cands.shape[0], cands.shape[1]
    if mode == VF:
        anchor_emb = speech_encoder(anchors)
        cand_emb = face_encoder(cands.reshape(b * k, *cands.shape[2:])).reshape(b, k, -1)
    else:
        anchor_emb = face_encoder(anchors)
        cand_emb = speech_encoder(cands.reshape(b * k, cands.shape[2])).reshape(b, k, -1)
    return kway_logits(anchor_emb, cand_emb), positives


def matching_loss(
    batch: list[MatchingExample],
    speech_encoder: SpeechEncoder,
    face_encoder: FaceEncoder,
) -> torch.Tensor:
    """Cross-entropy of the K-way matching distribution on one batch."""
    logits, positives = batch_logits(batch, speech_encoder, face_encoder)
    return matching_loss_from_logits(logits, positives)
