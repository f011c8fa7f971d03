"""Quantitative analyses of the trained generator.

Three experiment families: (1) correlation between condition distances
and generated-face embedding distances, (2) preference/consistency tests
that judge generated samples with the trained matching networks, and
(3) retrieval of a speaker's real images using a generated face as the
query.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import torch

from ..errors import (
    ConfigurationError,
    InsufficientDataError,
    InvalidInputError,
    InvalidQueryError,
)
from ..data.manifest import ClipDataset
from ..gan.latent import sample_latent, truncate_latent
from ..nets.face import FaceEncoder
from ..nets.generator import Generator
from ..nets.speech import SpeechEncoder
from .metrics import CorrelationResult, cosine_distance_rows, pairwise_distances, pearson_correlation
from .reference import get_reference_results

_CHUNK = 32

VS_GROUND_TRUTH = "vs_ground_truth"
VS_OTHER_GENERATOR = "vs_other_generator"


def _embed_speech(
    dataset: ClipDataset, speech_encoder: SpeechEncoder, items: list[tuple[int, int]]
) -> np.ndarray:
    """Embeddings for (clip_index, slot) pairs, chunked, eval mode."""
    speech_encoder.eval()
    out = []
    with torch.no_grad():
        for start in range(0, len(items), _CHUNK):
            chunk = items[start : start + _CHUNK]
            waves = np.stack([dataset.audio_window(i, s).samples for i, s in chunk])
            out.append(speech_encoder(torch.from_numpy(waves)).numpy())
    return np.concatenate(out)


def _embed_faces(face_encoder: FaceEncoder, images: np.ndarray) -> np.ndarray:
    face_encoder.eval()
    out = []
    with torch.no_grad():
        for start in range(0, len(images), _CHUNK):
            out.append(face_encoder(torch.from_numpy(images[start : start + _CHUNK])).numpy())
    return np.concatenate(out)


def _generate(generator: Generator, z: np.ndarray, c: np.ndarray) -> np.ndarray:
    generator.eval()
    out = []
    with torch.no_grad():
        for start in range(0, len(z), _CHUNK):
            out.append(
                generator(
                    torch.from_numpy(z[start : start + _CHUNK]),
                    torch.from_numpy(c[start : start + _CHUNK]),
                ).numpy()
            )
    return np.concatenate(out)


def _latents(rng: np.random.Generator, n: int, dim: int, truncation: float | None) -> np.ndarray:
    z = sample_latent(rng, n, dim)
    if truncation is not None:
        z = truncate_latent(z, truncation, rng)
    return z


def _random_slot(dataset: ClipDataset, i: int, rng: np.random.Generator) -> int:
    return int(rng.integers(0, dataset.n_slots(i)))


@dataclass
class Qta1Report:
    correlation: CorrelationResult
    n_pairs: int
    truncation: float | None
    condition_distances: list[float] = field(default_factory=list)
    face_distances: list[float] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "experiment": "qta1",
            "correlation": self.correlation.to_dict(),
            "n_pairs": self.n_pairs,
            "truncation": self.truncation,
            "scatter": {
                "condition_distances": self.condition_distances,
                "face_distances": self.face_distances,
            },
        }


def qta1_condition_correlation(
    generator: Generator,
    face_encoder: FaceEncoder,
    speech_encoder: SpeechEncoder,
    dataset: ClipDataset,
    n_pairs: int,
    rng: np.random.Generator,
    truncation: float | None = None,
) -> Qta1Report:
    """Correlation between condition cosine distances and the cosine
    distances of the generated faces' embeddings, over random pairs of
    distinct clips with independently drawn latents."""
    if n_pairs < 3:
        raise InsufficientDataError("need at least 3 pairs for a correlation")
    if len(dataset) < 2:
        raise InsufficientDataError("need at least 2 distinct clips")
    first, second = [], []
    for _ in range(n_pairs):
        i, j = rng.choice(len(dataset), size=2, replace=False)
        first.append((int(i), _random_slot(dataset, int(i), rng)))
        second.append((int(j), _random_slot(dataset, int(j), rng)))
    c = _embed_speech(dataset, speech_encoder, first + second)
    z = _latents(rng, 2 * n_pairs, generator.config.z_dim, truncation)
    faces = _generate(generator, z, c)
    fe = _embed_faces(face_encoder, faces)
    cd_condition = cosine_distance_rows(c[:n_pairs], c[n_pairs:])
    cd_face = cosine_distance_rows(fe[:n_pairs], fe[n_pairs:])
    corr = pearson_correlation(cd_condition, cd_face)
    return Qta1Report(
        correlation=corr,
        n_pairs=n_pairs,
        truncation=truncation,
        condition_distances=[float(v) for v in cd_condition],
        face_distances=[float(v) for v in cd_face],
    )


@dataclass
class RegimeStats:
    mean_condition_cd: float
    mean_face_cd: float
    n_pairs: int

    def to_dict(self) -> dict:
        return {
            "mean_condition_cd": self.mean_condition_cd,
            "mean_face_cd": self.mean_face_cd,
            "n_pairs": self.n_pairs,
        }


@dataclass
class AttributeControlReport:
    same: RegimeStats
    different: RegimeStats
    truncation: float | None
    full_scale_reference: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "experiment": "qta1_control",
            "same_attribute": self.same.to_dict(),
            "different_attribute": self.different.to_dict(),
            "truncation": self.truncation,
            "full_scale_reference": self.full_scale_reference,
        }


def qta1_attribute_control(
    generator: Generator,
    face_encoder: FaceEncoder,
    speech_encoder: SpeechEncoder,
    dataset: ClipDataset,
    n_pairs: int,
    rng: np.random.Generator,
    truncation: float | None = None,
) -> AttributeControlReport:
    """Mean condition/face distances for same-attribute vs
    different-attribute speaker pairs (binary attribute labels)."""
    by_attr: dict[str, list[int]] = {}
    for idx, rec in enumerate(dataset.records):
        if rec.attribute is not None:
            by_attr.setdefault(rec.attribute, []).append(idx)
    if not by_attr:
        raise InsufficientDataError("dataset has no attribute labels")
    same_pool = [v for v in by_attr.values() if len(v) >= 2]
    if not same_pool:
        raise InsufficientDataError("same-attribute regime needs an attribute with >= 2 clips")
    if len(by_attr) < 2:
        raise InsufficientDataError("different-attribute regime needs two attribute values")

    def regime_pairs(same: bool) -> list[tuple[int, int]]:
        pairs = []
        attrs = sorted(by_attr)
        for _ in range(n_pairs):
            if same:
                group = same_pool[int(rng.integers(0, len(same_pool)))]
                i, j = rng.choice(group, size=2, replace=False)
            else:
                a, b = rng.choice(len(attrs), size=2, replace=False)
                i = int(rng.choice(by_attr[attrs[int(a)]]))
                j = int(rng.choice(by_attr[attrs[int(b)]]))
            pairs.append((int(i), int(j)))
        return pairs

    def regime_stats(pairs: list[tuple[int, int]]) -> RegimeStats:
        first = [(i, _random_slot(dataset, i, rng)) for i, _ in pairs]
        second = [(j, _random_slot(dataset, j, rng)) for _, j in pairs]
        c = _embed_speech(dataset, speech_encoder, first + second)
        z = _latents(rng, 2 * len(pairs), generator.config.z_dim, truncation)
        fe = _embed_faces(face_encoder, _generate(generator, z, c))
        n = len(pairs)
        return RegimeStats(
            mean_condition_cd=float(cosine_distance_rows(c[:n], c[n:]).mean()),
            mean_face_cd=float(cosine_distance_rows(fe[:n], fe[n:]).mean()),
            n_pairs=n,
        )

    return AttributeControlReport(
        same=regime_stats(regime_pairs(same=True)),
        different=regime_stats(regime_pairs(same=False)),
        truncation=truncation,
        full_scale_reference=get_reference_results()["condition_correlation_attribute_control"],
    )


@dataclass
class PreferenceReport:
    experiment: str
    fraction: float
    wins: int
    ties: int
    n: int
    truncation: float | None
    full_scale_reference: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "experiment": self.experiment,
            "fraction": self.fraction,
            "wins": self.wins,
            "ties": self.ties,
            "n": self.n,
            "truncation": self.truncation,
            "full_scale_reference": self.full_scale_reference,
        }


def qta2_vf_preference(
    generator: Generator,
    speech_encoder: SpeechEncoder,
    face_encoder: FaceEncoder,
    dataset: ClipDataset,
    comparator: str,
    rng: np.random.Generator,
    other_generator: Generator | None = None,
    n_items: int | None = None,
    truncation: float | None = None,
) -> PreferenceReport:
    """Fraction of items where image A beats image B in matching
    probability against the item's speech.  A is this generator's sample;
    B is the ground-truth frame or a second generator's sample (same
    latent).  Ties never count as wins."""
    if comparator not in (VS_GROUND_TRUTH, VS_OTHER_GENERATOR):
        raise InvalidInputError(f"unknown comparator {comparator!r}")
    if comparator == VS_OTHER_GENERATOR and other_generator is None:
        raise ConfigurationError("comparator vs_other_generator needs other_generator")
    if len(dataset) == 0:
        raise InsufficientDataError("empty test set")
    n = n_items or len(dataset)
    clips, speech_items, gt_frames = [], [], []
    for t in range(n):
        i = t % len(dataset)
        n_slots = dataset.n_slots(i)
        if n_slots < 2:
            raise InsufficientDataError("clips need >= 2 time slots for positive pairs")
        frame_slot, audio_slot = rng.choice(n_slots, size=2, replace=False)
        clips.append(i)
        speech_items.append((i, int(audio_slot)))
        gt_frames.append(dataset.frame(i, int(frame_slot)).pixels)
    se = _embed_speech(dataset, speech_encoder, speech_items)
    z = _latents(rng, n, generator.config.z_dim, truncation)
    img_a = _generate(generator, z, se)
    if comparator == VS_GROUND_TRUTH:
        img_b = np.stack(gt_frames)
    else:
        img_b = _generate(other_generator, z, se)
    fe_a = _embed_faces(face_encoder, img_a)
    fe_b = _embed_faces(face_encoder, img_b)
    logit_a = np.sum(se.astype(np.float64) * fe_a.astype(np.float64), axis=1)
    logit_b = np.sum(se.astype(np.float64) * fe_b.astype(np.float64), axis=1)
    wins = int(np.sum(logit_a > logit_b))
    ties = int(np.sum(logit_a == logit_b))
    ref = get_reference_results()["inference_network_preference"]
    return PreferenceReport(
        experiment=f"qta2_vf_{comparator}",
        fraction=wins / n,
        wins=wins,
        ties=ties,
        n=n,
        truncation=truncation,
        full_scale_reference=ref,
    )


def qta2_fv_accuracy(
    generator: Generator,
    speech_encoder: SpeechEncoder,
    face_encoder: FaceEncoder,
    dataset: ClipDataset,
    rng: np.random.Generator,
    n_items: int | None = None,
    truncation: float | None = None,
) -> PreferenceReport:
    """Accuracy of the matching networks at picking the source speech of
    a generated face against one negative speech segment."""
    if len(dataset) < 2:
        raise InsufficientDataError("need >= 2 clips (one positive, one negative)")
    n = n_items or len(dataset)
    pos_items, neg_items = [], []
    for t in range(n):
        i = t % len(dataset)
        j = int(rng.choice([k for k in range(len(dataset)) if k != i]))
        pos_items.append((i, _random_slot(dataset, i, rng)))
        neg_items.append((j, _random_slot(dataset, j, rng)))
    se = _embed_speech(dataset, speech_encoder, pos_items + neg_items)
    se_pos, se_neg = se[:n], se[n:]
    z = _latents(rng, n, generator.config.z_dim, truncation)
    fe = _embed_faces(face_encoder, _generate(generator, z, se_pos)).astype(np.float64)
    logit_pos = np.sum(se_pos.astype(np.float64) * fe, axis=1)
    logit_neg = np.sum(se_neg.astype(np.float64) * fe, axis=1)
    wins = int(np.sum(logit_pos > logit_neg))
    ties = int(np.sum(logit_pos == logit_neg))
    ref = get_reference_results()["inference_network_preference"]
    return PreferenceReport(
        experiment="qta2_fv",
        fraction=wins / n,
        wins=wins,
        ties=ties,
        n=n,
        truncation=truncation,
        full_scale_reference=ref,
    )


@dataclass
class RetrievalReport:
    metric: str
    top_k_acc: dict[int, float]  # K -> percentage
    gallery_size: int
    n_queries: int
    truncation: float | None
    full_scale_reference: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "experiment": "qta3",
            "metric": self.metric,
            "top_k_acc": {str(k): v for k, v in self.top_k_acc.items()},
            "gallery_size": self.gallery_size,
            "n_queries": self.n_queries,
            "truncation": self.truncation,
            "full_scale_reference": self.full_scale_reference,
        }


def retrieval_hits(
    query_embs: np.ndarray,
    query_speakers: list[str],
    gallery_embs: np.ndarray,
    gallery_speakers: list[str],
    metric: str,
    ks: tuple[int, ...],
) -> dict[int, float]:
    """Top-K hit rates: a hit when any of the speaker's gallery images
    ranks inside the top K by the metric (ties broken by gallery index)."""
    dists = pairwise_distances(query_embs, gallery_embs, metric)
    order = np.argsort(dists, axis=1, kind="stable")
    gallery_speakers_arr = np.asarray(gallery_speakers)
    hits = {k: 0 for k in ks}
    for q, speaker in enumerate(query_speakers):
        ranked = gallery_speakers_arr[order[q]]
        for k in ks:
            if (ranked[:k] == speaker).any():
                hits[k] += 1
    return {k: 100.0 * hits[k] / len(query_speakers) for k in ks}


def qta3_retrieval(
    generator: Generator,
    face_encoder: FaceEncoder,
    speech_encoder: SpeechEncoder,
    gallery_dataset: ClipDataset,
    rng: np.random.Generator,
    metrics: tuple[str, ...] = ("l1", "l2", "cd"),
    ks: tuple[int, ...] = (1, 2, 5, 10),
    n_queries: int | None = None,
    truncation: float | None = 1.0,
    query_speakers: list[str] | None = None,
) -> dict[str, RetrievalReport]:
    """Generate a face per query speech segment and retrieve the true
    speaker's real images from the gallery under each distance metric."""
    gallery_items: list[tuple[int, int]] = []
    gallery_speakers: list[str] = []
    for idx, rec in enumerate(gallery_dataset.records):
        for f in range(len(rec.frame_paths)):
            gallery_items.append((idx, f))
            gallery_speakers.append(rec.effective_identity)
    speakers_in_gallery = sorted(set(gallery_speakers))
    clips_by_speaker: dict[str, list[int]] = {}
    for idx, rec in enumerate(gallery_dataset.records):
        clips_by_speaker.setdefault(rec.effective_identity, []).append(idx)

    if query_speakers is None:
        n = n_queries or len(speakers_in_gallery)
        query_speakers = [speakers_in_gallery[t % len(speakers_in_gallery)] for t in range(n)]
    for speaker in query_speakers:
        if speaker not in clips_by_speaker:
            raise InvalidQueryError(f"query speaker {speaker!r} absent from gallery")

    gallery_images = np.stack(
        [gallery_dataset.frame(i, f).pixels for i, f in gallery_items]
    )
    gallery_embs = _embed_faces(face_encoder, gallery_images).astype(np.float64)

    speech_items = []
    for speaker in query_speakers:
        i = int(rng.choice(clips_by_speaker[speaker]))
        speech_items.append((i, _random_slot(gallery_dataset, i, rng)))
    c = _embed_speech(gallery_dataset, speech_encoder, speech_items)
    z = _latents(rng, len(query_speakers), generator.config.z_dim, truncation)
    query_embs = _embed_faces(face_encoder, _generate(generator, z, c)).astype(np.float64)

    ref = get_reference_results()["retrieval_top_k"]
    reports = {}
    for metric in metrics:
        acc = retrieval_hits(query_embs, query_speakers, gallery_embs, gallery_speakers, metric, ks)
        reports[metric] = RetrievalReport(
            metric=metric,
            top_k_acc=acc,
            gallery_size=len(gallery_items),
            n_queries=len(query_speakers),
            truncation=truncation,
            full_scale_reference=ref,
        )
    return reports
