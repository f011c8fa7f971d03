"""Dataset manifests: JSON-lines of clip records plus a loader facade.

One line per clip: ``clip_id``, ``audio_path``, ``frame_paths``,
``identity_id`` (null in fully self-supervised mode, in which case each
clip is its own identity), and an optional binary ``attribute`` used by
the attribute-controlled evaluation.  Paths are relative to the manifest
root directory.
"""

from __future__ import annotations

import csv
import json
import os
from dataclasses import dataclass, field
from typing import Iterable, Optional

import numpy as np

from ..config import AudioConfig, ImageConfig
from ..errors import InvalidInputError
from .audio import AudioWaveform, extract_window, load_wav
from .images import FaceImage, load_png, preprocess_image


@dataclass
class ClipRecord:
    clip_id: str
    audio_path: str
    frame_paths: list[str]
    identity_id: Optional[str] = None
    attribute: Optional[str] = None

    def __post_init__(self) -> None:
        if not self.frame_paths:
            raise InvalidInputError(f"clip {self.clip_id}: frame_paths is empty")

    @property
    def effective_identity(self) -> str:
        # Self-supervised convention: a clip with no identity label is
        # treated as its own identity.
        return self.identity_id if self.identity_id is not None else self.clip_id

    def to_json(self) -> str:
        data = {
            "clip_id": self.clip_id,
            "audio_path": self.audio_path,
            "frame_paths": self.frame_paths,
            "identity_id": self.identity_id,
        }
        if self.attribute is not None:
            data["attribute"] = self.attribute
        return json.dumps(data, sort_keys=False)

    @classmethod
    def from_json(cls, line: str) -> "ClipRecord":
        data = json.loads(line)
        return cls(
            clip_id=data["clip_id"],
            audio_path=data["audio_path"],
            frame_paths=list(data["frame_paths"]),
            identity_id=data.get("identity_id"),
            attribute=data.get("attribute"),
        )


def load_manifest(path: str) -> list[ClipRecord]:
    records = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if line:
                records.append(ClipRecord.from_json(line))
    return records


def save_manifest(records: Iterable[ClipRecord], path: str) -> None:
    with open(path, "w") as fh:
        for rec in records:
            fh.write(rec.to_json() + "\n")


def import_csv_manifest(csv_path: str) -> list[ClipRecord]:
    """Convenience importer: columns clip_id, audio_path, frame_paths
    (semicolon-separated), identity_id (optional), attribute (optional)."""
    records = []
    with open(csv_path, newline="") as fh:
        for row in csv.DictReader(fh):
            records.append(
                ClipRecord(
                    clip_id=row["clip_id"],
                    audio_path=row["audio_path"],
                    frame_paths=[p for p in row["frame_paths"].split(";") if p],
                    identity_id=row.get("identity_id") or None,
                    attribute=row.get("attribute") or None,
                )
            )
    return records


def split_clips(
    records: list[ClipRecord],
    val_fraction: float,
    test_fraction: float,
    rng: np.random.Generator,
) -> dict[str, list[ClipRecord]]:
    """Shuffle clips and carve out validation and test subsets."""
    if val_fraction + test_fraction >= 1.0:
        raise InvalidInputError("val_fraction + test_fraction must be < 1")
    order = rng.permutation(len(records))
    n_val = int(round(len(records) * val_fraction))
    n_test = int(round(len(records) * test_fraction))
    val_idx = order[:n_val]
    test_idx = order[n_val : n_val + n_test]
    train_idx = order[n_val + n_test :]
    return {
        "train": [records[i] for i in sorted(train_idx)],
        "val": [records[i] for i in sorted(val_idx)],
        "test": [records[i] for i in sorted(test_idx)],
    }


class ClipDataset:
    """Clip records bound to a root directory, with decoded-media caching.

    The manifest is immutable after load; all sampling draws from
    caller-provided rngs, so instances are safe to share across workers.
    """

    def __init__(
        self,
        records: list[ClipRecord],
        root: str,
        audio_config: AudioConfig,
        image_config: ImageConfig,
        cache: bool = True,
    ) -> None:
        self.records = list(records)
        self.root = root
        self.audio_config = audio_config
        self.image_config = image_config
        self._cache: dict[str, object] | None = {} if cache else None
        self._by_clip_id = {rec.clip_id: i for i, rec in enumerate(self.records)}

    @classmethod
    def from_manifest(
        cls,
        manifest_path: str,
        audio_config: AudioConfig,
        image_config: ImageConfig,
        cache: bool = True,
    ) -> "ClipDataset":
        records = load_manifest(manifest_path)
        return cls(records, os.path.dirname(os.path.abspath(manifest_path)),
                   audio_config, image_config, cache)

    def __len__(self) -> int:
        return len(self.records)

    def index_of(self, clip_id: str) -> int:
        return self._by_clip_id[clip_id]

    def subset(self, records: list[ClipRecord]) -> "ClipDataset":
        sub = ClipDataset(records, self.root, self.audio_config, self.image_config,
                          cache=self._cache is not None)
        sub._cache = self._cache  # share decoded media across views
        return sub

    def n_slots(self, index: int) -> int:
        return len(self.records[index].frame_paths)

    def _raw_audio(self, rec: ClipRecord) -> tuple[np.ndarray, int]:
        key = "a:" + rec.audio_path
        if self._cache is not None and key in self._cache:
            return self._cache[key]  # type: ignore[return-value]
        data = load_wav(os.path.join(self.root, rec.audio_path))
        if self._cache is not None:
            self._cache[key] = data
        return data

    def _raw_frame(self, rec: ClipRecord, frame_idx: int) -> np.ndarray:
        key = "f:" + rec.frame_paths[frame_idx]
        if self._cache is not None and key in self._cache:
            return self._cache[key]  # type: ignore[return-value]
        data = load_png(os.path.join(self.root, rec.frame_paths[frame_idx]))
        if self._cache is not None:
            self._cache[key] = data
        return data

    def audio_window(self, index: int, slot: int) -> AudioWaveform:
        rec = self.records[index]
        samples, rate = self._raw_audio(rec)
        return extract_window(samples, rate, self.audio_config, slot, self.n_slots(index))

    def frame(
        self,
        index: int,
        frame_idx: int,
        rng: np.random.Generator | None = None,
        augment: bool = False,
    ) -> FaceImage:
        rec = self.records[index]
        raw = self._raw_frame(rec, frame_idx)
        return preprocess_image(raw, self.image_config, rng=rng, augment=augment)
